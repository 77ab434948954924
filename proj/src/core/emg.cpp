#include "core/emg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace pbench {

using nlohmann::json;

const char* MuscleName(Muscle m) {
  return m == Muscle::kGastrocnemius ? "gastrocnemius" : "oblique_abdominal";
}

const char* SideName(Side s) { return s == Side::kLeft ? "left" : "right"; }

void EmgRecord::Validate() const {
  if (!(sample_rate >= 1000.0)) {
    throw InputError("EMG sample rate must be >= 1000 Hz (got " +
                     std::to_string(sample_rate) + ")");
  }
  if (channels.empty()) throw InputError("EMG record has no channels");
  const std::size_t n = channels.front().samples.size();
  for (const auto& c : channels) {
    if (c.samples.size() != n) {
      throw InputError("EMG channel '" + c.name + "' length differs from the others");
    }
    for (double v : c.samples) {
      if (!std::isfinite(v)) throw InputError("EMG channel '" + c.name + "' contains NaN/inf");
    }
  }
}

// ---------------------------------------------------------------------------
// Filter design

namespace {

// (sqrt(2) - 1)^(1 / 2n): per-pass cutoff shift that puts the two-pass
// -3 dB point on the requested frequency.
double ZeroPhaseCorrection(int n) {
  return std::pow(std::sqrt(2.0) - 1.0, 1.0 / (2.0 * n));
}

// Bilinear-transformed Butterworth cascade of order n; k = tan(pi fc / fs)
// after correction.
std::vector<Biquad> ButterworthSections(int n, double k, bool highpass) {
  std::vector<Biquad> out;
  for (int i = 0; i < n / 2; ++i) {
    const double alpha = 2.0 * std::sin(kPi * (2.0 * i + 1.0) / (2.0 * n));
    const double a0 = 1.0 + alpha * k + k * k;
    Biquad q;
    if (highpass) {
      q.b0 = 1.0 / a0;
      q.b1 = -2.0 / a0;
      q.b2 = 1.0 / a0;
    } else {
      q.b0 = k * k / a0;
      q.b1 = 2.0 * k * k / a0;
      q.b2 = k * k / a0;
    }
    q.a1 = (2.0 * k * k - 2.0) / a0;
    q.a2 = (1.0 - alpha * k + k * k) / a0;
    out.push_back(q);
  }
  if (n % 2 == 1) {
    const double a0 = 1.0 + k;
    Biquad q;
    if (highpass) {
      q.b0 = 1.0 / a0;
      q.b1 = -1.0 / a0;
    } else {
      q.b0 = k / a0;
      q.b1 = k / a0;
    }
    q.a1 = (k - 1.0) / a0;
    out.push_back(q);
  }
  return out;
}

struct SectionState {
  double z1 = 0.0;
  double z2 = 0.0;
};

// Runs the cascade in place. `initial` holds per-section states for a unit
// steady input; they are scaled by `level` (the first input sample).
void RunCascade(const std::vector<Biquad>& sections, std::vector<double>& x,
                bool steady_start) {
  if (x.empty()) return;
  std::vector<SectionState> st(sections.size());
  if (steady_start) {
    double level = x.front();
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const Biquad& q = sections[s];
      const double g = q.DcGain();
      st[s].z1 = (g - q.b0) * level;
      st[s].z2 = (q.b2 - q.a2 * g) * level;
      level *= g;
    }
  }
  for (double& v : x) {
    double in = v;
    for (std::size_t s = 0; s < sections.size(); ++s) {
      const Biquad& q = sections[s];
      const double y = q.b0 * in + st[s].z1;
      st[s].z1 = q.b1 * in - q.a1 * y + st[s].z2;
      st[s].z2 = q.b2 * in - q.a2 * y;
      in = y;
    }
    v = in;
  }
}

}  // namespace

BandpassFilter::BandpassFilter(double sample_rate, double low_hz, double high_hz, int order)
    : sample_rate_(sample_rate), low_hz_(low_hz) {
  if (!(sample_rate > 2.0 * high_hz)) {
    throw ConfigError("sample rate " + std::to_string(sample_rate) +
                      " Hz must exceed twice the upper cutoff " + std::to_string(high_hz) +
                      " Hz");
  }
  if (!(low_hz > 0.0) || !(high_hz > low_hz)) {
    throw ConfigError("band-pass cutoffs must satisfy 0 < low < high");
  }
  if (order < 2 || order % 2 != 0) {
    throw ConfigError("band-pass order must be an even number >= 2");
  }
  const int n = order / 2;
  const double corr = ZeroPhaseCorrection(n);
  const double k_high = std::tan(kPi * low_hz / sample_rate) * corr;
  const double k_low = std::tan(kPi * high_hz / sample_rate) / corr;
  if (!(k_low > 0.0) || !std::isfinite(k_low)) {
    throw ConfigError("upper cutoff too close to Nyquist for a zero-phase design");
  }
  sections_ = ButterworthSections(n, k_high, true);
  auto lp = ButterworthSections(n, k_low, false);
  sections_.insert(sections_.end(), lp.begin(), lp.end());
}

std::size_t BandpassFilter::PadLength(std::size_t n) const {
  if (n < 2) return 0;
  const std::size_t minimal = 3 * (2 * sections_.size() + 1);
  const auto period = static_cast<std::size_t>(std::lround(sample_rate_ / low_hz_));
  return std::min(n - 1, std::max(minimal, period));
}

std::vector<double> BandpassFilter::Filter(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  RunCascade(sections_, y, false);
  return y;
}

std::vector<double> BandpassFilter::FiltFilt(std::span<const double> x) const {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = PadLength(n);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  RunCascade(sections_, ext, true);
  std::reverse(ext.begin(), ext.end());
  RunCascade(sections_, ext, true);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double BandpassFilter::ZeroPhasePower(double freq_hz) const {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * kPi * freq_hz / sample_rate_);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& q : sections_) {
    h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  }
  const double mag2 = std::norm(h);
  return mag2 * mag2;
}

std::vector<double> Bandpass(std::span<const double> x, double sample_rate,
                             const EmgConfig& cfg) {
  return BandpassFilter(sample_rate, cfg.low_hz, cfg.high_hz, cfg.order).FiltFilt(x);
}

EmgRecord Bandpass(const EmgRecord& record, const EmgConfig& cfg) {
  const BandpassFilter filter(record.sample_rate, cfg.low_hz, cfg.high_hz, cfg.order);
  EmgRecord out = record;
  for (auto& c : out.channels) c.samples = filter.FiltFilt(c.samples);
  return out;
}

// ---------------------------------------------------------------------------
// Envelope and loads

std::vector<double> RmsEnvelope(std::span<const double> x, double sample_rate,
                                double window_s) {
  const auto window =
      static_cast<std::size_t>(std::max<long>(1, std::lround(window_s * sample_rate)));
  const std::size_t n = x.size();
  if (n < window) {
    throw InputError("signal of " + std::to_string(n) + " samples is shorter than the " +
                     std::to_string(window) + "-sample RMS window");
  }
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + static_cast<long double>(x[i]) * x[i];
  }
  std::vector<double> env(n);
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo_raw = static_cast<std::ptrdiff_t>(i) - half;
    const std::size_t lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, lo_raw));
    const std::size_t hi = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n),
                                 lo_raw + static_cast<std::ptrdiff_t>(window)));
    const long double ss = std::max(0.0L, prefix[hi] - prefix[lo]);
    env[i] = static_cast<double>(std::sqrt(ss / static_cast<long double>(hi - lo)));
  }
  return env;
}

double Median(std::span<const double> values) {
  if (values.empty()) throw InputError("median of an empty series");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double ChannelLoad(std::span<const double> envelope) { return Median(envelope); }

RecordLoads ProcessRecord(const EmgRecord& record, const EmgConfig& cfg) {
  record.Validate();
  const BandpassFilter filter(record.sample_rate, cfg.low_hz, cfg.high_hz, cfg.order);
  RecordLoads out;
  for (const auto& c : record.channels) {
    const auto filtered = filter.FiltFilt(c.samples);
    const auto env = RmsEnvelope(filtered, record.sample_rate, cfg.window_s);
    const double load = ChannelLoad(env);
    out.channels.push_back({c.name, c.muscle, c.side, load});
    (c.muscle == Muscle::kGastrocnemius ? out.load.leg : out.load.abd) += load;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditions and ratios

const std::array<Condition, 4>& ConditionTable() {
  static const std::array<Condition, 4> kTable = {{
      {ConditionId::kA, false, 20.0, 0.0},
      {ConditionId::kB, true, 20.0, 0.0},
      {ConditionId::kC, true, 0.0, 20.0},
      {ConditionId::kD, true, 10.0, 10.0},
  }};
  return kTable;
}

const Condition& GetCondition(ConditionId id) {
  return ConditionTable()[static_cast<std::size_t>(id)];
}

char ConditionLetter(ConditionId id) { return static_cast<char>('A' + static_cast<int>(id)); }

ConditionId ConditionFromLetter(const std::string& s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'D') return static_cast<ConditionId>(s[0] - 'A');
  throw InputError("unknown condition '" + s + "' (expected A, B, C or D)");
}

namespace {

const LoadEstimate& Need(const ConditionLoads& loads, ConditionId id) {
  auto it = loads.find(id);
  if (it == loads.end()) {
    throw InputError(std::string("condition ") + ConditionLetter(id) + " is missing");
  }
  return it->second;
}

RatioPair Ratio(const ConditionLoads& loads, ConditionId num, ConditionId den) {
  const LoadEstimate& n = Need(loads, num);
  const LoadEstimate& d = Need(loads, den);
  if (!(d.leg > 0.0) || !(d.abd > 0.0)) {
    throw InputError(std::string("condition ") + ConditionLetter(den) +
                     " has a zero load and cannot be a ratio denominator");
  }
  return {n.leg / d.leg, n.abd / d.abd};
}

}  // namespace

RatioTable ConditionRatios(const ConditionLoads& loads) {
  for (ConditionId id : kAllConditions) Need(loads, id);
  RatioTable t;
  t.b_over_a = Ratio(loads, ConditionId::kB, ConditionId::kA);
  t.d_over_b = Ratio(loads, ConditionId::kD, ConditionId::kB);
  t.d_over_c = Ratio(loads, ConditionId::kD, ConditionId::kC);
  t.d_over_a = Ratio(loads, ConditionId::kD, ConditionId::kA);
  return t;
}

RatioReport BuildRatioReport(const std::vector<SubjectLoads>& subjects) {
  if (subjects.empty()) throw InputError("no subjects in the EMG report");
  RatioReport r;
  for (const auto& s : subjects) {
    r.subjects.push_back(s.subject);
    r.loads.push_back(s.loads);
    r.per_subject.push_back(ConditionRatios(s.loads));
  }
  if (subjects.size() > 1) {
    auto med = [&](auto member, bool leg) {
      std::vector<double> v;
      for (const auto& t : r.per_subject) v.push_back(leg ? (t.*member).leg : (t.*member).abd);
      return Median(v);
    };
    RatioTable m;
    for (auto member : {&RatioTable::b_over_a, &RatioTable::d_over_b, &RatioTable::d_over_c,
                        &RatioTable::d_over_a}) {
      m.*member = {med(member, true), med(member, false)};
    }
    r.median = m;
  }
  return r;
}

namespace {

json PairJson(const RatioPair& p) { return {{"leg", p.leg}, {"abd", p.abd}}; }

json TableJson(const RatioTable& t) {
  return {{"B/A", PairJson(t.b_over_a)},
          {"D/B", PairJson(t.d_over_b)},
          {"D/C", PairJson(t.d_over_c)},
          {"D/A", PairJson(t.d_over_a)}};
}

}  // namespace

json RatioReportJson(const RatioReport& report) {
  json subjects = json::array();
  for (std::size_t i = 0; i < report.subjects.size(); ++i) {
    json loads = json::object();
    for (const auto& [id, l] : report.loads[i]) {
      loads[std::string(1, ConditionLetter(id))] = {{"leg", l.leg}, {"abd", l.abd}};
    }
    subjects.push_back({{"subject", report.subjects[i]},
                        {"loads", loads},
                        {"ratios", TableJson(report.per_subject[i])}});
  }
  json doc = {{"subjects", subjects}};
  doc["median"] = report.median ? TableJson(*report.median) : json(nullptr);
  return doc;
}

std::string RatioReportTable(const RatioReport& report) {
  std::ostringstream out;
  char buf[160];
  auto row = [&](const std::string& label, const RatioTable& t) {
    std::snprintf(buf, sizeof buf,
                  "%-10s %7.3f %7.3f   %7.3f %7.3f   %7.3f %7.3f   %7.3f %7.3f\n",
                  label.c_str(), t.b_over_a.leg, t.b_over_a.abd, t.d_over_b.leg,
                  t.d_over_b.abd, t.d_over_c.leg, t.d_over_c.abd, t.d_over_a.leg,
                  t.d_over_a.abd);
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-10s %15s   %15s   %15s   %15s\n", "subject", "B/A",
                "D/B", "D/C", "D/A");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s %7s %7s   %7s %7s   %7s %7s   %7s %7s\n", "", "leg",
                "abd", "leg", "abd", "leg", "abd", "leg", "abd");
  out << buf;
  for (std::size_t i = 0; i < report.subjects.size(); ++i) {
    row(report.subjects[i], report.per_subject[i]);
  }
  if (report.median) row("median", *report.median);
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string TrimCell(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::vector<std::string> Cells(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(TrimCell(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Muscle ParseMuscle(const std::string& s) {
  if (s == "gastrocnemius") return Muscle::kGastrocnemius;
  if (s == "oblique_abdominal" || s == "oblique") return Muscle::kObliqueAbdominal;
  throw InputError("unknown muscle '" + s + "'");
}

Side ParseSide(const std::string& s) {
  if (s == "left" || s == "l" || s == "L") return Side::kLeft;
  if (s == "right" || s == "r" || s == "R") return Side::kRight;
  throw InputError("unknown side '" + s + "'");
}

std::pair<Muscle, Side> Bind(const std::string& column, const json* channel_map) {
  if (channel_map) {
    if (!channel_map->contains(column)) {
      throw InputError("channel map has no entry for column '" + column + "'");
    }
    const json& e = channel_map->at(column);
    return {ParseMuscle(e.at("muscle").get<std::string>()),
            ParseSide(e.at("side").get<std::string>())};
  }
  const std::size_t us = column.rfind('_');
  if (us == std::string::npos) {
    throw InputError("column '" + column + "' is not of the form <muscle>_<side>");
  }
  return {ParseMuscle(column.substr(0, us)), ParseSide(column.substr(us + 1))};
}

}  // namespace

EmgRecord ReadEmgCsv(std::istream& in, const json* channel_map) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("EMG CSV is empty");
  const auto header = Cells(TrimCell(line));
  if (header.size() < 2 || header[0] != "t") {
    throw InputError("EMG CSV header must start with 't' followed by channel columns");
  }
  EmgRecord rec;
  for (std::size_t i = 1; i < header.size(); ++i) {
    auto [muscle, side] = Bind(header[i], channel_map);
    rec.channels.push_back({header[i], muscle, side, {}});
  }
  std::vector<double> t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (TrimCell(line).empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    for (std::size_t col = 0; col < header.size(); ++col) {
      const double v = std::strtod(p, &end);
      if (end == p || !std::isfinite(v)) {
        throw InputError("line " + std::to_string(line_no) + ", column " +
                         std::to_string(col + 1) + ": not a number");
      }
      (col == 0 ? t : rec.channels[col - 1].samples).push_back(v);
      p = end;
      while (*p == ' ' || *p == '\t') ++p;
      if (col + 1 < header.size()) {
        if (*p != ',') {
          throw InputError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields");
        }
        ++p;
      }
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p != '\0') {
      throw InputError("line " + std::to_string(line_no) + ": trailing data");
    }
  }
  if (t.size() < 2) throw InputError("EMG CSV needs at least two samples");
  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) throw InputError("EMG CSV timestamps must increase");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 0.01 * dt) {
      throw InputError("EMG CSV is not uniformly sampled near line " + std::to_string(i + 2));
    }
  }
  double fs = 1.0 / dt;
  if (std::abs(fs - std::round(fs)) < 1e-6 * fs) fs = std::round(fs);
  rec.sample_rate = fs;
  rec.Validate();
  return rec;
}

EmgRecord ReadEmgCsv(const std::string& path, const json* channel_map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open EMG file '" + path + "'");
  return ReadEmgCsv(in, channel_map);
}

void WriteEmgCsv(std::ostream& out, const EmgRecord& record) {
  out << "t";
  for (const auto& c : record.channels) out << ',' << MuscleName(c.muscle) << '_' << SideName(c.side);
  out << '\n';
  const std::size_t n = record.channels.empty() ? 0 : record.channels.front().samples.size();
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(i) / record.sample_rate);
    out << buf;
    for (const auto& c : record.channels) {
      std::snprintf(buf, sizeof buf, ",%.7g", c.samples[i]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace pbench
