// Writes the synthetic multi-subject EMG fixture.
//
//   make_emg_fixture <fixture.json> <out_dir>
//
// Each subject gets one base waveform per channel (seeded white noise with a
// slow amplitude modulation, a DC offset and baseline wander). Condition A is
// the base; B, C and D are the same waveforms scaled so the leg and abdominal
// group loads follow the listed per-subject ratios:
//   B = A * (B/A),  D = B * (D/B),  C = D / (D/C)
// Every pipeline stage is positively homogeneous, so the ratios survive the
// pipeline up to the CSV's 7 significant digits.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace {

using nlohmann::json;

constexpr double kTwoPi = 6.283185307179586;

// Box-Muller on raw mt19937_64 output; std::normal_distribution is not
// reproducible across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  double Uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::vector<double> BaseWaveform(std::uint64_t seed, double amplitude, double fs, std::size_t n,
                                 int channel) {
  Gaussian g(seed * 16 + static_cast<std::uint64_t>(channel));
  std::vector<double> x(n);
  const double phase = 0.7 * channel;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double mod = 1.0 + 0.4 * std::sin(kTwoPi * 0.25 * t + phase);
    const double wander = 0.3 * amplitude * std::sin(kTwoPi * 0.5 * t + phase);
    x[i] = amplitude * mod * g() + 0.2 * amplitude + wander;
  }
  return x;
}

void WriteCsv(const std::filesystem::path& path, const std::vector<std::string>& names,
              const std::vector<std::vector<double>>& cols, const double scale[2], double fs) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fputs("t", f);
  for (const auto& n : names) std::fprintf(f, ",%s", n.c_str());
  std::fputc('\n', f);
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    std::fprintf(f, "%.6f", static_cast<double>(i) / fs);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      // Channels 0-1 are the leg group, 2-3 the abdominal group.
      std::fprintf(f, ",%.7g", cols[c][i] * scale[c < 2 ? 0 : 1]);
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <fixture.json> <out_dir>\n", argv[0]);
    return 2;
  }
  try {
    std::ifstream in(argv[1]);
    if (!in) throw std::runtime_error(std::string("cannot open ") + argv[1]);
    const json spec = json::parse(in);
    const std::filesystem::path out_dir = argv[2];
    std::filesystem::create_directories(out_dir);

    const double fs = spec.at("sample_rate").get<double>();
    const auto n = static_cast<std::size_t>(std::llround(spec.at("duration_s").get<double>() * fs));
    const auto names = spec.at("channels").get<std::vector<std::string>>();
    if (names.size() != 4) throw std::runtime_error("fixture expects four channels");

    json manifest = {{"subjects", json::array()}};
    for (const json& s : spec.at("subjects")) {
      const std::string id = s.at("id").get<std::string>();
      const auto seed = s.at("seed").get<std::uint64_t>();
      const auto amp = s.at("amplitude_mv").get<std::vector<double>>();
      std::vector<std::vector<double>> base;
      for (int c = 0; c < 4; ++c) base.push_back(BaseWaveform(seed, amp.at(c), fs, n, c));

      const json& r = s.at("ratios");
      double a[2] = {1.0, 1.0}, b[2], c[2], d[2];
      for (int g = 0; g < 2; ++g) {
        b[g] = a[g] * r.at("B/A").at(g).get<double>();
        d[g] = b[g] * r.at("D/B").at(g).get<double>();
        c[g] = d[g] / r.at("D/C").at(g).get<double>();
      }
      json conds = json::object();
      const std::pair<const char*, const double*> table[] = {{"A", a}, {"B", b}, {"C", c}, {"D", d}};
      for (const auto& [letter, scale] : table) {
        const std::string file = id + "_" + letter + ".csv";
        WriteCsv(out_dir / file, names, base, scale, fs);
        conds[letter] = file;
      }
      manifest["subjects"].push_back({{"id", id}, {"conditions", conds}});
    }
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_emg_fixture: %s\n", e.what());
    return 1;
  }
  return 0;
}
