#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "core/emg.hpp"
#include "core/errors.hpp"
#include "oracles.hpp"

namespace pbench {
namespace {

constexpr double kFs = 2000.0;

std::vector<double> Sine(double freq, double amp, double seconds, double fs = kFs) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amp * std::sin(2.0 * oracle::kPi * freq * static_cast<double>(i) / fs);
  }
  return x;
}

// RMS over the middle half, away from edge effects.
double InteriorRms(const std::vector<double>& x) {
  const std::size_t a = x.size() / 4, b = 3 * x.size() / 4;
  double ss = 0.0;
  for (std::size_t i = a; i < b; ++i) ss += x[i] * x[i];
  return std::sqrt(ss / static_cast<double>(b - a));
}

double FullRms(const std::vector<double>& x) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

// Measured zero-phase amplitude gain at one frequency.
double MeasuredGain(double freq) {
  const auto x = Sine(freq, 1.0, 4.0);
  return InteriorRms(Bandpass(x, kFs)) / InteriorRms(x);
}

TEST(Bandpass, DcRejected) {
  const std::vector<double> x(4000, 1.0);
  EXPECT_LT(FullRms(Bandpass(x, kFs)), 0.01);
}

TEST(Bandpass, PassbandWithinFivePercent) {
  for (double f : {60.0, 100.0, 200.0, 300.0}) EXPECT_NEAR(MeasuredGain(f), 1.0, 0.05) << f;
}

TEST(Bandpass, StopbandAttenuation) {
  EXPECT_LT(MeasuredGain(5.0), 0.1);  // >= 20 dB
  EXPECT_LT(MeasuredGain(900.0), 0.1);
}

TEST(Bandpass, MinusThreeDbAtCutoffs) {
  // Sweep the measured time-domain gain for the -3 dB crossing.
  auto crossing = [](double lo, double hi, bool rising) {
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      const bool above = MeasuredGain(mid) > std::sqrt(0.5);
      ((above == rising) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  EXPECT_NEAR(crossing(5.0, 60.0, true), 20.0, 1.0);
  EXPECT_NEAR(crossing(250.0, 900.0, false), 450.0, 22.5);
}

TEST(Bandpass, AnalyticResponseAgreesWithMeasurement) {
  const BandpassFilter f(kFs, 20.0, 450.0, 4);
  // Each cascade sits at exactly half power on its own cutoff; the other
  // cascade's skirt costs about 1e-6 there.
  EXPECT_NEAR(f.ZeroPhasePower(20.0), 0.5, 2e-6);
  EXPECT_NEAR(f.ZeroPhasePower(450.0), 0.5, 2e-6);
  EXPECT_LE(f.ZeroPhasePower(20.0), 0.5);
  for (double fr : {10.0, 40.0, 100.0, 400.0, 600.0}) {
    EXPECT_NEAR(std::sqrt(f.ZeroPhasePower(fr)), MeasuredGain(fr), 0.01) << fr;
  }
}

TEST(Bandpass, Linear) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(3000), y(3000), z(3000);
  const double a = 2.5, b = -0.75;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n(rng) + 0.3;
    y[i] = n(rng) - 1.0;
    z[i] = a * x[i] + b * y[i];
  }
  const auto fx = Bandpass(x, kFs), fy = Bandpass(y, kFs), fz = Bandpass(z, kFs);
  double scale = 0.0;
  for (double v : fz) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < x.size(); ++i) {
    ASSERT_NEAR(fz[i], a * fx[i] + b * fy[i], 1e-9 * scale);
  }
}

TEST(Bandpass, ConfigErrors) {
  EXPECT_THROW(BandpassFilter(800.0, 20.0, 450.0, 4), Error);
  EXPECT_THROW(BandpassFilter(2000.0, 450.0, 20.0, 4), Error);
  EXPECT_THROW(BandpassFilter(2000.0, 20.0, 450.0, 3), Error);
  try {
    Bandpass(std::vector<double>(100, 0.0), 500.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(Envelope, Constant) {
  const auto e = RmsEnvelope(std::vector<double>(1000, -3.0), kFs);
  for (double v : e) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Envelope, Zeros) {
  for (double v : RmsEnvelope(std::vector<double>(1000, 0.0), kFs)) EXPECT_EQ(v, 0.0);
}

TEST(Envelope, SinusoidInterior) {
  const auto x = Sine(100.0, 2.0, 3.0);
  const auto e = RmsEnvelope(x, kFs);
  ASSERT_EQ(e.size(), x.size());
  for (std::size_t i = 600; i < e.size() - 600; ++i) {
    ASSERT_NEAR(e[i], 2.0 / std::sqrt(2.0), 0.02 * 2.0 / std::sqrt(2.0));
  }
}

TEST(Envelope, CenteredTruncatedWindowMatchesDirectSum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> x(1500);
  for (double& v : x) v = u(rng);
  const auto e = RmsEnvelope(x, kFs, 0.3);  // 600 samples
  for (std::size_t i : {0ul, 1ul, 299ul, 300ul, 301ul, 750ul, 1199ul, 1200ul, 1499ul}) {
    const long lo = std::max(0L, static_cast<long>(i) - 300);
    const long hi = std::min(1500L, static_cast<long>(i) - 300 + 600);
    double ss = 0.0;
    for (long k = lo; k < hi; ++k) ss += x[k] * x[k];
    EXPECT_NEAR(e[i], std::sqrt(ss / (hi - lo)), 1e-12) << i;
  }
}

TEST(Envelope, ScaleEquivariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(2000), kx(2000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n(rng);
    kx[i] = -3.5 * x[i];
  }
  const auto a = RmsEnvelope(x, kFs), b = RmsEnvelope(kx, kFs);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(b[i], 3.5 * a[i], 1e-12 * b[i] + 1e-15);
}

TEST(Envelope, ShorterThanWindowIsInputError) {
  try {
    RmsEnvelope(std::vector<double>(100, 1.0), kFs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
  }
}

TEST(Median, Small) {
  EXPECT_EQ(Median(std::vector<double>{1, 2, 3}), 2.0);
  EXPECT_EQ(Median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_THROW(Median(std::vector<double>{}), Error);
}

TEST(Median, MatchesFullSortExactly) {
  std::mt19937_64 rng(99);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (std::size_t n : {10000ul, 10001ul}) {
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    EXPECT_EQ(Median(v), oracle::SortedMedian(v));
  }
}

ConditionLoads Loads(double a, double b, double c, double d) {
  return {{ConditionId::kA, {a, a}},
          {ConditionId::kB, {b, b}},
          {ConditionId::kC, {c, c}},
          {ConditionId::kD, {d, d}}};
}

TEST(Conditions, TableIsFixed) {
  const auto& t = ConditionTable();
  EXPECT_FALSE(t[0].pendulum);
  EXPECT_EQ(t[0].lat, 20.0);
  EXPECT_TRUE(t[1].pendulum);
  EXPECT_EQ(t[2].lat, 0.0);
  EXPECT_EQ(t[2].thor, 20.0);
  EXPECT_EQ(t[3].lat, 10.0);
  EXPECT_EQ(t[3].thor, 10.0);
  EXPECT_EQ(ConditionFromLetter("C"), ConditionId::kC);
  EXPECT_THROW(ConditionFromLetter("E"), Error);
}

TEST(Ratios, IdenticalLoadsGiveOne) {
  const RatioTable t = ConditionRatios(Loads(2, 2, 2, 2));
  EXPECT_EQ(t.b_over_a.leg, 1.0);
  EXPECT_EQ(t.d_over_c.abd, 1.0);
  EXPECT_EQ(t.d_over_a.leg, 1.0);
}

TEST(Ratios, MissingAndZeroConditionsNamed) {
  ConditionLoads l = Loads(1, 1, 1, 1);
  l.erase(ConditionId::kC);
  try {
    ConditionRatios(l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("condition C"), std::string::npos);
  }
  try {
    ConditionRatios(Loads(0, 1, 1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    EXPECT_NE(std::string(e.what()).find("condition A"), std::string::npos);
  }
}

TEST(Ratios, MedianAcrossSubjects) {
  std::vector<SubjectLoads> s = {{"S1", Loads(1, 0.5, 1, 1)},
                                 {"S2", Loads(1, 0.785, 1, 1)},
                                 {"S3", Loads(1, 1.0, 1, 1)}};
  const RatioReport r = BuildRatioReport(s);
  ASSERT_TRUE(r.median.has_value());
  EXPECT_DOUBLE_EQ(r.median->b_over_a.leg, 0.785);
  EXPECT_FALSE(BuildRatioReport({s[0]}).median.has_value());
}

TEST(Ratios, PerSubjectCompositionIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const ConditionLoads l = {{ConditionId::kA, {u(rng), u(rng)}},
                              {ConditionId::kB, {u(rng), u(rng)}},
                              {ConditionId::kC, {u(rng), u(rng)}},
                              {ConditionId::kD, {u(rng), u(rng)}}};
    const RatioTable t = ConditionRatios(l);
    EXPECT_NEAR(t.b_over_a.leg * t.d_over_b.leg, t.d_over_a.leg, 1e-12 * t.d_over_a.leg);
    EXPECT_NEAR(t.b_over_a.abd * t.d_over_b.abd, t.d_over_a.abd, 1e-12 * t.d_over_a.abd);
  }
}

EmgRecord FourChannels(std::uint64_t seed, double seconds = 2.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  EmgRecord r;
  r.sample_rate = kFs;
  const std::pair<Muscle, Side> ch[] = {{Muscle::kGastrocnemius, Side::kLeft},
                                        {Muscle::kGastrocnemius, Side::kRight},
                                        {Muscle::kObliqueAbdominal, Side::kLeft},
                                        {Muscle::kObliqueAbdominal, Side::kRight}};
  for (const auto& [m, s] : ch) {
    EmgChannel c;
    c.muscle = m;
    c.side = s;
    c.name = std::string(MuscleName(m)) + "_" + SideName(s);
    c.samples.resize(static_cast<std::size_t>(seconds * kFs));
    for (double& v : c.samples) v = n(rng);
    r.channels.push_back(c);
  }
  return r;
}

TEST(Pipeline, GroupSumsOfMedians) {
  const EmgRecord r = FourChannels(1);
  const RecordLoads l = ProcessRecord(r);
  ASSERT_EQ(l.channels.size(), 4u);
  EXPECT_DOUBLE_EQ(l.load.leg, l.channels[0].load + l.channels[1].load);
  EXPECT_DOUBLE_EQ(l.load.abd, l.channels[2].load + l.channels[3].load);
  const auto env = RmsEnvelope(Bandpass(r.channels[2].samples, kFs), kFs);
  EXPECT_EQ(l.channels[2].load, oracle::SortedMedian(env));
}

TEST(Pipeline, Deterministic) {
  const EmgRecord r = FourChannels(8);
  std::vector<SubjectLoads> s(1);
  s[0].subject = "S";
  for (ConditionId id : kAllConditions) s[0].loads[id] = ProcessRecord(r).load;
  EXPECT_EQ(RatioReportJson(BuildRatioReport(s)).dump(),
            RatioReportJson(BuildRatioReport(s)).dump());
}

TEST(Record, ValidationErrors) {
  EmgRecord r = FourChannels(3, 1.0);
  r.sample_rate = 800.0;
  EXPECT_THROW(r.Validate(), Error);
  r = FourChannels(3, 1.0);
  r.channels[1].samples.pop_back();
  EXPECT_THROW(r.Validate(), Error);
  r = FourChannels(3, 1.0);
  r.channels[0].samples[10] = std::nan("");
  EXPECT_THROW(r.Validate(), Error);
}

TEST(Csv, RoundTripAndRateInference) {
  const EmgRecord r = FourChannels(6, 0.5);
  std::stringstream ss;
  WriteEmgCsv(ss, r);
  const EmgRecord back = ReadEmgCsv(ss);
  EXPECT_EQ(back.sample_rate, kFs);
  ASSERT_EQ(back.channels.size(), 4u);
  EXPECT_EQ(back.channels[3].muscle, Muscle::kObliqueAbdominal);
  EXPECT_EQ(back.channels[3].side, Side::kRight);
  EXPECT_NEAR(back.channels[0].samples[17], r.channels[0].samples[17], 1e-7);
}

TEST(Csv, ChannelMap) {
  std::string csv = "t,ch1,ch2\n";
  for (int i = 0; i < 10; ++i) csv += std::to_string(i / 1000.0) + ",0.1,0.2\n";
  const auto map = nlohmann::json::parse(
      R"({"ch1": {"muscle": "gastrocnemius", "side": "left"},
          "ch2": {"muscle": "oblique_abdominal", "side": "right"}})");
  std::istringstream in(csv);
  const EmgRecord r = ReadEmgCsv(in, &map);
  EXPECT_EQ(r.sample_rate, 1000.0);
  EXPECT_EQ(r.channels[1].muscle, Muscle::kObliqueAbdominal);
  std::istringstream in2(csv);
  EXPECT_THROW(ReadEmgCsv(in2), Error);  // ch1 is not <muscle>_<side>
}

TEST(Csv, NonUniformSamplingRejected) {
  std::istringstream in("t,gastrocnemius_left\n0,1\n0.001,1\n0.003,1\n");
  EXPECT_THROW(ReadEmgCsv(in), Error);
}

}  // namespace
}  // namespace pbench
