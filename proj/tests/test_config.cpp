#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "core/config.hpp"
#include "core/errors.hpp"

namespace pbench {
namespace {

using nlohmann::json;

ErrorKind KindOf(const json& doc) {
  try {
    ConfigFromJson(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << doc.dump();
  return ErrorKind::kIo;
}

TEST(Config, DefaultsValidate) {
  const AppConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.mechanism.roll_limits, (Interval{0, 65}));
  EXPECT_EQ(c.mechanism.pitch_limits, (Interval{0, 85}));
  EXPECT_GE(c.mechanism.lat_limits.hi + c.mechanism.thor_limits.hi, 65.0);
  EXPECT_EQ(c.control.tick_hz, 100.0);
  EXPECT_EQ(c.control.stream_hz, 20.0);
  EXPECT_EQ(c.emg.low_hz, 20.0);
  EXPECT_EQ(c.emg.high_hz, 450.0);
  EXPECT_EQ(c.emg.window_s, 0.3);
}

TEST(Config, JsonRoundTripIsExact) {
  AppConfig c;
  c.load.a_leg = 1.2345678901234567;
  c.weights = {0.3, 1.7};
  SubjectProfile s;
  s.id = "S3";
  s.weights = SplitWeights{2, 1};
  s.regions["apical_four_chamber"] = {"apical_four_chamber", {12, 18}, {61, 69}};
  c.subjects["S3"] = s;
  const json j = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ConfigFromJson(j)), j);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const AppConfig c = ConfigFromJson(json::parse(R"({"load_params": {"c_leg": 0.9}})"));
  EXPECT_EQ(c.load.c_leg, 0.9);
  EXPECT_EQ(c.load.c_abd, 0.75);
  EXPECT_EQ(c.mechanism.drive(Axis::kPitch).screw_lead, AppConfig{}.mechanism.drive(Axis::kPitch).screw_lead);
}

TEST(Config, SubjectOverridesAcceptAliases) {
  const AppConfig c = ConfigFromJson(json::parse(
      R"({"subjects": {"S3": {"regions": {"plax": {"roll": [35, 40], "pitch": [50, 80]}}}}})"));
  EXPECT_EQ(c.subjects.at("S3").regions.count("parasternal_long_axis"), 1u);
}

TEST(Config, WeightsForFallsBack) {
  AppConfig c;
  c.weights = {1.0, 0.5};
  SubjectProfile s;
  s.weights = SplitWeights{3.0, 1.0};
  c.subjects["S1"] = s;
  EXPECT_EQ(c.WeightsFor("S1").w_leg, 3.0);
  EXPECT_EQ(c.WeightsFor("nobody").w_abd, 0.5);
}

TEST(Config, InvalidDocuments) {
  EXPECT_EQ(KindOf(json::array()), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"axes": {"pitch": {"screw_lead": 0}}}})")),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"axes": {"pitch": {"screw_lead": "x"}}}})")),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"lat_limits": [0, 20]}})")),
            ErrorKind::kConfig);  // lat + thor no longer cover 65
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"pitch_limits": [0]}})")), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"pitch_linkage": {"rest_length": 500}}})")),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"axes": {"pitch": {"stroke": 50}}}})")),
            ErrorKind::kConfig);  // no longer reaches 85 deg
  EXPECT_EQ(KindOf(json::parse(R"({"load_params": {"c_leg": 1.5}})")), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"load_params": {"a_leg": -1}})")), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"weights": {"w_leg": 0, "w_abd": 0}})")), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"regions": [{"roll": [1, 2], "pitch": [1, 2]}]})")),
            ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"emg": {"order": 3}})")), ErrorKind::kConfig);
  EXPECT_EQ(KindOf(json::parse(R"({"mechanism": {"axes": {"elbow": {}}}})")), ErrorKind::kInput);
}

TEST(Config, ResolveOrder) {
  const auto dir = std::filesystem::temp_directory_path() / ("pbench_cfg_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto a = dir / "a.json", b = dir / "b.json";
  std::ofstream(a) << R"({"weights": {"w_leg": 2, "w_abd": 1}})";
  std::ofstream(b) << R"({"weights": {"w_leg": 3, "w_abd": 1}})";

  ::unsetenv("POSTURE_BENCH_CONFIG");
  EXPECT_EQ(ResolveConfig("").weights.w_leg, 1.0);
  ::setenv("POSTURE_BENCH_CONFIG", b.c_str(), 1);
  EXPECT_EQ(ResolveConfig("").weights.w_leg, 3.0);
  EXPECT_EQ(ResolveConfig(a.string()).weights.w_leg, 2.0);
  ::unsetenv("POSTURE_BENCH_CONFIG");

  try {
    ResolveConfig((dir / "missing.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
  std::ofstream(dir / "bad.json") << "{ nope";
  try {
    ResolveConfig((dir / "bad.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  std::filesystem::remove_all(dir);
}

TEST(Config, ShippedDefaultFileMatchesBuiltIns) {
  const AppConfig c = LoadConfigFile(PBENCH_SOURCE_DIR "/config/default.json");
  EXPECT_EQ(ConfigToJson(c), ConfigToJson(AppConfig{}));
}

}  // namespace
}  // namespace pbench
