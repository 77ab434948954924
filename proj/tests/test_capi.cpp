// Exercises the shared library strictly through its C header.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "posture_bench/posture_bench.h"

namespace {

using nlohmann::json;

struct Ctx {
  pb_context* p = nullptr;
  Ctx() { EXPECT_EQ(pb_context_create(nullptr, &p), PB_OK); }
  ~Ctx() { pb_context_destroy(p); }
};

std::string Take(char* s) {
  std::string out = s ? s : "";
  pb_string_free(s);
  return out;
}

std::filesystem::path TempFile(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pbench_capi_" + std::to_string(::getpid()) + "_" + name);
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(pb_version(), "1.0.0");
  EXPECT_STREQ(pb_status_name(PB_OK), "ok");
  EXPECT_STREQ(pb_status_name(PB_ERR_ILLEGAL_MODE), "illegal_mode");
  EXPECT_STREQ(pb_status_name(PB_ERR_RANGE), "range");
}

TEST(CApi, ErrorsSetLastError) {
  Ctx ctx;
  double deg = 0;
  EXPECT_EQ(pb_fk(ctx.p, PB_AXIS_PITCH, 1e6, &deg), PB_ERR_RANGE);
  EXPECT_NE(std::string(pb_last_error()), "");
  EXPECT_EQ(pb_fk(ctx.p, PB_AXIS_PITCH, 10.0, &deg), PB_OK);
  EXPECT_STREQ(pb_last_error(), "");
  EXPECT_EQ(pb_fk(nullptr, PB_AXIS_PITCH, 10.0, &deg), PB_ERR_INPUT);
  EXPECT_EQ(pb_fk(ctx.p, static_cast<pb_axis>(9), 10.0, &deg), PB_ERR_INPUT);

  pb_context* bad = nullptr;
  EXPECT_EQ(pb_context_create_from_json("{\"load_params\": {\"c_leg\": 3}}", &bad), PB_ERR_CONFIG);
  EXPECT_EQ(bad, nullptr);
  EXPECT_EQ(pb_context_create_from_json("not json", &bad), PB_ERR_CONFIG);
  EXPECT_EQ(pb_context_create("/nonexistent/cfg.json", &bad), PB_ERR_IO);
}

TEST(CApi, ConfigRoundTrip) {
  Ctx ctx;
  char* js = nullptr;
  ASSERT_EQ(pb_context_config_json(ctx.p, &js), PB_OK);
  const std::string text = Take(js);
  pb_context* again = nullptr;
  ASSERT_EQ(pb_context_create_from_json(text.c_str(), &again), PB_OK);
  ASSERT_EQ(pb_context_config_json(again, &js), PB_OK);
  EXPECT_EQ(Take(js), text);
  pb_context_destroy(again);
}

TEST(CApi, KinematicsRoundTrip) {
  Ctx ctx;
  pb_joint_state j{};
  ASSERT_EQ(pb_ik(ctx.p, 20, 45, 10, 10, &j), PB_OK);
  EXPECT_NEAR(j.theta_pitch, 45.0, 1e-6);
  EXPECT_NEAR(j.theta_lat + j.theta_thor, 20.0, 1e-6);
  pb_joint_state k{};
  ASSERT_EQ(pb_joint_state_from_travel(ctx.p, j.travel_mm, &k), PB_OK);
  EXPECT_NEAR(k.theta_base, j.theta_base, 1e-12);

  double mm = 0;
  ASSERT_EQ(pb_inverse_axis(ctx.p, PB_AXIS_THOR, 10.0, &mm), PB_OK);
  double deg = 0;
  ASSERT_EQ(pb_fk(ctx.p, PB_AXIS_THOR, mm, &deg), PB_OK);
  EXPECT_NEAR(deg, 10.0, 1e-9);

  int64_t steps = 0;
  ASSERT_EQ(pb_travel_to_steps(ctx.p, PB_AXIS_PITCH, 4.0, &steps), PB_OK);
  EXPECT_EQ(steps, 500);
  ASSERT_EQ(pb_steps_to_travel(ctx.p, PB_AXIS_THOR, 250, &mm), PB_OK);
  EXPECT_DOUBLE_EQ(mm, 1.0);

  EXPECT_EQ(pb_ik(ctx.p, 70, 45, 35, 35, &j), PB_ERR_RANGE);
  EXPECT_NE(std::string(pb_last_error()).find("roll"), std::string::npos);

  double d0 = 0, d1 = 0;
  ASSERT_EQ(pb_pendulum_distance(ctx.p, 0, 0, &d0), PB_OK);
  ASSERT_EQ(pb_pendulum_distance(ctx.p, 25, 25, &d1), PB_OK);
  EXPECT_NEAR(d0, d1, 1e-9);
}

TEST(CApi, PostureAndGravity) {
  Ctx ctx;
  double n[3];
  ASSERT_EQ(pb_compose_normal(15, 60, n), PB_OK);
  std::vector<pb_probe_sample> track;
  // Exact points on the plane through the origin with normal n.
  const double u[3] = {-n[2], 0, n[0]};
  const double v[3] = {n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2],
                       n[0] * u[1] - n[1] * u[0]};
  for (int i = 0; i < 20; ++i) {
    const double a = (i % 5) * 10.0, b = (i / 5) * 7.0;
    track.push_back({0.1 * i, a * u[0] + b * v[0], a * u[1] + b * v[1], a * u[2] + b * v[2]});
  }
  pb_plane plane{};
  ASSERT_EQ(pb_fit_plane(track.data(), track.size(), &plane), PB_OK);
  double roll = 0, pitch = 0;
  ASSERT_EQ(pb_plane_to_posture(&plane, &roll, &pitch), PB_OK);
  EXPECT_NEAR(roll, 15.0, 1e-9);
  EXPECT_NEAR(pitch, 60.0, 1e-9);
  EXPECT_EQ(pb_fit_plane(track.data(), 2, &plane), PB_ERR_DEGENERATE);

  double gr = 0, gp = 0;
  ASSERT_EQ(pb_gravity_to_posture(ctx.p, 20, 45, &roll, &pitch), PB_OK);
  ASSERT_EQ(pb_posture_to_gravity(roll, pitch, &gr, &gp), PB_OK);
  EXPECT_NEAR(gr, 20.0, 1e-9);
  EXPECT_NEAR(gp, 45.0, 1e-9);
  EXPECT_EQ(pb_gravity_to_posture(ctx.p, 70, 70, &roll, &pitch), PB_ERR_RANGE);
}

TEST(CApi, ProbeTrackFile) {
  const auto path = TempFile("track.csv");
  std::ofstream(path) << "t,x,y,z\n0,0,0,0\n0.1,1,0,0\n0.2,0,1,0\n0.3,1,1,0.0\n";
  pb_probe_sample* s = nullptr;
  size_t n = 0;
  ASSERT_EQ(pb_read_probe_track(path.c_str(), &s, &n), PB_OK);
  EXPECT_EQ(n, 4u);
  EXPECT_DOUBLE_EQ(s[3].y, 1.0);
  pb_probe_track_free(s);
  EXPECT_EQ(pb_read_probe_track("/nonexistent.csv", &s, &n), PB_ERR_IO);
  std::filesystem::remove(path);
}

TEST(CApi, LoadModelAndPlanner) {
  Ctx ctx;
  double lat = 0, thor = 0;
  ASSERT_EQ(pb_split_optimize(ctx.p, 20, 1, 1, 1, &lat, &thor), PB_OK);
  EXPECT_NEAR(lat, 10.0, 0.05);
  EXPECT_NEAR(thor, 10.0, 0.05);
  double leg_a = 0, abd_a = 0, leg_d = 0, abd_d = 0;
  ASSERT_EQ(pb_predict_load(ctx.p, 20, 0, 0, 0, &leg_a, &abd_a), PB_OK);
  ASSERT_EQ(pb_predict_load(ctx.p, 10, 10, 1, 0, &leg_d, &abd_d), PB_OK);
  EXPECT_LT(leg_d, leg_a);
  EXPECT_LT(abd_d, abd_a);

  char* js = nullptr;
  ASSERT_EQ(pb_plan(ctx.p, "plax,a4c", nullptr, 0, &js), PB_OK);
  const json plan = json::parse(Take(js));
  EXPECT_NEAR(plan["posture"]["roll_deg"].get<double>(), 10.0, 1e-9);
  EXPECT_NEAR(plan["posture"]["pitch_deg"].get<double>(), 60.0, 1e-9);
  EXPECT_EQ(plan["region"]["roll_deg"], json::array({10.0, 20.0}));

  ASSERT_EQ(pb_plan(ctx.p, "plax,a4c", nullptr, 1, &js), PB_OK);
  EXPECT_EQ(json::parse(Take(js))["plans"].size(), 2u);
  EXPECT_EQ(pb_plan(ctx.p, "plax,bogus", nullptr, 0, &js), PB_ERR_INPUT);

  ASSERT_EQ(pb_regions_json(ctx.p, &js), PB_OK);
  const json regions = json::parse(Take(js));
  EXPECT_EQ(regions["bounds"]["roll_deg"], json::array({0.0, 65.0}));
  EXPECT_EQ(regions["bounds"]["pitch_deg"], json::array({0.0, 85.0}));

  pb_context* s3 = nullptr;
  ASSERT_EQ(pb_context_create_from_json(
                R"({"subjects": {"S3": {"regions": {"plax": {"roll": [35, 40], "pitch": [50, 80]}}}}})",
                &s3),
            PB_OK);
  EXPECT_EQ(pb_plan(s3, "plax,a4c", "S3", 0, &js), PB_ERR_PLANNING);
  pb_context_destroy(s3);
}

TEST(CApi, EmgReportOnFixture) {
  Ctx ctx;
  const std::string dir = PBENCH_FIXTURE_DIR;
  std::ifstream in(dir + "/manifest.json");
  ASSERT_TRUE(in) << "fixture missing in " << dir;
  const std::string manifest((std::istreambuf_iterator<char>(in)), {});
  char* report = nullptr;
  char* table = nullptr;
  ASSERT_EQ(pb_emg_report(ctx.p, manifest.c_str(), dir.c_str(), &report, &table), PB_OK)
      << pb_last_error();
  const json r = json::parse(Take(report));
  EXPECT_EQ(r["subjects"].size(), 6u);
  EXPECT_NEAR(r["median"]["B/A"]["leg"].get<double>(), 0.785, 0.005);
  EXPECT_NE(Take(table).find("median"), std::string::npos);

  char* loads = nullptr;
  ASSERT_EQ(pb_emg_record_loads(ctx.p, (dir + "/S1_A.csv").c_str(), nullptr, &loads), PB_OK);
  EXPECT_GT(json::parse(Take(loads))["load"]["leg"].get<double>(), 0.0);

  EXPECT_EQ(pb_emg_report(ctx.p, R"({"subjects": []})", dir.c_str(), &report, nullptr),
            PB_ERR_INPUT);
  EXPECT_EQ(pb_emg_report(ctx.p, R"({"subjects": [{"id": "X", "conditions": {"A": "nope.csv"}}]})",
                          dir.c_str(), &report, nullptr),
            PB_ERR_IO);
}

TEST(CApi, SessionLifecycleAndReplay) {
  Ctx ctx;
  const auto log = TempFile("session.jsonl");
  pb_session* s = nullptr;
  ASSERT_EQ(pb_session_create(ctx.p, log.c_str(), &s), PB_OK);
  pb_mode mode;
  ASSERT_EQ(pb_session_mode(s, &mode), PB_OK);
  EXPECT_EQ(mode, PB_MODE_IDLE);

  EXPECT_EQ(pb_session_release(s), PB_ERR_ILLEGAL_MODE);
  EXPECT_NE(std::string(pb_last_error()).find("Idle"), std::string::npos);
  EXPECT_EQ(pb_session_set_target(s, 70, 40, nullptr), PB_ERR_RANGE);

  const double split[2] = {8, 12};
  ASSERT_EQ(pb_session_set_target(s, 20, 45, split), PB_OK);
  char* frame = nullptr;
  ASSERT_EQ(pb_session_tick(s, 0.01, &frame), PB_OK);
  EXPECT_EQ(json::parse(Take(frame))["mode"], "Moving");
  for (int i = 0; i < 5000; ++i) ASSERT_EQ(pb_session_tick(s, 0.01, nullptr), PB_OK);
  ASSERT_EQ(pb_session_mode(s, &mode), PB_OK);
  EXPECT_EQ(mode, PB_MODE_HOLDING);
  pb_joint_state j{};
  ASSERT_EQ(pb_session_joints(s, &j), PB_OK);
  EXPECT_NEAR(j.theta_lat, 8.0, 0.01);
  EXPECT_NEAR(j.theta_thor, 12.0, 0.01);

  ASSERT_EQ(pb_session_estop(s), PB_OK);
  ASSERT_EQ(pb_session_command(s, R"({"kind": "Release"})"), PB_OK);
  EXPECT_EQ(pb_session_command(s, R"({"kind": "Fly"})"), PB_ERR_INPUT);
  ASSERT_EQ(pb_session_tick(s, 0.01, nullptr), PB_OK);
  char* state = nullptr;
  ASSERT_EQ(pb_session_state_json(s, &state), PB_OK);
  json live = json::parse(Take(state));
  pb_session_destroy(s);

  ASSERT_EQ(pb_replay_log(log.c_str(), &state), PB_OK) << pb_last_error();
  json replayed = json::parse(Take(state));
  EXPECT_EQ(replayed["ticks"], 5002);
  replayed.erase("ticks");
  EXPECT_EQ(replayed, live);
  std::filesystem::remove(log);

  EXPECT_EQ(pb_replay_log("/nonexistent.jsonl", &state), PB_ERR_IO);
}

}  // namespace
