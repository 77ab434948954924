#include "posture_bench/posture_bench.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/config.hpp"
#include "core/control.hpp"
#include "core/emg.hpp"
#include "core/errors.hpp"
#include "core/kinematics.hpp"
#include "core/load_model.hpp"
#include "core/planner.hpp"
#include "core/posture.hpp"
#include "core/service.hpp"

using nlohmann::json;

struct pb_context {
  pbench::AppConfig config;
};

struct pb_session {
  pbench::AppConfig config;
  std::ofstream log;
  std::unique_ptr<pbench::Session> session;
};

struct pb_server {
  std::unique_ptr<pbench::ControlLoop> loop;
  std::unique_ptr<pbench::HttpService> http;
};

namespace {

thread_local std::string g_last_error;

pb_status StatusOf(pbench::ErrorKind kind) {
  switch (kind) {
    case pbench::ErrorKind::kRange: return PB_ERR_RANGE;
    case pbench::ErrorKind::kConfig: return PB_ERR_CONFIG;
    case pbench::ErrorKind::kInput: return PB_ERR_INPUT;
    case pbench::ErrorKind::kDegenerate: return PB_ERR_DEGENERATE;
    case pbench::ErrorKind::kPlanning: return PB_ERR_PLANNING;
    case pbench::ErrorKind::kIllegalMode: return PB_ERR_ILLEGAL_MODE;
    case pbench::ErrorKind::kIo: return PB_ERR_IO;
  }
  return PB_ERR_INTERNAL;
}

pb_status Fail(pb_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
pb_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PB_OK;
  } catch (const pbench::Error& e) {
    return Fail(StatusOf(e.kind()), e.what());
  } catch (const json::exception& e) {
    return Fail(PB_ERR_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(PB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(PB_ERR_INTERNAL, e.what());
  }
}

void Need(const void* p, const char* what) {
  if (p == nullptr) throw pbench::InputError(std::string(what) + " must not be NULL");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pbench::Axis AxisOf(pb_axis a) {
  if (a < PB_AXIS_PITCH || a > PB_AXIS_BASE) throw pbench::InputError("unknown axis id");
  return static_cast<pbench::Axis>(a);
}

void Export(const pbench::JointState& j, pb_joint_state* out) {
  for (int i = 0; i < pbench::kAxisCount; ++i) out->travel_mm[i] = j.travel[i];
  out->passive_height_mm = j.passive_height;
  out->theta_pitch = j.theta_pitch;
  out->theta_lat = j.theta_lat;
  out->theta_thor = j.theta_thor;
  out->theta_base = j.theta_base;
}

std::vector<std::string> SplitCsv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string Resolve(const std::string& path, const char* base_dir) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir == nullptr || *base_dir == '\0') return path;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

extern "C" {

const char* pb_version(void) { return "1.0.0"; }

const char* pb_status_name(pb_status status) {
  switch (status) {
    case PB_OK: return "ok";
    case PB_ERR_RANGE: return "range";
    case PB_ERR_CONFIG: return "config";
    case PB_ERR_INPUT: return "input";
    case PB_ERR_DEGENERATE: return "degenerate";
    case PB_ERR_PLANNING: return "planning";
    case PB_ERR_ILLEGAL_MODE: return "illegal_mode";
    case PB_ERR_IO: return "io";
    case PB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* pb_last_error(void) { return g_last_error.c_str(); }

void pb_string_free(char* s) { std::free(s); }

pb_status pb_context_create(const char* config_path, pb_context** out) {
  return Guard([&] {
    Need(out, "out");
    *out = nullptr;
    auto ctx = std::make_unique<pb_context>();
    ctx->config = pbench::ResolveConfig(config_path ? config_path : "");
    *out = ctx.release();
  });
}

pb_status pb_context_create_from_json(const char* config_json, pb_context** out) {
  return Guard([&] {
    Need(config_json, "config_json");
    Need(out, "out");
    *out = nullptr;
    json doc;
    try {
      doc = json::parse(config_json);
    } catch (const json::parse_error& e) {
      throw pbench::ConfigError(std::string("config is not JSON: ") + e.what());
    }
    auto ctx = std::make_unique<pb_context>();
    ctx->config = pbench::ConfigFromJson(doc);
    *out = ctx.release();
  });
}

void pb_context_destroy(pb_context* ctx) { delete ctx; }

pb_status pb_context_config_json(const pb_context* ctx, char** out_json) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_json, "out_json");
    *out_json = Dup(pbench::ConfigToJson(ctx->config).dump(2));
  });
}

// --- kinematics -------------------------------------------------------------

pb_status pb_fk(const pb_context* ctx, pb_axis axis, double travel_mm, double* out_deg) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_deg, "out_deg");
    *out_deg = pbench::ForwardAxis(AxisOf(axis), travel_mm, ctx->config.mechanism);
  });
}

pb_status pb_inverse_axis(const pb_context* ctx, pb_axis axis, double angle_deg,
                          double* out_travel_mm) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_travel_mm, "out_travel_mm");
    *out_travel_mm = pbench::InverseAxis(AxisOf(axis), angle_deg, ctx->config.mechanism);
  });
}

pb_status pb_ik(const pb_context* ctx, double roll, double pitch, double lat, double thor,
                pb_joint_state* out) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out, "out");
    Export(pbench::Ik({roll, pitch}, {lat, thor}, ctx->config.mechanism), out);
  });
}

pb_status pb_joint_state_from_travel(const pb_context* ctx, const double travel_mm[4],
                                     pb_joint_state* out) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(travel_mm, "travel_mm");
    Need(out, "out");
    std::array<double, pbench::kAxisCount> t{};
    for (int i = 0; i < pbench::kAxisCount; ++i) t[i] = travel_mm[i];
    Export(pbench::MakeJointState(t, ctx->config.mechanism), out);
  });
}

pb_status pb_travel_to_steps(const pb_context* ctx, pb_axis axis, double delta_mm,
                             int64_t* out_steps) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_steps, "out_steps");
    *out_steps = pbench::TravelToSteps(delta_mm, AxisOf(axis), ctx->config.mechanism);
  });
}

pb_status pb_steps_to_travel(const pb_context* ctx, pb_axis axis, int64_t steps,
                             double* out_mm) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_mm, "out_mm");
    *out_mm = pbench::StepsToTravel(steps, AxisOf(axis), ctx->config.mechanism);
  });
}

pb_status pb_pendulum_distance(const pb_context* ctx, double theta_lat, double theta_base,
                               double* out_mm) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_mm, "out_mm");
    *out_mm = pbench::WaistBaseDistance(
        pbench::PendulumGeometry(theta_lat, theta_base, ctx->config.mechanism));
  });
}

// --- posture ----------------------------------------------------------------

pb_status pb_fit_plane(const pb_probe_sample* samples, size_t count, pb_plane* out) {
  return Guard([&] {
    Need(out, "out");
    if (count > 0) Need(samples, "samples");
    std::vector<pbench::ProbeSample> track(count);
    for (size_t i = 0; i < count; ++i) {
      track[i] = {samples[i].t, samples[i].x, samples[i].y, samples[i].z};
    }
    const pbench::ChestPlane p = pbench::FitPlane(track);
    for (int i = 0; i < 3; ++i) {
      out->normal[i] = p.normal[i];
      out->centroid[i] = p.centroid[i];
    }
    out->rms_residual = p.rms_residual;
  });
}

pb_status pb_read_probe_track(const char* csv_path, pb_probe_sample** out_samples,
                              size_t* out_count) {
  return Guard([&] {
    Need(csv_path, "csv_path");
    Need(out_samples, "out_samples");
    Need(out_count, "out_count");
    *out_samples = nullptr;
    *out_count = 0;
    const auto track = pbench::ReadProbeTrackCsv(std::string(csv_path));
    auto* buf = static_cast<pb_probe_sample*>(
        std::malloc(std::max<size_t>(1, track.size()) * sizeof(pb_probe_sample)));
    if (buf == nullptr) throw std::bad_alloc();
    for (size_t i = 0; i < track.size(); ++i) {
      buf[i] = {track[i].t, track[i].x, track[i].y, track[i].z};
    }
    *out_samples = buf;
    *out_count = track.size();
  });
}

void pb_probe_track_free(pb_probe_sample* samples) { std::free(samples); }

pb_status pb_plane_to_posture(const pb_plane* plane, double* roll, double* pitch) {
  return Guard([&] {
    Need(plane, "plane");
    Need(roll, "roll");
    Need(pitch, "pitch");
    const Eigen::Vector3d n(plane->normal[0], plane->normal[1], plane->normal[2]);
    if (std::abs(n.norm() - 1.0) > 1e-9) throw pbench::InputError("plane normal is not unit length");
    const pbench::PostureAngles p = pbench::NormalToPosture(n);
    *roll = p.roll;
    *pitch = p.pitch;
  });
}

pb_status pb_compose_normal(double roll, double pitch, double out_normal[3]) {
  return Guard([&] {
    Need(out_normal, "out_normal");
    const Eigen::Vector3d n = pbench::ComposeNormal({roll, pitch});
    for (int i = 0; i < 3; ++i) out_normal[i] = n[i];
  });
}

pb_status pb_posture_to_gravity(double roll, double pitch, double* g_roll, double* g_pitch) {
  return Guard([&] {
    Need(g_roll, "g_roll");
    Need(g_pitch, "g_pitch");
    const pbench::GravityAngles g = pbench::PostureToGravity({roll, pitch});
    *g_roll = g.g_roll;
    *g_pitch = g.g_pitch;
  });
}

pb_status pb_gravity_to_posture(const pb_context* ctx, double g_roll, double g_pitch,
                                double* roll, double* pitch) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(roll, "roll");
    Need(pitch, "pitch");
    const auto& m = ctx->config.mechanism;
    const pbench::PostureAngles p =
        pbench::GravityToPosture({g_roll, g_pitch}, m.roll_limits, m.pitch_limits);
    *roll = p.roll;
    *pitch = p.pitch;
  });
}

// --- EMG --------------------------------------------------------------------

pb_status pb_emg_report(const pb_context* ctx, const char* request_json, const char* base_dir,
                        char** out_report_json, char** out_table) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(request_json, "request_json");
    Need(out_report_json, "out_report_json");
    *out_report_json = nullptr;
    if (out_table) *out_table = nullptr;
    json req;
    try {
      req = json::parse(request_json);
    } catch (const json::parse_error& e) {
      throw pbench::InputError(std::string("EMG request is not JSON: ") + e.what());
    }
    const json* map = nullptr;
    if (req.contains("channel_map") && !req.at("channel_map").is_null()) {
      map = &req.at("channel_map");
    }
    if (!req.contains("subjects") || !req.at("subjects").is_array() ||
        req.at("subjects").empty()) {
      throw pbench::InputError("EMG request needs a non-empty \"subjects\" array");
    }
    std::vector<pbench::SubjectLoads> subjects;
    for (const json& s : req.at("subjects")) {
      pbench::SubjectLoads sl;
      sl.subject = s.value("id", "S" + std::to_string(subjects.size() + 1));
      for (const auto& [letter, file] : s.at("conditions").items()) {
        const pbench::ConditionId id = pbench::ConditionFromLetter(letter);
        const auto record =
            pbench::ReadEmgCsv(Resolve(file.get<std::string>(), base_dir), map);
        sl.loads[id] = pbench::ProcessRecord(record, ctx->config.emg).load;
      }
      subjects.push_back(std::move(sl));
    }
    const pbench::RatioReport report = pbench::BuildRatioReport(subjects);
    std::string js = pbench::RatioReportJson(report).dump(2);
    std::string table = out_table ? pbench::RatioReportTable(report) : std::string();
    char* a = Dup(js);
    if (out_table) {
      try {
        *out_table = Dup(table);
      } catch (...) {
        std::free(a);
        throw;
      }
    }
    *out_report_json = a;
  });
}

pb_status pb_emg_record_loads(const pb_context* ctx, const char* csv_path,
                              const char* channel_map_json, char** out_json) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(csv_path, "csv_path");
    Need(out_json, "out_json");
    json map;
    if (channel_map_json) map = json::parse(channel_map_json);
    const auto record =
        pbench::ReadEmgCsv(std::string(csv_path), channel_map_json ? &map : nullptr);
    const pbench::RecordLoads loads = pbench::ProcessRecord(record, ctx->config.emg);
    json channels = json::array();
    for (const auto& c : loads.channels) {
      channels.push_back({{"name", c.name},
                          {"muscle", pbench::MuscleName(c.muscle)},
                          {"side", pbench::SideName(c.side)},
                          {"median_envelope", c.load}});
    }
    *out_json = Dup(json{{"sample_rate", record.sample_rate},
                         {"channels", channels},
                         {"load", {{"leg", loads.load.leg}, {"abd", loads.load.abd}}}}
                        .dump(2));
  });
}

// --- load model -------------------------------------------------------------

pb_status pb_predict_load(const pb_context* ctx, double lat, double thor, int pendulum,
                          double pitch, double* leg, double* abd) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(leg, "leg");
    Need(abd, "abd");
    const pbench::LoadEstimate l = pbench::PredictLoad(
        lat, thor, pendulum != 0, ctx->config.load, ctx->config.mechanism, pitch);
    *leg = l.leg;
    *abd = l.abd;
  });
}

pb_status pb_split_optimize(const pb_context* ctx, double roll, int pendulum, double w_leg,
                            double w_abd, double* lat, double* thor) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(lat, "lat");
    Need(thor, "thor");
    const pbench::SplitWeights w{w_leg, w_abd};
    w.Validate();
    const pbench::RollSplit s = pbench::SplitOptimize(roll, pendulum != 0, ctx->config.load, w,
                                                      ctx->config.mechanism);
    *lat = s.lat;
    *thor = s.thor;
  });
}

// --- planner ----------------------------------------------------------------

pb_status pb_plan(const pb_context* ctx, const char* views_csv, const char* subject,
                  int per_view, char** out_json) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(views_csv, "views_csv");
    Need(out_json, "out_json");
    const auto views = SplitCsv(views_csv);
    const std::string sub = subject ? subject : "";
    const pbench::SplitWeights w = ctx->config.WeightsFor(sub);
    json result;
    if (per_view) {
      result = {{"plans", json::array()}};
      for (const auto& p : pbench::PlanPerView(views, w, ctx->config, sub)) {
        result["plans"].push_back(pbench::PlanJson(p));
      }
    } else {
      result = pbench::PlanJson(pbench::PlanPosture(views, w, ctx->config, sub));
    }
    *out_json = Dup(result.dump(2));
  });
}

pb_status pb_regions_json(const pb_context* ctx, char** out_json) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out_json, "out_json");
    *out_json = Dup(pbench::RegionsJson(ctx->config).dump(2));
  });
}

// --- session ----------------------------------------------------------------

pb_status pb_session_create(const pb_context* ctx, const char* log_path, pb_session** out) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<pb_session>();
    s->config = ctx->config;
    pbench::Session::LogSink sink;
    if (log_path && *log_path) {
      s->log.open(log_path);
      if (!s->log) throw pbench::IoError(std::string("cannot open session log '") + log_path + "'");
      pb_session* raw = s.get();
      sink = [raw](const json& rec) { raw->log << rec.dump() << '\n'; };
    }
    s->session = std::make_unique<pbench::Session>(s->config, std::move(sink));
    *out = s.release();
  });
}

void pb_session_destroy(pb_session* session) {
  if (session && session->log.is_open()) session->log.flush();
  delete session;
}

pb_status pb_session_command(pb_session* session, const char* command_json) {
  return Guard([&] {
    Need(session, "session");
    Need(command_json, "command_json");
    json j;
    try {
      j = json::parse(command_json);
    } catch (const json::parse_error& e) {
      throw pbench::InputError(std::string("command is not JSON: ") + e.what());
    }
    session->session->Apply(pbench::CommandFromJson(j));
  });
}

pb_status pb_session_set_target(pb_session* session, double roll, double pitch,
                                const double* split_lat_thor) {
  return Guard([&] {
    Need(session, "session");
    std::optional<pbench::RollSplit> split;
    if (split_lat_thor) split = pbench::RollSplit{split_lat_thor[0], split_lat_thor[1]};
    session->session->Apply(pbench::Command::SetTarget({roll, pitch}, split));
  });
}

pb_status pb_session_estop(pb_session* session) {
  return Guard([&] {
    Need(session, "session");
    session->session->Apply(pbench::Command::EStop());
  });
}

pb_status pb_session_release(pb_session* session) {
  return Guard([&] {
    Need(session, "session");
    session->session->Apply(pbench::Command::Release());
  });
}

pb_status pb_session_tick(pb_session* session, double dt, char** out_frame_json) {
  return Guard([&] {
    Need(session, "session");
    const pbench::TelemetryFrame f = session->session->Step(dt);
    if (out_frame_json) *out_frame_json = Dup(pbench::FrameJson(f).dump());
  });
}

pb_status pb_session_mode(const pb_session* session, pb_mode* out) {
  return Guard([&] {
    Need(session, "session");
    Need(out, "out");
    *out = static_cast<pb_mode>(session->session->state().mode);
  });
}

pb_status pb_session_joints(const pb_session* session, pb_joint_state* out) {
  return Guard([&] {
    Need(session, "session");
    Need(out, "out");
    Export(session->session->state().joints, out);
  });
}

pb_status pb_session_state_json(const pb_session* session, char** out_json) {
  return Guard([&] {
    Need(session, "session");
    Need(out_json, "out_json");
    *out_json = Dup(pbench::StateJson(session->session->state(), session->config).dump(2));
  });
}

pb_status pb_replay_log(const char* log_path, char** out_state_json) {
  return Guard([&] {
    Need(log_path, "log_path");
    Need(out_state_json, "out_state_json");
    std::ifstream in(log_path);
    if (!in) throw pbench::IoError(std::string("cannot open session log '") + log_path + "'");
    // The header carries the config; read it once more for the JSON view.
    std::string first;
    std::getline(in, first);
    const pbench::AppConfig config = pbench::ConfigFromJson(json::parse(first).at("config"));
    in.clear();
    in.seekg(0);
    const pbench::SessionState state = pbench::ReplayLog(in);
    json j = pbench::StateJson(state, config);
    j["ticks"] = state.ticks;
    *out_state_json = Dup(j.dump(2));
  });
}

// --- server -----------------------------------------------------------------

pb_status pb_server_create(const pb_context* ctx, const char* log_path, pb_server** out) {
  return Guard([&] {
    Need(ctx, "ctx");
    Need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<pb_server>();
    s->loop = std::make_unique<pbench::ControlLoop>(ctx->config, log_path ? log_path : "");
    s->http = std::make_unique<pbench::HttpService>(*s->loop);
    *out = s.release();
  });
}

pb_status pb_server_bind(pb_server* server, const char* host, int port, int* out_port) {
  return Guard([&] {
    Need(server, "server");
    const int bound = server->http->Bind(host ? host : "127.0.0.1", port);
    if (bound < 0) {
      throw pbench::IoError("cannot bind " + std::string(host ? host : "127.0.0.1") + ":" +
                            std::to_string(port));
    }
    if (out_port) *out_port = bound;
  });
}

pb_status pb_server_run(pb_server* server) {
  return Guard([&] {
    Need(server, "server");
    server->loop->Start();
    server->http->Serve();
    server->loop->Stop();
  });
}

pb_status pb_server_stop(pb_server* server) {
  return Guard([&] {
    Need(server, "server");
    server->http->Stop();
    server->loop->Stop();
  });
}

void pb_server_destroy(pb_server* server) {
  if (server == nullptr) return;
  server->http.reset();
  server->loop.reset();
  delete server;
}

}  // extern "C"
