// Command-line front door. Links only the C API.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "posture_bench/posture_bench.h"

namespace {

using nlohmann::json;

// Thrown after a failed C call; main turns it into a message and exit code.
struct CallFailed {
  pb_status status;
  std::string message;
};

void Check(pb_status s) {
  if (s != PB_OK) throw CallFailed{s, pb_last_error()};
}

std::string Take(char* s) {
  std::string out = s ? s : "";
  pb_string_free(s);
  return out;
}

struct Context {
  pb_context* ctx = nullptr;
  explicit Context(const std::string& path) { Check(pb_context_create(path.c_str(), &ctx)); }
  ~Context() { pb_context_destroy(ctx); }
  Context(const Context&) = delete;
  Context& operator=(const Context&) = delete;
};

std::vector<double> ParsePair(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CallFailed{PB_ERR_INPUT, std::string(what) + ": '" + item + "' is not a number"};
    }
  }
  if (v.size() != 2) {
    throw CallFailed{PB_ERR_INPUT, std::string(what) + " expects two comma-separated numbers"};
  }
  return v;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CallFailed{PB_ERR_IO, "cannot open '" + path + "'"};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string DirOf(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

// --- subcommands ------------------------------------------------------------

int Serve(const std::string& config, const std::string& host, int port,
          const std::string& log) {
  // Signals are taken by a watcher thread rather than a handler, so stopping
  // the server never runs in signal context. Block them before any thread
  // starts so every thread inherits the mask.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  Context c(config);
  pb_server* server = nullptr;
  Check(pb_server_create(c.ctx, log.empty() ? nullptr : log.c_str(), &server));
  int bound = 0;
  if (pb_server_bind(server, host.c_str(), port, &bound) != PB_OK) {
    const std::string msg = pb_last_error();
    pb_server_destroy(server);
    throw CallFailed{PB_ERR_IO, msg};
  }
  std::printf("listening on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  std::thread([server, stop_signals] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    pb_server_stop(server);
  }).detach();
  // `server` is not destroyed: the detached watcher may still reference it,
  // and the process ends right after this returns.
  Check(pb_server_run(server));
  return 0;
}

int Simulate(const std::string& config, const std::string& target, const std::string& split,
             const std::string& log, double dt, double max_seconds, bool frames) {
  const auto t = ParsePair(target, "--target");
  Context c(config);
  pb_session* s = nullptr;
  Check(pb_session_create(c.ctx, log.empty() ? nullptr : log.c_str(), &s));
  std::unique_ptr<pb_session, void (*)(pb_session*)> guard(s, pb_session_destroy);

  std::vector<double> sp;
  if (!split.empty()) sp = ParsePair(split, "--split");
  Check(pb_session_set_target(s, t[0], t[1], sp.empty() ? nullptr : sp.data()));

  pb_mode mode = PB_MODE_MOVING;
  double elapsed = 0.0;
  while (mode == PB_MODE_MOVING && elapsed < max_seconds) {
    char* frame = nullptr;
    Check(pb_session_tick(s, dt, frames ? &frame : nullptr));
    if (frames) std::printf("%s\n", Take(frame).c_str());
    elapsed += dt;
    Check(pb_session_mode(s, &mode));
  }
  char* state = nullptr;
  Check(pb_session_state_json(s, &state));
  std::printf("%s\n", Take(state).c_str());
  if (mode == PB_MODE_MOVING) {
    std::fprintf(stderr, "target not reached within %.1f s\n", max_seconds);
    return 3;
  }
  return 0;
}

int Replay(const std::string& log) {
  char* state = nullptr;
  Check(pb_replay_log(log.c_str(), &state));
  std::printf("%s\n", Take(state).c_str());
  return 0;
}

int FitPosture(const std::string& config, const std::string& track) {
  Context c(config);
  pb_probe_sample* samples = nullptr;
  size_t n = 0;
  Check(pb_read_probe_track(track.c_str(), &samples, &n));
  pb_plane plane{};
  const pb_status fit = pb_fit_plane(samples, n, &plane);
  pb_probe_track_free(samples);
  Check(fit);
  double roll = 0, pitch = 0, g_roll = 0, g_pitch = 0;
  Check(pb_plane_to_posture(&plane, &roll, &pitch));
  Check(pb_posture_to_gravity(roll, pitch, &g_roll, &g_pitch));
  const json out = {
      {"samples", n},
      {"plane",
       {{"normal", {plane.normal[0], plane.normal[1], plane.normal[2]}},
        {"centroid_mm", {plane.centroid[0], plane.centroid[1], plane.centroid[2]}},
        {"rms_residual_mm", plane.rms_residual}}},
      {"posture", {{"roll_deg", roll}, {"pitch_deg", pitch}}},
      {"gravity_angles", {{"g_roll_deg", g_roll}, {"g_pitch_deg", g_pitch}}}};
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int Emg(const std::string& config, const std::string& conditions, const std::string& manifest,
        const std::string& channel_map, const std::string& report) {
  if (conditions.empty() == manifest.empty()) {
    throw CallFailed{PB_ERR_INPUT, "give exactly one of --conditions or --manifest"};
  }
  Context c(config);
  json req;
  std::string base;
  if (!manifest.empty()) {
    req = json::parse(ReadFile(manifest));
    base = DirOf(manifest);
  } else {
    json conds = json::object();
    std::stringstream ss(conditions);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw CallFailed{PB_ERR_INPUT, "--conditions entries look like A=file.csv"};
      }
      conds[item.substr(0, eq)] = item.substr(eq + 1);
    }
    req = {{"subjects", {{{"id", "S1"}, {"conditions", conds}}}}};
  }
  if (!channel_map.empty()) req["channel_map"] = json::parse(ReadFile(channel_map));

  char* js = nullptr;
  char* table = nullptr;
  Check(pb_emg_report(c.ctx, req.dump().c_str(), base.empty() ? nullptr : base.c_str(), &js,
                      &table));
  const std::string report_json = Take(js);
  std::printf("%s", Take(table).c_str());
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw CallFailed{PB_ERR_IO, "cannot write '" + report + "'"};
    out << report_json << '\n';
  }
  return 0;
}

int Plan(const std::string& config, const std::string& views, const std::string& subject,
         bool per_view) {
  Context c(config);
  char* js = nullptr;
  Check(pb_plan(c.ctx, views.c_str(), subject.empty() ? nullptr : subject.c_str(),
                per_view ? 1 : 0, &js));
  std::printf("%s\n", Take(js).c_str());
  return 0;
}

int Regions(const std::string& config) {
  Context c(config);
  char* js = nullptr;
  Check(pb_regions_json(c.ctx, &js));
  std::printf("%s\n", Take(js).c_str());
  return 0;
}

int ShowConfig(const std::string& config) {
  Context c(config);
  char* js = nullptr;
  Check(pb_context_config_json(c.ctx, &js));
  std::printf("%s\n", Take(js).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posture bench: seated echocardiography posture robot twin"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  app.add_option("--config", config,
                 "JSON config file (default: $POSTURE_BENCH_CONFIG, then built-in)");
  app.set_version_flag("--version", pb_version());

  auto* serve = app.add_subcommand("serve", "Run the HTTP control service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_log;
  serve->add_option("--port", port, "TCP port; 0 picks a free one")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--log", serve_log, "Session log (JSONL)");

  auto* sim = app.add_subcommand("simulate", "Drive a simulated session to a target");
  std::string target, split, sim_log;
  double dt = 0.01, max_seconds = 120.0;
  bool frames = false;
  sim->add_option("--target", target, "ROLL,PITCH in degrees")->required();
  sim->add_option("--split", split, "LAT,THOR in degrees (default: load-optimal)");
  sim->add_option("--log", sim_log, "Session log (JSONL)");
  sim->add_option("--dt", dt, "Tick length, s")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--max-seconds", max_seconds, "Give up after this much simulated time")
      ->capture_default_str();
  sim->add_flag("--frames", frames, "Print every telemetry frame as NDJSON");

  auto* replay = app.add_subcommand("replay", "Replay a session log and print the final state");
  std::string replay_log;
  replay->add_option("log", replay_log, "Session log (JSONL)")->required();

  auto* fit = app.add_subcommand("fit-posture", "Estimate posture angles from a probe track");
  std::string track;
  fit->add_option("track", track, "CSV with header t,x,y,z (s, mm)")->required();

  auto* emg = app.add_subcommand("emg", "EMG loads and condition ratios");
  std::string conditions, manifest, channel_map, report;
  emg->add_option("--conditions", conditions, "A=a.csv,B=b.csv,C=c.csv,D=d.csv (one subject)");
  emg->add_option("--manifest", manifest,
                  "JSON {\"subjects\": [{\"id\", \"conditions\": {...}}]}; paths relative to it");
  emg->add_option("--channel-map", channel_map, "JSON column -> {muscle, side}");
  emg->add_option("--report", report, "Write the JSON report here");

  auto* plan = app.add_subcommand("plan", "Plan a low-load posture for a set of views");
  std::string views, subject;
  bool per_view = false;
  plan->add_option("--views", views, "Comma-separated views, e.g. plax,a4c")->required();
  plan->add_option("--subject", subject, "Subject id for region and weight overrides");
  plan->add_flag("--per-view", per_view, "One posture per view instead of a shared one");

  auto* regions = app.add_subcommand("regions", "Print mechanism bounds and view regions");
  auto* show = app.add_subcommand("config", "Print the resolved config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return Serve(config, host, port, serve_log);
    if (*sim) return Simulate(config, target, split, sim_log, dt, max_seconds, frames);
    if (*replay) return Replay(replay_log);
    if (*fit) return FitPosture(config, track);
    if (*emg) return Emg(config, conditions, manifest, channel_map, report);
    if (*plan) return Plan(config, views, subject, per_view);
    if (*regions) return Regions(config);
    if (*show) return ShowConfig(config);
  } catch (const CallFailed& e) {
    std::fprintf(stderr, "error (%s): %s\n", pb_status_name(e.status), e.message.c_str());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error (input): %s\n", e.what());
    return 2;
  }
  return 1;
}
