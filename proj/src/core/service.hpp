#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "core/config.hpp"
#include "core/control.hpp"
#include "core/errors.hpp"
#include "core/planner.hpp"

namespace httplib {
class Server;
}

namespace pbench {

struct CommandResult {
  bool accepted = false;
  std::optional<ErrorKind> error;
  std::string message;
  nlohmann::json state;  // snapshot right after the command was applied
};

struct Snapshot {
  std::uint64_t tick = 0;
  nlohmann::json state;  // StateJson
  nlohmann::json frame;  // FrameJson
};

// Single authoritative control loop. Commands go through a serialized queue
// and are applied at the start of the next tick; readers get immutable
// snapshots and never block the loop.
class ControlLoop {
 public:
  explicit ControlLoop(AppConfig config, const std::string& log_path = {});
  ~ControlLoop();

  ControlLoop(const ControlLoop&) = delete;
  ControlLoop& operator=(const ControlLoop&) = delete;

  // Real-time ticking at config.control.tick_hz on a worker thread.
  void Start();
  void Stop();

  // Deterministic manual stepping (no worker thread): drain queue, tick once.
  void StepOnce();

  std::future<CommandResult> Submit(const Command& cmd);

  std::shared_ptr<const Snapshot> Latest() const;

  // Blocks until a stream frame newer than `after` is published (or the
  // timeout / stop). Returns nullptr on timeout.
  std::shared_ptr<const Snapshot> WaitStreamFrame(std::uint64_t after,
                                                  std::chrono::milliseconds timeout) const;

  const AppConfig& config() const { return config_; }
  bool running() const { return running_.load(); }

 private:
  struct Pending {
    Command cmd;
    std::promise<CommandResult> promise;
  };

  void RunOne();
  void Publish(bool stream);

  AppConfig config_;
  std::ofstream log_file_;
  Session session_;

  mutable std::mutex queue_mu_;
  std::deque<Pending> queue_;

  mutable std::mutex snap_mu_;
  mutable std::condition_variable stream_cv_;
  std::shared_ptr<const Snapshot> latest_;
  std::shared_ptr<const Snapshot> stream_latest_;

  std::uint64_t tick_ = 0;
  std::uint64_t stream_every_ = 5;
  std::atomic<bool> running_{false};
  std::thread worker_;
};

// HTTP front of a ControlLoop:
//   GET /state, POST /target, POST /estop, POST /release, POST /weights,
//   POST /subject, GET /plan, GET /regions, GET /stream (NDJSON).
class HttpService {
 public:
  explicit HttpService(ControlLoop& loop);
  ~HttpService();

  // Binds; port 0 picks a free port. Returns the bound port or -1.
  int Bind(const std::string& host, int port);
  // Blocks serving until Stop().
  void Serve();
  void Stop();

 private:
  void Routes();

  ControlLoop& loop_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> stopping_{false};
};

nlohmann::json RegionsJson(const AppConfig& config);
nlohmann::json PlanJson(const PosturePlan& plan);

}  // namespace pbench
