#include "core/service.hpp"

#include <httplib.h>

#include <sstream>
#include <vector>

#include "core/planner.hpp"

namespace pbench {

using nlohmann::json;

ControlLoop::ControlLoop(AppConfig config, const std::string& log_path)
    : config_(std::move(config)),
      log_file_(log_path.empty() ? std::ofstream() : std::ofstream(log_path)),
      session_(config_, log_path.empty()
                            ? Session::LogSink{}
                            : Session::LogSink([this](const json& rec) {
                                log_file_ << rec.dump() << '\n';
                              })) {
  if (!log_path.empty() && !log_file_) throw IoError("cannot open session log '" + log_path + "'");
  stream_every_ = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(config_.control.tick_hz / config_.control.stream_hz)));
  Publish(true);
}

ControlLoop::~ControlLoop() { Stop(); }

void ControlLoop::Start() {
  if (running_.exchange(true)) return;
  worker_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / config_.control.tick_hz));
    auto next = clock::now();
    while (running_.load()) {
      RunOne();
      next += period;
      std::this_thread::sleep_until(next);
    }
  });
}

void ControlLoop::Stop() {
  if (running_.exchange(false) && worker_.joinable()) worker_.join();
  stream_cv_.notify_all();
  // Anyone still waiting on a command gets an answer.
  std::deque<Pending> rest;
  {
    std::lock_guard lock(queue_mu_);
    rest.swap(queue_);
  }
  for (auto& p : rest) {
    p.promise.set_value({false, ErrorKind::kIo, "control loop stopped", {}});
  }
  if (log_file_.is_open()) log_file_.flush();
}

void ControlLoop::StepOnce() { RunOne(); }

std::future<CommandResult> ControlLoop::Submit(const Command& cmd) {
  Pending p{cmd, {}};
  auto fut = p.promise.get_future();
  std::lock_guard lock(queue_mu_);
  queue_.push_back(std::move(p));
  return fut;
}

void ControlLoop::RunOne() {
  std::deque<Pending> batch;
  {
    std::lock_guard lock(queue_mu_);
    batch.swap(queue_);
  }
  std::vector<CommandResult> results;
  results.reserve(batch.size());
  for (auto& p : batch) {
    CommandResult r;
    try {
      session_.Apply(p.cmd);
      r.accepted = true;
    } catch (const Error& e) {
      r.error = e.kind();
      r.message = e.what();
    }
    r.state = StateJson(session_.state(), config_);
    results.push_back(std::move(r));
  }
  session_.Step(1.0 / config_.control.tick_hz);
  ++tick_;
  Publish(tick_ % stream_every_ == 0);
  // Answer only once the snapshot is out, so a caller reading /state right
  // after its command sees the command's effect.
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i].promise.set_value(std::move(results[i]));
}

void ControlLoop::Publish(bool stream) {
  auto snap = std::make_shared<Snapshot>();
  snap->tick = tick_;
  snap->state = StateJson(session_.state(), config_);
  snap->frame = FrameJson(MakeFrame(session_.state(), config_));
  std::shared_ptr<const Snapshot> c = std::move(snap);
  {
    std::lock_guard lock(snap_mu_);
    latest_ = c;
    if (stream) stream_latest_ = c;
  }
  if (stream) stream_cv_.notify_all();
}

std::shared_ptr<const Snapshot> ControlLoop::Latest() const {
  std::lock_guard lock(snap_mu_);
  return latest_;
}

std::shared_ptr<const Snapshot> ControlLoop::WaitStreamFrame(
    std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(snap_mu_);
  const bool ok = stream_cv_.wait_for(lock, timeout, [&] {
    return (stream_latest_ && stream_latest_->tick > after) || !running_.load();
  });
  if (!ok || !stream_latest_ || stream_latest_->tick <= after) return nullptr;
  return stream_latest_;
}

// ---------------------------------------------------------------------------

json RegionsJson(const AppConfig& config) {
  const MechanismConfig& m = config.mechanism;
  json views = json::array();
  for (const auto& r : config.regions) {
    views.push_back({{"view", r.view},
                     {"roll_deg", {r.roll.lo, r.roll.hi}},
                     {"pitch_deg", {r.pitch.lo, r.pitch.hi}}});
  }
  json subjects = json::object();
  for (const auto& [id, s] : config.subjects) {
    json overrides = json::array();
    for (const auto& [view, r] : s.regions) {
      overrides.push_back({{"view", view},
                           {"roll_deg", {r.roll.lo, r.roll.hi}},
                           {"pitch_deg", {r.pitch.lo, r.pitch.hi}}});
    }
    subjects[id] = {{"regions", overrides}};
  }
  return {{"bounds",
           {{"roll_deg", {m.roll_limits.lo, m.roll_limits.hi}},
            {"pitch_deg", {m.pitch_limits.lo, m.pitch_limits.hi}}}},
          {"views", views},
          {"subjects", subjects}};
}

json PlanJson(const PosturePlan& plan) {
  return {{"views", plan.views},
          {"region",
           {{"roll_deg", {plan.region.roll.lo, plan.region.roll.hi}},
            {"pitch_deg", {plan.region.pitch.lo, plan.region.pitch.hi}}}},
          {"posture", {{"roll_deg", plan.posture.roll}, {"pitch_deg", plan.posture.pitch}}},
          {"split", {{"lat_deg", plan.split.lat}, {"thor_deg", plan.split.thor}}},
          {"load", {{"leg", plan.load.leg}, {"abd", plan.load.abd}}},
          {"objective", plan.objective}};
}

namespace {

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kRange:
    case ErrorKind::kInput:
    case ErrorKind::kConfig:
    case ErrorKind::kDegenerate: return 400;
    case ErrorKind::kIllegalMode: return 409;
    case ErrorKind::kPlanning: return 422;
    case ErrorKind::kIo: return 503;
  }
  return 500;
}

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, ErrorKind kind, const std::string& message) {
  SendJson(res, StatusFor(kind),
           {{"error", {{"kind", ErrorKindName(kind)}, {"message", message}}}});
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

HttpService::HttpService(ControlLoop& loop)
    : loop_(loop), server_(std::make_unique<httplib::Server>()) {
  Routes();
}

HttpService::~HttpService() { Stop(); }

int HttpService::Bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void HttpService::Serve() { server_->listen_after_bind(); }

void HttpService::Stop() {
  stopping_ = true;
  if (server_) server_->stop();
}

void HttpService::Routes() {
  auto submit = [this](httplib::Response& res, const Command& cmd) {
    auto fut = loop_.Submit(cmd);
    if (fut.wait_for(std::chrono::seconds(2)) != std::future_status::ready) {
      SendError(res, ErrorKind::kIo, "control loop did not answer");
      return;
    }
    CommandResult r = fut.get();
    if (!r.accepted) {
      json body = {{"error",
                    {{"kind", ErrorKindName(r.error.value_or(ErrorKind::kIo))},
                     {"message", r.message}}},
                   {"state", r.state}};
      SendJson(res, StatusFor(r.error.value_or(ErrorKind::kIo)), body);
      return;
    }
    SendJson(res, 200, {{"accepted", true}, {"state", r.state}});
  };

  auto parse_body = [](const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("request body is not JSON: ") + e.what());
    }
  };

  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      SendError(res, e.kind(), e.what());
    } catch (const std::exception& e) {
      SendJson(res, 500, {{"error", {{"kind", "internal"}, {"message", e.what()}}}});
    }
  });

  server_->Get("/state", [this](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, loop_.Latest()->state);
  });

  server_->Post("/target", [=](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    json cmd = {{"kind", "SetTarget"}};
    if (!body.contains("roll_deg") || !body.contains("pitch_deg")) {
      throw InputError("target needs roll_deg and pitch_deg");
    }
    cmd["roll_deg"] = body.at("roll_deg");
    cmd["pitch_deg"] = body.at("pitch_deg");
    if (body.contains("split")) {
      const json& s = body.at("split");
      if (s.is_string() && s.get<std::string>() != "auto") {
        throw InputError("split must be \"auto\" or {lat_deg, thor_deg}");
      }
      cmd["split"] = s;
    }
    submit(res, CommandFromJson(cmd));
  });

  server_->Post("/estop", [=](const httplib::Request&, httplib::Response& res) {
    submit(res, Command::EStop());
  });

  server_->Post("/release", [=](const httplib::Request&, httplib::Response& res) {
    submit(res, Command::Release());
  });

  server_->Post("/weights", [=](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    json cmd = body;
    cmd["kind"] = "SetWeights";
    submit(res, CommandFromJson(cmd));
  });

  server_->Post("/subject", [=](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    json cmd = body;
    cmd["kind"] = "SetSubject";
    submit(res, CommandFromJson(cmd));
  });

  server_->Get("/regions", [this](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, RegionsJson(loop_.config()));
  });

  server_->Get("/plan", [this](const httplib::Request& req, httplib::Response& res) {
    const auto views = SplitList(req.get_param_value("views"));
    const std::string subject = req.get_param_value("subject");
    const std::string mode =
        req.has_param("mode") ? req.get_param_value("mode") : std::string("intersection");
    const AppConfig& cfg = loop_.config();
    SplitWeights w = cfg.WeightsFor(subject);
    if (subject.empty()) {
      const json& st = loop_.Latest()->state;
      w = {st.at("weights").at("w_leg").get<double>(), st.at("weights").at("w_abd").get<double>()};
    }
    if (mode == "intersection") {
      SendJson(res, 200, PlanJson(PlanPosture(views, w, cfg, subject)));
    } else if (mode == "per_view") {
      json plans = json::array();
      for (const auto& p : PlanPerView(views, w, cfg, subject)) plans.push_back(PlanJson(p));
      SendJson(res, 200, {{"plans", plans}});
    } else {
      throw InputError("mode must be 'intersection' or 'per_view'");
    }
  });

  server_->Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
    auto last = std::make_shared<std::uint64_t>(0);
    if (auto s = loop_.Latest()) *last = s->tick == 0 ? 0 : s->tick - 1;
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, last](std::size_t, httplib::DataSink& sink) {
          while (!stopping_.load()) {
            auto snap = loop_.WaitStreamFrame(*last, std::chrono::milliseconds(200));
            if (!snap) {
              if (!loop_.running()) break;
              continue;
            }
            *last = snap->tick;
            const std::string line = snap->frame.dump() + "\n";
            return sink.write(line.data(), line.size());
          }
          sink.done();
          return false;
        });
  });
}

}  // namespace pbench
