#include "core/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"
#include "core/load_model.hpp"
#include "core/posture.hpp"

namespace pbench {

using nlohmann::json;

const char* ModeName(Mode mode) {
  switch (mode) {
    case Mode::kIdle: return "Idle";
    case Mode::kMoving: return "Moving";
    case Mode::kHolding: return "Holding";
    case Mode::kEStop: return "EStop";
  }
  return "?";
}

namespace {

Mode ModeFromName(const std::string& s) {
  for (Mode m : {Mode::kIdle, Mode::kMoving, Mode::kHolding, Mode::kEStop}) {
    if (s == ModeName(m)) return m;
  }
  throw InputError("unknown mode '" + s + "'");
}

double StepsPerMm(Axis a, const MechanismConfig& c) {
  return c.drive(a).steps_per_rev / c.drive(a).screw_lead;
}

std::int64_t MaxSteps(Axis a, const MechanismConfig& c) {
  return static_cast<std::int64_t>(std::floor(c.drive(a).stroke * StepsPerMm(a, c) + 1e-9));
}

std::int64_t ClampSteps(Axis a, std::int64_t s, const MechanismConfig& c) {
  return std::clamp<std::int64_t>(s, 0, MaxSteps(a, c));
}

// Base steps slaved to the lateral axis sitting at `lat_travel`.
std::int64_t SlavedBaseSteps(double lat_travel, const MechanismConfig& c) {
  const double theta_lat = FkLat(lat_travel, c);
  const double base_travel = InverseAxis(Axis::kBase, BaseSync(theta_lat), c);
  return ClampSteps(Axis::kBase, std::llround(base_travel * StepsPerMm(Axis::kBase, c)), c);
}

}  // namespace

StepPosition ToSteps(const JointState& joints, const MechanismConfig& config) {
  StepPosition s{};
  for (Axis a : kAllAxes) {
    s[static_cast<int>(a)] = ClampSteps(a, TravelToSteps(joints.Travel(a), a, config), config);
  }
  return s;
}

JointState FromSteps(const StepPosition& steps, const MechanismConfig& config) {
  std::array<double, kAxisCount> travel{};
  for (Axis a : kAllAxes) {
    travel[static_cast<int>(a)] = StepsToTravel(steps[static_cast<int>(a)], a, config);
  }
  return MakeJointState(travel, config);
}

StepPosition QuantizeGoal(const JointState& goal, const MechanismConfig& config) {
  StepPosition s = ToSteps(goal, config);
  const struct {
    Axis axis;
    double limit;
  } capped[] = {{Axis::kPitch, config.pitch_limits.hi},
                {Axis::kLat, config.lat_limits.hi},
                {Axis::kThor, config.thor_limits.hi}};
  for (const auto& c : capped) {
    auto& v = s[static_cast<int>(c.axis)];
    while (v > 0 && ForwardAxis(c.axis, StepsToTravel(v, c.axis, config), config) > c.limit) {
      --v;
    }
  }
  // Keep the roll sum inside its range after rounding.
  auto roll_of = [&](const StepPosition& p) {
    return FkLat(StepsToTravel(p[1], Axis::kLat, config), config) +
           FkThor(StepsToTravel(p[2], Axis::kThor, config), config);
  };
  while (s[2] > 0 && roll_of(s) > config.roll_limits.hi) --s[2];
  s[3] = SlavedBaseSteps(StepsToTravel(s[1], Axis::kLat, config), config);
  return s;
}

double Trajectory::SampleTime(std::size_t k) const {
  return std::min(static_cast<double>(k) * sample_period, duration);
}

std::vector<StepCommand> Trajectory::Commands(std::size_t segment) const {
  if (segment >= SegmentCount()) throw InputError("trajectory segment out of range");
  std::vector<StepCommand> out;
  for (Axis a : kAllAxes) {
    const int i = static_cast<int>(a);
    out.push_back({a, samples[segment + 1][i] - samples[segment][i], rates[segment][i]});
  }
  return out;
}

Trajectory MakeTrajectory(const JointState& from, const JointState& to,
                          const MechanismConfig& config, double sample_period) {
  if (!(sample_period > 0.0)) throw InputError("sample period must be > 0");
  CheckPostureTarget(to.Posture(), config);
  RollTotal(to.theta_lat, to.theta_thor, config);
  for (const JointState* s : {&from, &to}) {
    if (std::abs(s->theta_base - BaseSync(s->theta_lat)) > 0.5) {
      throw InputError("trajectory endpoints must have the pendulum base synchronized");
    }
  }

  const StepPosition start = ToSteps(from, config);
  const StepPosition goal = QuantizeGoal(to, config);

  Trajectory tr;
  tr.sample_period = sample_period;
  if (start == goal) {
    tr.samples = {start};
    return tr;
  }

  // Linear axes in continuous step units.
  constexpr std::array<Axis, 3> kDriven = {Axis::kPitch, Axis::kLat, Axis::kThor};
  double duration = 0.0;
  for (Axis a : kDriven) {
    const int i = static_cast<int>(a);
    const double mm = std::abs(static_cast<double>(goal[i] - start[i])) / StepsPerMm(a, config);
    duration = std::max(duration, mm / config.drive(a).v_max);
  }
  const double base_span =
      std::abs(static_cast<double>(goal[3] - start[3])) / StepsPerMm(Axis::kBase, config);
  duration = std::max(duration, base_span / config.drive(Axis::kBase).v_max);

  auto linear = [&](int i, double u) {
    return static_cast<double>(start[i]) + static_cast<double>(goal[i] - start[i]) * u;
  };
  auto lat_travel = [&](double u) {
    return linear(1, u) / StepsPerMm(Axis::kLat, config);
  };
  auto base_travel = [&](double u) {
    return InverseAxis(Axis::kBase, BaseSync(FkLat(lat_travel(u), config)), config);
  };

  // The slaved base is not constant-rate; stretch the duration until its
  // fastest segment respects v_max.
  std::size_t n = 0;
  std::vector<double> base_cont;
  for (int pass = 0; pass < 20; ++pass) {
    n = std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::ceil(duration / sample_period - 1e-9)));
    base_cont.assign(n + 1, 0.0);
    double worst = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = std::min(static_cast<double>(k) * sample_period, duration);
      base_cont[k] = base_travel(duration > 0.0 ? t / duration : 1.0);
      if (k > 0) {
        const double dt = t - std::min(static_cast<double>(k - 1) * sample_period, duration);
        if (dt > 0.0) worst = std::max(worst, std::abs(base_cont[k] - base_cont[k - 1]) / dt);
      }
    }
    const double vmax = config.drive(Axis::kBase).v_max;
    if (worst <= vmax * (1.0 + 1e-12) || duration == 0.0) break;
    duration *= worst / vmax * (1.0 + 1e-9);
  }
  tr.duration = duration;

  tr.samples.reserve(n + 1);
  tr.rates.reserve(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = tr.SampleTime(k);
    const double u = duration > 0.0 ? t / duration : 1.0;
    StepPosition p{};
    if (k == 0) {
      p = start;
    } else if (k == n) {
      p = goal;
    } else {
      for (Axis a : kDriven) {
        const int i = static_cast<int>(a);
        p[i] = std::llround(linear(i, u));
      }
      p[3] = SlavedBaseSteps(StepsToTravel(p[1], Axis::kLat, config), config);
    }
    tr.samples.push_back(p);
    if (k > 0) {
      const double dt = t - tr.SampleTime(k - 1);
      const double u0 = duration > 0.0 ? tr.SampleTime(k - 1) / duration : 0.0;
      std::array<double, kAxisCount> r{};
      for (Axis a : kDriven) {
        const int i = static_cast<int>(a);
        r[i] = dt > 0.0 ? std::abs(linear(i, u) - linear(i, u0)) / dt : 0.0;
      }
      r[3] = dt > 0.0 ? std::abs(base_cont[k] - base_cont[k - 1]) * StepsPerMm(Axis::kBase, config) / dt
                      : 0.0;
      tr.rates.push_back(r);
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Commands

const char* CommandName(Command::Kind kind) {
  switch (kind) {
    case Command::Kind::kSetTarget: return "SetTarget";
    case Command::Kind::kEStop: return "EStop";
    case Command::Kind::kRelease: return "Release";
    case Command::Kind::kSetWeights: return "SetWeights";
    case Command::Kind::kSetSubject: return "SetSubject";
  }
  return "?";
}

json CommandToJson(const Command& cmd) {
  json j = {{"kind", CommandName(cmd.kind)}};
  switch (cmd.kind) {
    case Command::Kind::kSetTarget:
      j["roll_deg"] = cmd.target.roll;
      j["pitch_deg"] = cmd.target.pitch;
      if (cmd.split) {
        j["split"] = {{"lat_deg", cmd.split->lat}, {"thor_deg", cmd.split->thor}};
      } else {
        j["split"] = "auto";
      }
      break;
    case Command::Kind::kSetWeights:
      j["w_leg"] = cmd.weights.w_leg;
      j["w_abd"] = cmd.weights.w_abd;
      break;
    case Command::Kind::kSetSubject:
      j["subject"] = cmd.subject;
      break;
    default:
      break;
  }
  return j;
}

Command CommandFromJson(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "SetTarget") {
      std::optional<RollSplit> split;
      if (j.contains("split") && j.at("split").is_object()) {
        split = RollSplit{j.at("split").at("lat_deg").get<double>(),
                          j.at("split").at("thor_deg").get<double>()};
      }
      return Command::SetTarget({j.at("roll_deg").get<double>(), j.at("pitch_deg").get<double>()},
                                split);
    }
    if (kind == "EStop") return Command::EStop();
    if (kind == "Release") return Command::Release();
    if (kind == "SetWeights") {
      return Command::SetWeights({j.at("w_leg").get<double>(), j.at("w_abd").get<double>()});
    }
    if (kind == "SetSubject") return Command::SetSubject(j.at("subject").get<std::string>());
    throw InputError("unknown command kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed command: ") + e.what());
  }
}

SessionState InitialState(const AppConfig& config) {
  SessionState s;
  s.joints = FromSteps(s.steps, config.mechanism);
  s.weights = config.weights;
  return s;
}

SessionState ApplyCommand(const SessionState& state, const Command& cmd,
                          const AppConfig& config) {
  SessionState s = state;
  switch (cmd.kind) {
    case Command::Kind::kEStop:
      s.mode = Mode::kEStop;
      s.trajectory.reset();
      s.elapsed = 0.0;
      return s;

    case Command::Kind::kRelease:
      if (state.mode != Mode::kEStop) {
        throw IllegalModeError(std::string("Release rejected: mode is ") +
                               ModeName(state.mode) + ", Release is only legal in EStop");
      }
      s.mode = Mode::kHolding;
      return s;

    case Command::Kind::kSetTarget: {
      if (state.mode != Mode::kIdle && state.mode != Mode::kHolding) {
        throw IllegalModeError(std::string("SetTarget rejected: mode is ") +
                               ModeName(state.mode) + ", SetTarget needs Idle or Holding");
      }
      const MechanismConfig& mech = config.mechanism;
      CheckPostureTarget(cmd.target, mech);
      RollSplit split;
      if (cmd.split) {
        CheckSplit(cmd.target, *cmd.split, mech);
        split = *cmd.split;
      } else {
        split = SplitOptimize(cmd.target.roll, true, config.load, state.weights, mech);
      }
      const JointState goal = Ik(cmd.target, split, mech);
      s.trajectory = std::make_shared<const Trajectory>(
          MakeTrajectory(state.joints, goal, mech, 1.0 / config.control.tick_hz));
      s.target = Target{cmd.target, split};
      s.mode = Mode::kMoving;
      s.elapsed = 0.0;
      s.progress = 0.0;
      return s;
    }

    case Command::Kind::kSetWeights:
      try {
        cmd.weights.Validate();
      } catch (const Error& e) {
        throw InputError(e.what());
      }
      s.weights = cmd.weights;
      return s;

    case Command::Kind::kSetSubject:
      s.subject = cmd.subject;
      s.weights = config.WeightsFor(cmd.subject);
      return s;
  }
  throw InputError("unknown command");
}

SessionState Tick(const SessionState& state, double dt, const AppConfig& config) {
  if (!(dt > 0.0)) throw InputError("tick dt must be > 0");
  SessionState s = state;
  s.clock += dt;
  ++s.ticks;
  if (s.mode != Mode::kMoving || !s.trajectory) return s;

  const Trajectory& tr = *s.trajectory;
  s.elapsed += dt;
  if (tr.Empty() || s.elapsed >= tr.duration - 1e-12) {
    s.steps = tr.samples.back();
    s.mode = Mode::kHolding;
    s.trajectory.reset();
    s.progress = 1.0;
    s.elapsed = 0.0;
  } else {
    const auto k = std::min(tr.samples.size() - 1,
                            static_cast<std::size_t>(s.elapsed / tr.sample_period + 1e-9));
    s.steps = tr.samples[k];
    s.progress = s.elapsed / tr.duration;
  }
  s.joints = FromSteps(s.steps, config.mechanism);
  return s;
}

TelemetryFrame MakeFrame(const SessionState& state, const AppConfig& config) {
  TelemetryFrame f;
  f.t = state.clock;
  f.mode = state.mode;
  f.joints = state.joints;
  f.posture = state.joints.Posture();
  f.gravity = PostureToGravity(f.posture);
  f.load = PredictLoad(state.joints.theta_lat, state.joints.theta_thor, true, config.load,
                       config.mechanism, state.joints.theta_pitch);
  return f;
}

json JointsJson(const JointState& j) {
  return {{"travel_mm",
           {{"pitch", j.Travel(Axis::kPitch)},
            {"lat", j.Travel(Axis::kLat)},
            {"thor", j.Travel(Axis::kThor)},
            {"base", j.Travel(Axis::kBase)}}},
          {"theta_deg",
           {{"pitch", j.theta_pitch},
            {"lat", j.theta_lat},
            {"thor", j.theta_thor},
            {"base", j.theta_base}}},
          {"passive_height_mm", j.passive_height}};
}

json FrameJson(const TelemetryFrame& f) {
  return {{"t", f.t},
          {"mode", ModeName(f.mode)},
          {"joints", JointsJson(f.joints)},
          {"posture", {{"roll_deg", f.posture.roll}, {"pitch_deg", f.posture.pitch}}},
          {"gravity_angles", {{"g_roll_deg", f.gravity.g_roll}, {"g_pitch_deg", f.gravity.g_pitch}}},
          {"load", {{"leg", f.load.leg}, {"abd", f.load.abd}}}};
}

json StateJson(const SessionState& state, const AppConfig& config) {
  json j = FrameJson(MakeFrame(state, config));
  j["steps"] = {{"pitch", state.steps[0]},
                {"lat", state.steps[1]},
                {"thor", state.steps[2]},
                {"base", state.steps[3]}};
  j["progress"] = state.progress;
  j["subject"] = state.subject;
  j["weights"] = {{"w_leg", state.weights.w_leg}, {"w_abd", state.weights.w_abd}};
  if (state.target) {
    j["target"] = {{"roll_deg", state.target->posture.roll},
                   {"pitch_deg", state.target->posture.pitch},
                   {"split", {{"lat_deg", state.target->split.lat},
                              {"thor_deg", state.target->split.thor}}}};
  } else {
    j["target"] = nullptr;
  }
  if (state.trajectory) {
    j["trajectory"] = {{"duration_s", state.trajectory->duration},
                       {"samples", state.trajectory->samples.size()}};
  } else {
    j["trajectory"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(AppConfig config, LogSink sink)
    : config_(std::move(config)), state_(InitialState(config_)), sink_(std::move(sink)) {
  if (sink_) sink_({{"type", "header"}, {"version", 1}, {"config", ConfigToJson(config_)}});
}

void Session::Apply(const Command& cmd) {
  json record = {{"type", "command"}, {"t", state_.clock}, {"command", CommandToJson(cmd)}};
  try {
    state_ = ApplyCommand(state_, cmd, config_);
  } catch (const Error& e) {
    if (sink_) {
      record["accepted"] = false;
      record["error"] = {{"kind", ErrorKindName(e.kind())}, {"message", e.what()}};
      sink_(record);
    }
    throw;
  }
  if (sink_) {
    record["accepted"] = true;
    sink_(record);
  }
}

TelemetryFrame Session::Step(double dt) {
  state_ = Tick(state_, dt, config_);
  TelemetryFrame f = MakeFrame(state_, config_);
  if (sink_) {
    json record = FrameJson(f);
    record["type"] = "frame";
    record["dt"] = dt;
    sink_(record);
  }
  return f;
}

SessionState ReplayLog(std::istream& log) {
  std::string line;
  std::optional<Session> session;
  std::size_t line_no = 0;
  while (std::getline(log, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("session log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = rec.value("type", "");
    if (type == "header") {
      session.emplace(ConfigFromJson(rec.at("config")));
      continue;
    }
    if (!session) throw InputError("session log must start with a header record");
    if (type == "command") {
      try {
        session->Apply(CommandFromJson(rec.at("command")));
      } catch (const Error&) {
        if (rec.value("accepted", true)) {
          throw InputError("replayed command on line " + std::to_string(line_no) +
                           " was rejected but the log recorded it as accepted");
        }
      }
    } else if (type == "frame") {
      session->Step(rec.at("dt").get<double>());
      if (ModeFromName(rec.at("mode").get<std::string>()) != session->state().mode) {
        throw InputError("replay diverged from the log at line " + std::to_string(line_no));
      }
    } else {
      throw InputError("unknown session log record type '" + type + "'");
    }
  }
  if (!session) throw InputError("empty session log");
  return session->state();
}

}  // namespace pbench
