#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/config.hpp"
#include "core/kinematics.hpp"
#include "core/types.hpp"

namespace pbench {

using StepPosition = std::array<std::int64_t, kAxisCount>;

enum class Mode { kIdle, kMoving, kHolding, kEStop };
const char* ModeName(Mode mode);

// Per-axis step schedule sampled at a fixed period. samples[0] is the start
// pose and samples.back() the goal; sample k sits at min(k * period, duration).
struct Trajectory {
  double sample_period = 0.01;
  double duration = 0.0;
  std::vector<StepPosition> samples;
  // Commanded pulse rate (steps/s) of every axis over each segment k -> k+1.
  std::vector<std::array<double, kAxisCount>> rates;

  bool Empty() const { return samples.size() <= 1; }
  std::size_t SegmentCount() const { return samples.empty() ? 0 : samples.size() - 1; }
  std::vector<StepCommand> Commands(std::size_t segment) const;
  double SampleTime(std::size_t k) const;
};

StepPosition ToSteps(const JointState& joints, const MechanismConfig& config);
JointState FromSteps(const StepPosition& steps, const MechanismConfig& config);

// Goal step counts for an IK solution. Rounds to the nearest step but never
// past a joint limit; the base is re-derived from the quantized lateral axis.
StepPosition QuantizeGoal(const JointState& goal, const MechanismConfig& config);

// Constant-rate profiles on pitch / lateral / thoracic axes, time-scaled so
// they finish together; the base is regenerated from the lateral profile at
// every sample. Both states must be base-synchronized.
Trajectory MakeTrajectory(const JointState& from, const JointState& to,
                          const MechanismConfig& config, double sample_period);

struct Target {
  PostureAngles posture;
  RollSplit split;
};

struct TelemetryFrame {
  double t = 0.0;
  Mode mode = Mode::kIdle;
  JointState joints;
  PostureAngles posture;
  GravityAngles gravity;
  LoadEstimate load;
};

struct SessionState {
  Mode mode = Mode::kIdle;
  StepPosition steps{};
  JointState joints;
  std::optional<Target> target;
  std::shared_ptr<const Trajectory> trajectory;
  double elapsed = 0.0;  // s into the active trajectory
  double progress = 0.0;
  double clock = 0.0;
  std::uint64_t ticks = 0;
  std::string subject;
  SplitWeights weights;
};

struct Command {
  enum class Kind { kSetTarget, kEStop, kRelease, kSetWeights, kSetSubject };
  Kind kind = Kind::kEStop;
  PostureAngles target;               // kSetTarget
  std::optional<RollSplit> split;     // kSetTarget; empty means "auto"
  SplitWeights weights;               // kSetWeights
  std::string subject;                // kSetSubject

  static Command SetTarget(PostureAngles t, std::optional<RollSplit> s = std::nullopt) {
    Command c;
    c.kind = Kind::kSetTarget;
    c.target = t;
    c.split = s;
    return c;
  }
  static Command EStop() { return Command{}; }
  static Command Release() {
    Command c;
    c.kind = Kind::kRelease;
    return c;
  }
  static Command SetWeights(SplitWeights w) {
    Command c;
    c.kind = Kind::kSetWeights;
    c.weights = w;
    return c;
  }
  static Command SetSubject(std::string id) {
    Command c;
    c.kind = Kind::kSetSubject;
    c.subject = std::move(id);
    return c;
  }
};

const char* CommandName(Command::Kind kind);
nlohmann::json CommandToJson(const Command& cmd);
Command CommandFromJson(const nlohmann::json& j);

SessionState InitialState(const AppConfig& config);

// Applies a command. Throws IllegalModeError (mode named in the message) or
// RangeError; the input state is never modified.
SessionState ApplyCommand(const SessionState& state, const Command& cmd,
                          const AppConfig& config);

// Advances the simulated clock by dt. Joint positions only change in Moving.
SessionState Tick(const SessionState& state, double dt, const AppConfig& config);

TelemetryFrame MakeFrame(const SessionState& state, const AppConfig& config);

nlohmann::json JointsJson(const JointState& joints);
nlohmann::json FrameJson(const TelemetryFrame& frame);
nlohmann::json StateJson(const SessionState& state, const AppConfig& config);

// Owns one SessionState and records every command and tick as JSONL
// (header line, then "command" and "frame" records).
class Session {
 public:
  using LogSink = std::function<void(const nlohmann::json&)>;

  explicit Session(AppConfig config, LogSink sink = {});

  const SessionState& state() const { return state_; }
  const AppConfig& config() const { return config_; }

  // Rethrows the rejection after logging it.
  void Apply(const Command& cmd);
  TelemetryFrame Step(double dt);

 private:
  AppConfig config_;
  SessionState state_;
  LogSink sink_;
};

// Rebuilds a session from its JSONL log and returns the final state.
SessionState ReplayLog(std::istream& log);

}  // namespace pbench
