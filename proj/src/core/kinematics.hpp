#pragma once

#include <array>
#include <cstdint>

#include "core/config.hpp"
#include "core/types.hpp"

namespace pbench {

struct JointState {
  std::array<double, kAxisCount> travel{};  // mm, indexed by Axis
  double passive_height = 0.0;              // mm, manual setting
  double theta_pitch = 0.0;                 // deg, derived
  double theta_lat = 0.0;
  double theta_thor = 0.0;
  double theta_base = 0.0;

  double Travel(Axis a) const { return travel[static_cast<int>(a)]; }
  double Roll() const { return theta_lat + theta_thor; }
  PostureAngles Posture() const { return {Roll(), theta_pitch}; }
};

struct StepCommand {
  Axis axis = Axis::kPitch;
  std::int64_t steps = 0;
  double rate = 0.0;  // steps/s
};

// Throws ConfigError when the actuator triangle degenerates anywhere on the
// stroke.
void CheckLinkage(const LeverLinkage& linkage, double stroke, const char* name);

// Per-axis forward kinematics, degrees. Every FK is zero at zero travel and
// strictly increasing over the stroke; travel outside [0, stroke] throws
// RangeError.
double FkPitch(double travel, const MechanismConfig& config);
double FkLat(double travel, const MechanismConfig& config);
double FkThor(double travel, const MechanismConfig& config);
double FkBase(double travel, const MechanismConfig& config);
double ForwardAxis(Axis axis, double travel, const MechanismConfig& config);

// Travel producing `angle` on one axis, by bisection on the monotone FK.
double InverseAxis(Axis axis, double angle, const MechanismConfig& config);

// Builds a state from travels, deriving all joint angles.
JointState MakeJointState(const std::array<double, kAxisCount>& travels,
                          const MechanismConfig& config);

double RollTotal(double theta_lat, double theta_thor, const MechanismConfig& config);

// Pendulum base angle slaved to lumbar lateral bending.
double BaseSync(double theta_lat);

JointState Ik(const PostureAngles& target, const RollSplit& split,
              const MechanismConfig& config);

// Range checks only; used before any IK work so callers get the violated
// bound in the message.
void CheckPostureTarget(const PostureAngles& target, const MechanismConfig& config);
void CheckSplit(const PostureAngles& target, const RollSplit& split,
                const MechanismConfig& config);

std::int64_t TravelToSteps(double delta_travel, Axis axis, const MechanismConfig& config);
double StepsToTravel(std::int64_t steps, Axis axis, const MechanismConfig& config);

struct Vec2 {
  double x = 0.0;  // lateral, mm
  double z = 0.0;  // vertical, mm
};

// Frontal-plane picture of the lumbar lateral bending joint and the leg
// pendulum base. Both rotate about centers that sit trunk_axis_offset above
// the base plate; `center_mismatch` moves the pendulum center down by that
// many mm to model non-coincident centers.
struct PendulumPose {
  Vec2 waist_plate;
  Vec2 waist_normal;
  Vec2 base_plate;
  Vec2 base_normal;
};

PendulumPose PendulumGeometry(double theta_lat, double theta_base,
                              const MechanismConfig& config,
                              double center_mismatch = 0.0);
double WaistBaseDistance(const PendulumPose& pose);

}  // namespace pbench
