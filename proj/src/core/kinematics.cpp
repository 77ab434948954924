#include "core/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace pbench {

namespace {

constexpr double kTravelTol = 1e-9;  // mm
constexpr double kAngleTol = 1e-9;   // deg

// Opening angle (rad) at the lever pivot for actuator length `length`.
double OpeningAngle(const LeverLinkage& l, double length) {
  const double a = l.lever_arm;
  const double b = l.base_offset;
  const double c = (a * a + b * b - length * length) / (2.0 * a * b);
  return std::acos(c);
}

void CheckTravel(double travel, Axis axis, const MechanismConfig& config) {
  const double stroke = config.drive(axis).stroke;
  if (!(travel >= -kTravelTol && travel <= stroke + kTravelTol)) {
    throw RangeError(std::string(AxisName(axis)) + " travel " + std::to_string(travel) +
                     " mm outside stroke [0, " + std::to_string(stroke) + "]");
  }
}

double LinkageFk(const LeverLinkage& l, double travel) {
  const double rest = OpeningAngle(l, l.rest_length);
  return Rad2Deg(OpeningAngle(l, l.rest_length + travel) - rest);
}

}  // namespace

void CheckLinkage(const LeverLinkage& l, double stroke, const char* name) {
  const double lo = std::abs(l.lever_arm - l.base_offset);
  const double hi = l.lever_arm + l.base_offset;
  if (!(l.rest_length > lo) || !(l.rest_length + stroke < hi)) {
    throw ConfigError(std::string(name) + " linkage unreachable: actuator length range [" +
                      std::to_string(l.rest_length) + ", " +
                      std::to_string(l.rest_length + stroke) +
                      "] violates the triangle inequality bounds (" + std::to_string(lo) +
                      ", " + std::to_string(hi) + ")");
  }
}

double FkPitch(double travel, const MechanismConfig& config) {
  CheckTravel(travel, Axis::kPitch, config);
  CheckLinkage(config.pitch_linkage, config.drive(Axis::kPitch).stroke, "pitch");
  return LinkageFk(config.pitch_linkage, std::clamp(travel, 0.0, config.drive(Axis::kPitch).stroke));
}

double FkLat(double travel, const MechanismConfig& config) {
  CheckTravel(travel, Axis::kLat, config);
  CheckLinkage(config.lat_linkage, config.drive(Axis::kLat).stroke, "lat");
  return LinkageFk(config.lat_linkage, std::clamp(travel, 0.0, config.drive(Axis::kLat).stroke));
}

// Curved slider about the trunk axis: arc length s = r * theta.
double FkThor(double travel, const MechanismConfig& config) {
  CheckTravel(travel, Axis::kThor, config);
  return Rad2Deg(std::max(travel, 0.0) / config.arc_radius_thoracic);
}

// The pendulum base rolls on its bottom arc, same arc-length model.
double FkBase(double travel, const MechanismConfig& config) {
  CheckTravel(travel, Axis::kBase, config);
  return Rad2Deg(std::max(travel, 0.0) / config.pendulum_arc_radius);
}

double ForwardAxis(Axis axis, double travel, const MechanismConfig& config) {
  switch (axis) {
    case Axis::kPitch: return FkPitch(travel, config);
    case Axis::kLat: return FkLat(travel, config);
    case Axis::kThor: return FkThor(travel, config);
    case Axis::kBase: return FkBase(travel, config);
  }
  throw InputError("bad axis");
}

double InverseAxis(Axis axis, double angle, const MechanismConfig& config) {
  const double stroke = config.drive(axis).stroke;
  const double top = ForwardAxis(axis, stroke, config);
  if (!(angle >= -kAngleTol && angle <= top + kAngleTol)) {
    throw RangeError(std::string(AxisName(axis)) + " angle " + std::to_string(angle) +
                     " deg not reachable (axis spans [0, " + std::to_string(top) + "])");
  }
  if (angle <= 0.0) return 0.0;
  if (angle >= top) return stroke;

  double lo = 0.0;
  double hi = stroke;
  // 200 halvings is far past double resolution; the loop exits on width.
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ForwardAxis(axis, mid, config) < angle) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

JointState MakeJointState(const std::array<double, kAxisCount>& travels,
                          const MechanismConfig& config) {
  JointState s;
  s.travel = travels;
  s.passive_height = config.passive_height;
  s.theta_pitch = FkPitch(travels[0], config);
  s.theta_lat = FkLat(travels[1], config);
  s.theta_thor = FkThor(travels[2], config);
  s.theta_base = FkBase(travels[3], config);
  return s;
}

double RollTotal(double theta_lat, double theta_thor, const MechanismConfig& config) {
  if (!config.lat_limits.Contains(theta_lat, kAngleTol)) {
    throw RangeError("lateral bending angle " + std::to_string(theta_lat) +
                     " deg outside lat_limits");
  }
  if (!config.thor_limits.Contains(theta_thor, kAngleTol)) {
    throw RangeError("thoracic rotation angle " + std::to_string(theta_thor) +
                     " deg outside thor_limits");
  }
  const double roll = theta_lat + theta_thor;
  if (!config.roll_limits.Contains(roll, kAngleTol)) {
    throw RangeError("roll " + std::to_string(roll) + " deg outside roll_limits [" +
                     std::to_string(config.roll_limits.lo) + ", " +
                     std::to_string(config.roll_limits.hi) + "]");
  }
  return roll;
}

double BaseSync(double theta_lat) { return theta_lat; }

void CheckPostureTarget(const PostureAngles& target, const MechanismConfig& config) {
  const Interval& r = config.roll_limits;
  const Interval& p = config.pitch_limits;
  if (!std::isfinite(target.roll) || !std::isfinite(target.pitch)) {
    throw RangeError("target angles must be finite");
  }
  if (target.roll < r.lo) {
    throw RangeError("roll " + std::to_string(target.roll) + " deg below roll minimum " +
                     std::to_string(r.lo));
  }
  if (target.roll > r.hi) {
    throw RangeError("roll " + std::to_string(target.roll) + " deg exceeds roll maximum " +
                     std::to_string(r.hi));
  }
  if (target.pitch < p.lo) {
    throw RangeError("pitch " + std::to_string(target.pitch) + " deg below pitch minimum " +
                     std::to_string(p.lo));
  }
  if (target.pitch > p.hi) {
    throw RangeError("pitch " + std::to_string(target.pitch) +
                     " deg exceeds pitch maximum " + std::to_string(p.hi));
  }
}

void CheckSplit(const PostureAngles& target, const RollSplit& split,
                const MechanismConfig& config) {
  if (std::abs(split.lat + split.thor - target.roll) > 1e-9) {
    throw RangeError("split (" + std::to_string(split.lat) + ", " + std::to_string(split.thor) +
                     ") does not sum to roll " + std::to_string(target.roll));
  }
  RollTotal(split.lat, split.thor, config);
}

JointState Ik(const PostureAngles& target, const RollSplit& split,
              const MechanismConfig& config) {
  CheckPostureTarget(target, config);
  CheckSplit(target, split, config);
  const double lat = std::clamp(split.lat, config.lat_limits.lo, config.lat_limits.hi);
  const double thor = std::clamp(split.thor, config.thor_limits.lo, config.thor_limits.hi);
  std::array<double, kAxisCount> travels{};
  travels[0] = InverseAxis(Axis::kPitch, target.pitch, config);
  travels[1] = InverseAxis(Axis::kLat, lat, config);
  travels[2] = InverseAxis(Axis::kThor, thor, config);
  travels[3] = InverseAxis(Axis::kBase, BaseSync(lat), config);
  return MakeJointState(travels, config);
}

std::int64_t TravelToSteps(double delta_travel, Axis axis, const MechanismConfig& config) {
  const AxisDrive& d = config.drive(axis);
  // std::llround rounds half away from zero.
  return std::llround(delta_travel / d.screw_lead * d.steps_per_rev);
}

double StepsToTravel(std::int64_t steps, Axis axis, const MechanismConfig& config) {
  const AxisDrive& d = config.drive(axis);
  return static_cast<double>(steps) * d.screw_lead / d.steps_per_rev;
}

namespace {

Vec2 Rotate(const Vec2& v, double deg) {
  const double c = std::cos(Deg2Rad(deg));
  const double s = std::sin(Deg2Rad(deg));
  return {c * v.x - s * v.z, s * v.x + c * v.z};
}

Vec2 RotateAbout(const Vec2& p, const Vec2& center, double deg) {
  const Vec2 r = Rotate({p.x - center.x, p.z - center.z}, deg);
  return {center.x + r.x, center.z + r.z};
}

}  // namespace

PendulumPose PendulumGeometry(double theta_lat, double theta_base,
                              const MechanismConfig& config, double center_mismatch) {
  const Vec2 lumbar_center{0.0, config.trunk_axis_offset};
  const Vec2 pendulum_center{0.0, config.trunk_axis_offset - center_mismatch};
  PendulumPose pose;
  pose.waist_plate = RotateAbout({0.0, config.waist_plate_height}, lumbar_center, theta_lat);
  pose.waist_normal = Rotate({0.0, 1.0}, theta_lat);
  pose.base_plate = RotateAbout({0.0, 0.0}, pendulum_center, theta_base);
  pose.base_normal = Rotate({0.0, 1.0}, theta_base);
  return pose;
}

double WaistBaseDistance(const PendulumPose& pose) {
  return std::hypot(pose.waist_plate.x - pose.base_plate.x,
                    pose.waist_plate.z - pose.base_plate.z);
}

}  // namespace pbench
