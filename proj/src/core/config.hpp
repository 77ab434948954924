#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pbench {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool Contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
  bool Empty() const { return !(lo <= hi); }
  double Width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

// Intersection; may come back Empty().
inline Interval Intersect(const Interval& a, const Interval& b) {
  return {a.lo > b.lo ? a.lo : b.lo, a.hi < b.hi ? a.hi : b.hi};
}

enum class Axis { kPitch = 0, kLat = 1, kThor = 2, kBase = 3 };
inline constexpr int kAxisCount = 4;
inline constexpr std::array<Axis, kAxisCount> kAllAxes = {
    Axis::kPitch, Axis::kLat, Axis::kThor, Axis::kBase};

const char* AxisName(Axis axis);
Axis AxisFromName(const std::string& name);

// Lead-screw + stepper drive of one axis.
struct AxisDrive {
  double screw_lead = 4.0;  // mm/rev
  int steps_per_rev = 500;
  double stroke = 100.0;    // mm
  double v_max = 10.0;      // mm/s

  double MaxStepRate() const { return v_max / screw_lead * steps_per_rev; }
};

// Screw actuator of variable length spanning a fixed base point and a lever
// pin. The joint angle is the opening of the triangle at the lever pivot.
struct LeverLinkage {
  double lever_arm = 120.0;    // pivot -> lever pin, mm
  double base_offset = 220.0;  // pivot -> actuator base mount, mm
  double rest_length = 139.817;  // actuator pin-to-pin length at zero travel, mm
};

struct MechanismConfig {
  std::array<AxisDrive, kAxisCount> drives{};
  LeverLinkage pitch_linkage{};
  LeverLinkage lat_linkage{};

  Interval pitch_limits{0.0, 85.0};
  Interval roll_limits{0.0, 65.0};
  Interval lat_limits{0.0, 35.0};
  Interval thor_limits{0.0, 30.0};

  double arc_radius_thoracic = 300.0;  // mm
  double pendulum_arc_radius = 400.0;  // mm
  // Height of the shared lumbar / pendulum rotation center above the base plate.
  double trunk_axis_offset = 450.0;  // mm
  // Height of the waist mounting plate above the base plate in the upright pose.
  double waist_plate_height = 520.0;  // mm
  Interval passive_height_range{0.0, 120.0};
  double passive_height = 60.0;

  MechanismConfig();

  const AxisDrive& drive(Axis axis) const {
    return drives[static_cast<int>(axis)];
  }
  AxisDrive& drive(Axis axis) { return drives[static_cast<int>(axis)]; }

  // Throws ConfigError on violated invariants (positive geometry, reachable
  // linkages, lateral + thoracic limits covering the roll range).
  void Validate() const;
};

struct LoadParams {
  double k0_leg = 1.0;
  double k0_abd = 1.0;
  double a_leg = 1.0;  // lumbar lateral bending, per rad^2
  double b_leg = 1.0;  // thoracic rotation, per rad^2
  double a_abd = 1.0;
  double b_abd = 1.0;
  double c_leg = 0.78;  // pendulum relief
  double c_abd = 0.75;
  double p_leg = 0.0;  // pitch term, per rad^2
  double p_abd = 0.0;

  void Validate() const;
};

struct SplitWeights {
  double w_leg = 1.0;
  double w_abd = 1.0;

  void Validate() const;
};

struct ViewRegion {
  std::string view;
  Interval roll;
  Interval pitch;
};

struct SubjectProfile {
  std::string id;
  std::optional<SplitWeights> weights;
  std::map<std::string, ViewRegion> regions;  // keyed by view id
};

struct ControlConfig {
  double tick_hz = 100.0;
  double stream_hz = 20.0;
  double base_sync_tolerance_deg = 0.5;
};

struct EmgConfig {
  double low_hz = 20.0;
  double high_hz = 450.0;
  int order = 4;  // band-pass order; split evenly into high-pass and low-pass
  double window_s = 0.300;
};

struct AppConfig {
  MechanismConfig mechanism;
  LoadParams load;
  SplitWeights weights;
  std::vector<ViewRegion> regions;
  std::map<std::string, SubjectProfile> subjects;
  ControlConfig control;
  EmgConfig emg;

  AppConfig();

  void Validate() const;
  // Weights of the given subject, or the global weights when the subject has
  // no profile (or no weights in its profile).
  SplitWeights WeightsFor(const std::string& subject) const;
};

std::vector<ViewRegion> DefaultViewRegions();

AppConfig ConfigFromJson(const nlohmann::json& doc);
nlohmann::json ConfigToJson(const AppConfig& config);
AppConfig LoadConfigFile(const std::string& path);

// Resolves the config path: explicit path if non-empty, else the
// POSTURE_BENCH_CONFIG environment variable, else built-in defaults.
AppConfig ResolveConfig(const std::string& explicit_path);

}  // namespace pbench
