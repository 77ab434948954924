#pragma once

namespace pbench {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

inline double Deg2Rad(double deg) { return deg * kDegToRad; }
inline double Rad2Deg(double rad) { return rad * kRadToDeg; }

// Posture angles in degrees. Roll is the total lateral posture angle; pitch
// is the recline from upright.
struct PostureAngles {
  double roll = 0.0;
  double pitch = 0.0;
};

// Gravity-referenced angles in degrees: elevation of the body's frontal
// (left-right) and sagittal (front-back) axes above the horizontal.
struct GravityAngles {
  double g_roll = 0.0;
  double g_pitch = 0.0;
};

// Division of a roll angle between lumbar lateral bending and thoracic
// rotation, degrees.
struct RollSplit {
  double lat = 0.0;
  double thor = 0.0;
};

struct LoadEstimate {
  double leg = 0.0;
  double abd = 0.0;
};

}  // namespace pbench
