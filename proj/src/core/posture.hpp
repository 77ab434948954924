#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "core/config.hpp"
#include "core/types.hpp"

namespace pbench {

// World frame: x front-back of the standing body, y left-right, z up.
struct ProbeSample {
  double t = 0.0;  // s
  double x = 0.0;  // mm
  double y = 0.0;
  double z = 0.0;
};

struct ChestPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitX();  // unit, out of the chest
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // mm
  double rms_residual = 0.0;                           // mm
};

// Total-least-squares plane through the track. The normal is the eigenvector
// of the smallest covariance eigenvalue, oriented so nx >= 0 (ties: nz >= 0).
ChestPlane FitPlane(std::span<const ProbeSample> track);

// Probe track CSV with header `t,x,y,z` (s, mm).
std::vector<ProbeSample> ReadProbeTrackCsv(std::istream& in);
std::vector<ProbeSample> ReadProbeTrackCsv(const std::string& path);

// Posture convention: the body frame is R = Ry(pitch) * Rz(roll) applied to
// the upright frame, where Ry tips the chest normal (+x) toward +z and Rz
// turns it toward +y. Columns of the returned matrix are the sagittal
// (front-back), frontal (left-right) and longitudinal body axes.
Eigen::Matrix3d PostureRotation(const PostureAngles& posture);

// Chest normal of a posture: (cos r cos p, sin r, cos r sin p).
Eigen::Vector3d ComposeNormal(const PostureAngles& posture);

// pitch = atan2(nz, nx), roll = asin(ny).
PostureAngles NormalToPosture(const Eigen::Vector3d& normal);
PostureAngles PlaneToPosture(const ChestPlane& plane);

// 90 deg minus the unsigned angle between gravity (-z) and the frontal /
// sagittal axis lines.
GravityAngles PostureToGravity(const PostureAngles& posture);

// Numeric 2-D inversion of PostureToGravity restricted to the given box.
// Throws RangeError when no posture inside the box reproduces the target
// within 1e-9 deg.
PostureAngles GravityToPosture(const GravityAngles& target, const Interval& roll_box,
                               const Interval& pitch_box);

}  // namespace pbench
