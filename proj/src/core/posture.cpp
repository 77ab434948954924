#include "core/posture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "core/errors.hpp"

namespace pbench {

ChestPlane FitPlane(std::span<const ProbeSample> track) {
  if (track.size() < 3) {
    throw DegenerateError("plane fit needs at least 3 samples, got " +
                          std::to_string(track.size()));
  }
  for (std::size_t i = 1; i < track.size(); ++i) {
    if (track[i].t < track[i - 1].t) {
      throw InputError("probe track timestamps decrease at sample " + std::to_string(i));
    }
  }

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& s : track) centroid += Eigen::Vector3d(s.x, s.y, s.z);
  centroid /= static_cast<double>(track.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& s : track) {
    const Eigen::Vector3d d = Eigen::Vector3d(s.x, s.y, s.z) - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(track.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d& ev = eig.eigenvalues();  // ascending
  // Rank test: the two largest spreads must both be non-negligible.
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw DegenerateError(
        "probe track does not span two dimensions (rank test failed: covariance "
        "eigenvalues " +
        std::to_string(ev(0)) + ", " + std::to_string(ev(1)) + ", " + std::to_string(ev(2)) +
        ")");
  }

  Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
  constexpr double kTie = 1e-12;
  if (n.x() < -kTie || (std::abs(n.x()) <= kTie && n.z() < -kTie) ||
      (std::abs(n.x()) <= kTie && std::abs(n.z()) <= kTie && n.y() < 0.0)) {
    n = -n;
  }

  double ss = 0.0;
  for (const auto& s : track) {
    const double r = (Eigen::Vector3d(s.x, s.y, s.z) - centroid).dot(n);
    ss += r * r;
  }
  return {n, centroid, std::sqrt(ss / static_cast<double>(track.size()))};
}

namespace {

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseNumber(const std::string& cell, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size() || !std::isfinite(v)) {
    throw InputError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  }
  return v;
}

}  // namespace

std::vector<ProbeSample> ReadProbeTrackCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("probe track CSV is empty");
  const auto header = SplitComma(Trim(line));
  if (header != std::vector<std::string>{"t", "x", "y", "z"}) {
    throw InputError("probe track CSV header must be 't,x,y,z'");
  }
  std::vector<ProbeSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = Trim(line);
    if (line.empty()) continue;
    const auto cells = SplitComma(line);
    if (cells.size() != 4) {
      throw InputError("line " + std::to_string(line_no) + ": expected 4 fields");
    }
    out.push_back({ParseNumber(cells[0], line_no), ParseNumber(cells[1], line_no),
                   ParseNumber(cells[2], line_no), ParseNumber(cells[3], line_no)});
  }
  return out;
}

std::vector<ProbeSample> ReadProbeTrackCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open probe track '" + path + "'");
  return ReadProbeTrackCsv(in);
}

Eigen::Matrix3d PostureRotation(const PostureAngles& posture) {
  const double r = Deg2Rad(posture.roll);
  const double p = Deg2Rad(posture.pitch);
  Eigen::Matrix3d ry;
  ry << std::cos(p), 0.0, -std::sin(p),  //
      0.0, 1.0, 0.0,                      //
      std::sin(p), 0.0, std::cos(p);
  Eigen::Matrix3d rz;
  rz << std::cos(r), -std::sin(r), 0.0,  //
      std::sin(r), std::cos(r), 0.0,      //
      0.0, 0.0, 1.0;
  return ry * rz;
}

Eigen::Vector3d ComposeNormal(const PostureAngles& posture) {
  return PostureRotation(posture).col(0);
}

PostureAngles NormalToPosture(const Eigen::Vector3d& n) {
  const double ny = std::clamp(n.y(), -1.0, 1.0);
  return {Rad2Deg(std::asin(ny)), Rad2Deg(std::atan2(n.z(), n.x()))};
}

PostureAngles PlaneToPosture(const ChestPlane& plane) { return NormalToPosture(plane.normal); }

GravityAngles PostureToGravity(const PostureAngles& posture) {
  const Eigen::Matrix3d body = PostureRotation(posture);
  const Eigen::Vector3d g(0.0, 0.0, -1.0);
  // 90 - angle(g, line) == asin(|cos angle|) for unit vectors.
  auto elevation = [&](const Eigen::Vector3d& axis) {
    const double c = std::min(1.0, std::abs(axis.normalized().dot(g)));
    return Rad2Deg(std::asin(c));
  };
  return {elevation(body.col(1)), elevation(body.col(0))};
}

PostureAngles GravityToPosture(const GravityAngles& target, const Interval& roll_box,
                               const Interval& pitch_box) {
  auto residual = [&](double r, double p) {
    const GravityAngles g = PostureToGravity({r, p});
    return Eigen::Vector2d(g.g_roll - target.g_roll, g.g_pitch - target.g_pitch);
  };

  constexpr int kSeeds = 5;
  constexpr double kTol = 1e-10;
  for (int i = 0; i < kSeeds; ++i) {
    for (int j = 0; j < kSeeds; ++j) {
      double r = roll_box.lo + roll_box.Width() * (i + 0.5) / kSeeds;
      double p = pitch_box.lo + pitch_box.Width() * (j + 0.5) / kSeeds;
      Eigen::Vector2d f = residual(r, p);
      for (int it = 0; it < 100 && f.norm() > kTol; ++it) {
        constexpr double h = 1e-6;
        Eigen::Matrix2d jac;
        jac.col(0) = (residual(r + h, p) - residual(r - h, p)) / (2.0 * h);
        jac.col(1) = (residual(r, p + h) - residual(r, p - h)) / (2.0 * h);
        if (std::abs(jac.determinant()) < 1e-14) break;
        const Eigen::Vector2d step = jac.partialPivLu().solve(f);
        // Backtracking keeps the iterate inside the box and the residual falling.
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, t *= 0.5) {
          const double rn = std::clamp(r - t * step(0), roll_box.lo, roll_box.hi);
          const double pn = std::clamp(p - t * step(1), pitch_box.lo, pitch_box.hi);
          const Eigen::Vector2d fn = residual(rn, pn);
          if (fn.norm() < f.norm()) {
            r = rn;
            p = pn;
            f = fn;
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
      if (f.norm() <= 1e-9) return {r, p};
    }
  }
  throw RangeError("gravity angles (" + std::to_string(target.g_roll) + ", " +
                   std::to_string(target.g_pitch) +
                   ") are not attainable inside the posture box");
}

}  // namespace pbench
