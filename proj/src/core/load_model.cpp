#include "core/load_model.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace pbench {

namespace {

constexpr double kLimitTol = 1e-9;

LoadEstimate Evaluate(double lat, double thor, double pitch, bool pendulum,
                      const LoadParams& p) {
  const double l2 = Deg2Rad(lat) * Deg2Rad(lat);
  const double t2 = Deg2Rad(thor) * Deg2Rad(thor);
  const double p2 = Deg2Rad(pitch) * Deg2Rad(pitch);
  const double rl = pendulum ? p.c_leg : 1.0;
  const double ra = pendulum ? p.c_abd : 1.0;
  return {rl * (p.k0_leg + p.a_leg * l2 + p.b_leg * t2 + p.p_leg * p2),
          ra * (p.k0_abd + p.a_abd * l2 + p.b_abd * t2 + p.p_abd * p2)};
}

}  // namespace

LoadEstimate PredictLoad(double theta_lat, double theta_thor, bool pendulum,
                         const LoadParams& params, const MechanismConfig& mechanism,
                         double theta_pitch) {
  if (!mechanism.lat_limits.Contains(theta_lat, kLimitTol)) {
    throw RangeError("lateral bending angle " + std::to_string(theta_lat) +
                     " deg outside lat_limits");
  }
  if (!mechanism.thor_limits.Contains(theta_thor, kLimitTol)) {
    throw RangeError("thoracic rotation angle " + std::to_string(theta_thor) +
                     " deg outside thor_limits");
  }
  if (!mechanism.pitch_limits.Contains(theta_pitch, kLimitTol)) {
    throw RangeError("pitch angle " + std::to_string(theta_pitch) +
                     " deg outside pitch_limits");
  }
  return Evaluate(theta_lat, theta_thor, theta_pitch, pendulum, params);
}

double WeightedLoad(const LoadEstimate& load, const SplitWeights& weights) {
  return weights.w_leg * load.leg + weights.w_abd * load.abd;
}

RollSplit SplitOptimize(double roll_target, bool pendulum, const LoadParams& params,
                        const SplitWeights& weights, const MechanismConfig& mechanism) {
  weights.Validate();
  const Interval& lat = mechanism.lat_limits;
  const Interval& thor = mechanism.thor_limits;
  if (!mechanism.roll_limits.Contains(roll_target, kLimitTol)) {
    throw RangeError("roll target " + std::to_string(roll_target) +
                     " deg outside roll_limits");
  }
  double lo = std::max(lat.lo, roll_target - thor.hi);
  double hi = std::min(lat.hi, roll_target - thor.lo);
  if (lo > hi + kLimitTol) {
    throw RangeError("roll target " + std::to_string(roll_target) +
                     " deg cannot be split within the lateral and thoracic limits");
  }
  if (hi < lo) hi = lo;

  auto f = [&](double x) {
    return WeightedLoad(Evaluate(x, roll_target - x, 0.0, pendulum, params), weights);
  };

  // Golden-section search; the objective is convex along the line.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-10) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double best = 0.5 * (a + b);
  double f_best = f(best);
  // Endpoints, lower first, so equal objectives resolve to the smaller angle.
  for (double x : {hi, lo}) {
    const double fx = f(x);
    if (fx < f_best || (x < best && fx <= f_best * (1.0 + 1e-15))) {
      best = x;
      f_best = fx;
    }
  }
  return {best, roll_target - best};
}

}  // namespace pbench
