#pragma once

#include "core/config.hpp"
#include "core/types.hpp"

namespace pbench {

// Static body-load model. Per muscle group:
//   load = relief * (k0 + a * lat^2 + b * thor^2 + p * pitch^2)
// with angles in radians and relief = c when the pendulum base is in use.
LoadEstimate PredictLoad(double theta_lat, double theta_thor, bool pendulum,
                         const LoadParams& params, const MechanismConfig& mechanism,
                         double theta_pitch = 0.0);

double WeightedLoad(const LoadEstimate& load, const SplitWeights& weights);

// Divides a target roll between lateral bending and thoracic rotation so the
// weighted load is minimal. Golden-section search along lat + thor = target;
// ties go to the smaller lateral bending angle.
RollSplit SplitOptimize(double roll_target, bool pendulum, const LoadParams& params,
                        const SplitWeights& weights, const MechanismConfig& mechanism);

}  // namespace pbench
