#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/types.hpp"

namespace pbench {

// Accepts the full view id or its short alias (plax, a4c). Throws InputError
// for anything else.
std::string CanonicalView(const std::string& view, const AppConfig& config);

struct Region {
  Interval roll;
  Interval pitch;
};

// Diagnosable region of one view, honoring the subject's overrides.
Region ViewRegionFor(const std::string& view, const AppConfig& config,
                     const std::string& subject = {});

// Intersection of the per-view boxes; std::nullopt when it is empty.
std::optional<Region> FeasibleRegion(const std::vector<std::string>& views,
                                     const AppConfig& config,
                                     const std::string& subject = {});

struct PosturePlan {
  std::vector<std::string> views;  // canonical, sorted
  Region region;
  PostureAngles posture;
  RollSplit split;
  LoadEstimate load;
  double objective = 0.0;
};

// Lowest weighted predicted load inside the feasible region (0.5 deg grid
// plus local refinement). Ties: smaller roll, then smaller pitch. Throws
// PlanningError when the views share no posture.
PosturePlan PlanPosture(const std::vector<std::string>& views, const SplitWeights& weights,
                        const AppConfig& config, const std::string& subject = {},
                        bool pendulum = true);

// One plan per view, for examinations that may change posture between views.
std::vector<PosturePlan> PlanPerView(const std::vector<std::string>& views,
                                     const SplitWeights& weights, const AppConfig& config,
                                     const std::string& subject = {}, bool pendulum = true);

}  // namespace pbench
