#include "core/planner.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/load_model.hpp"

namespace pbench {

namespace {

constexpr double kGridStep = 0.5;  // deg

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<double> GridPoints(const Interval& i) {
  std::vector<double> pts;
  const int n = static_cast<int>(std::floor(i.Width() / kGridStep + 1e-9));
  for (int k = 0; k <= n; ++k) pts.push_back(i.lo + k * kGridStep);
  if (pts.empty() || pts.back() < i.hi - 1e-9) pts.push_back(i.hi);
  return pts;
}

struct Candidate {
  double roll;
  double pitch;
  double objective;
};

// a better than b: strictly lower objective, or equal with smaller roll, then
// smaller pitch.
bool Better(const Candidate& a, const Candidate& b) {
  const double tol = 1e-12 * std::max(1.0, std::abs(b.objective));
  if (a.objective < b.objective - tol) return true;
  if (a.objective > b.objective + tol) return false;
  if (a.roll != b.roll) return a.roll < b.roll;
  return a.pitch < b.pitch;
}

}  // namespace

std::string CanonicalView(const std::string& view, const AppConfig& config) {
  const std::string v = Lower(view);
  std::string canonical = v;
  if (v == "plax") canonical = "parasternal_long_axis";
  if (v == "a4c") canonical = "apical_four_chamber";
  for (const auto& r : config.regions) {
    if (r.view == canonical) return canonical;
  }
  throw InputError("unknown view '" + view + "'");
}

Region ViewRegionFor(const std::string& view, const AppConfig& config,
                     const std::string& subject) {
  const std::string v = CanonicalView(view, config);
  if (!subject.empty()) {
    auto s = config.subjects.find(subject);
    if (s != config.subjects.end()) {
      auto o = s->second.regions.find(v);
      if (o != s->second.regions.end()) return {o->second.roll, o->second.pitch};
    }
  }
  for (const auto& r : config.regions) {
    if (r.view == v) return {r.roll, r.pitch};
  }
  throw InputError("unknown view '" + view + "'");
}

std::optional<Region> FeasibleRegion(const std::vector<std::string>& views,
                                     const AppConfig& config, const std::string& subject) {
  if (views.empty()) throw InputError("no views requested");
  Region acc{{-90.0, 90.0}, {-90.0, 90.0}};
  for (const auto& v : views) {
    const Region r = ViewRegionFor(v, config, subject);
    acc.roll = Intersect(acc.roll, r.roll);
    acc.pitch = Intersect(acc.pitch, r.pitch);
  }
  if (acc.roll.Empty() || acc.pitch.Empty()) return std::nullopt;
  return acc;
}

PosturePlan PlanPosture(const std::vector<std::string>& views, const SplitWeights& weights,
                        const AppConfig& config, const std::string& subject,
                        bool pendulum) {
  const auto region = FeasibleRegion(views, config, subject);
  if (!region) {
    throw PlanningError(
        "the requested views share no diagnosable posture; examine the views one at a time");
  }
  const MechanismConfig& mech = config.mechanism;
  Region box{Intersect(region->roll, mech.roll_limits),
             Intersect(region->pitch, mech.pitch_limits)};
  if (box.roll.Empty() || box.pitch.Empty()) {
    throw PlanningError("the diagnosable region lies outside the mechanism range");
  }

  auto evaluate = [&](double roll, double pitch) {
    const RollSplit split = SplitOptimize(roll, pendulum, config.load, weights, mech);
    const LoadEstimate load =
        PredictLoad(split.lat, split.thor, pendulum, config.load, mech, pitch);
    return Candidate{roll, pitch, WeightedLoad(load, weights)};
  };

  std::optional<Candidate> best;
  for (double roll : GridPoints(box.roll)) {
    for (double pitch : GridPoints(box.pitch)) {
      const Candidate c = evaluate(roll, pitch);
      if (!best || Better(c, *best)) best = c;
    }
  }

  // Coordinate-wise golden-section refinement within one grid cell.
  auto refine = [&](bool along_roll) {
    const Interval& dim = along_roll ? box.roll : box.pitch;
    const double centre = along_roll ? best->roll : best->pitch;
    double a = std::max(dim.lo, centre - kGridStep);
    double b = std::min(dim.hi, centre + kGridStep);
    auto at = [&](double x) {
      return along_roll ? evaluate(x, best->pitch) : evaluate(best->roll, x);
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    Candidate fc = at(c);
    Candidate fd = at(d);
    while (b - a > 1e-7) {
      if (fc.objective <= fd.objective) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = at(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = at(d);
      }
    }
    const Candidate r = at(0.5 * (a + b));
    const double tol = 1e-12 * std::max(1.0, std::abs(best->objective));
    if (r.objective < best->objective - tol) best = r;
  };
  refine(true);
  refine(false);

  PosturePlan plan;
  for (const auto& v : views) plan.views.push_back(CanonicalView(v, config));
  std::sort(plan.views.begin(), plan.views.end());
  plan.views.erase(std::unique(plan.views.begin(), plan.views.end()), plan.views.end());
  plan.region = *region;
  plan.posture = {best->roll, best->pitch};
  plan.split = SplitOptimize(best->roll, pendulum, config.load, weights, mech);
  plan.load = PredictLoad(plan.split.lat, plan.split.thor, pendulum, config.load, mech,
                          best->pitch);
  plan.objective = best->objective;
  return plan;
}

std::vector<PosturePlan> PlanPerView(const std::vector<std::string>& views,
                                     const SplitWeights& weights, const AppConfig& config,
                                     const std::string& subject, bool pendulum) {
  if (views.empty()) throw InputError("no views requested");
  std::vector<std::string> canon;
  for (const auto& v : views) canon.push_back(CanonicalView(v, config));
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  std::vector<PosturePlan> plans;
  for (const auto& v : canon) {
    plans.push_back(PlanPosture({v}, weights, config, subject, pendulum));
  }
  return plans;
}

}  // namespace pbench
