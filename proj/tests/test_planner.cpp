#include <gtest/gtest.h>

#include <random>

#include "core/errors.hpp"
#include "core/load_model.hpp"
#include "core/planner.hpp"

namespace pbench {
namespace {

AppConfig WithOverride() {
  AppConfig c;
  SubjectProfile s;
  s.id = "S3";
  s.regions["parasternal_long_axis"] = {"parasternal_long_axis", {35, 40}, {50, 80}};
  s.weights = SplitWeights{2.0, 0.5};
  c.subjects["S3"] = s;
  return c;
}

TEST(Regions, SingleView) {
  const AppConfig c;
  const auto r = FeasibleRegion({"plax"}, c);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->roll, (Interval{10, 30}));
  EXPECT_EQ(r->pitch, (Interval{50, 80}));
}

TEST(Regions, Intersection) {
  const AppConfig c;
  const auto r = FeasibleRegion({"plax", "a4c"}, c);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->roll, (Interval{10, 20}));
  EXPECT_EQ(r->pitch, (Interval{60, 70}));
  EXPECT_EQ(FeasibleRegion({"apical_four_chamber", "PLAX"}, c)->roll, r->roll);
}

TEST(Regions, OverrideMakesIntersectionEmpty) {
  const AppConfig c = WithOverride();
  EXPECT_FALSE(FeasibleRegion({"plax", "a4c"}, c, "S3").has_value());
  EXPECT_TRUE(FeasibleRegion({"plax", "a4c"}, c, "S1").has_value());
}

TEST(Regions, UnknownViewAndEmptyList) {
  const AppConfig c;
  try {
    FeasibleRegion({"plax", "subcostal"}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    EXPECT_NE(std::string(e.what()).find("subcostal"), std::string::npos);
  }
  EXPECT_THROW(FeasibleRegion({}, c), Error);
}

TEST(Plan, DefaultIntersectionPicksMinimalCorner) {
  const AppConfig c;
  const PosturePlan p = PlanPosture({"plax", "a4c"}, c.weights, c);
  EXPECT_NEAR(p.posture.roll, 10.0, 1e-9);
  EXPECT_NEAR(p.posture.pitch, 60.0, 1e-9);
  EXPECT_NEAR(p.split.lat, 5.0, 1e-5);
  EXPECT_NEAR(p.split.thor, 5.0, 1e-5);
  EXPECT_EQ(p.views, (std::vector<std::string>{"apical_four_chamber", "parasternal_long_axis"}));
}

TEST(Plan, ConstantObjectiveTieBreak) {
  AppConfig c;
  c.load.a_leg = c.load.b_leg = c.load.a_abd = c.load.b_abd = 0.0;
  const PosturePlan p = PlanPosture({"plax"}, c.weights, c);
  EXPECT_EQ(p.posture.roll, 10.0);
  EXPECT_EQ(p.posture.pitch, 50.0);
}

TEST(Plan, EmptyRegionIsPlanningError) {
  const AppConfig c = WithOverride();
  try {
    PlanPosture({"plax", "a4c"}, c.weights, c, "S3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPlanning);
    EXPECT_NE(std::string(e.what()).find("one at a time"), std::string::npos);
  }
}

TEST(Plan, OrderInvariant) {
  const AppConfig c;
  const PosturePlan a = PlanPosture({"plax", "a4c"}, {1.0, 0.3}, c);
  const PosturePlan b = PlanPosture({"a4c", "plax"}, {1.0, 0.3}, c);
  EXPECT_EQ(a.posture.roll, b.posture.roll);
  EXPECT_EQ(a.posture.pitch, b.posture.pitch);
  EXPECT_EQ(a.split.lat, b.split.lat);
}

TEST(Plan, PitchTermPullsTowardLowerPitch) {
  AppConfig c;
  c.load.p_leg = 1.0;
  const PosturePlan p = PlanPosture({"plax"}, c.weights, c);
  EXPECT_NEAR(p.posture.pitch, 50.0, 1e-9);
  EXPECT_GT(p.load.leg, PlanPosture({"plax"}, c.weights, AppConfig{}).load.leg);
}

TEST(Plan, AlwaysInsideRegion) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const std::vector<std::vector<std::string>> sets = {{"plax"}, {"a4c"}, {"plax", "a4c"}};
  for (int i = 0; i < 60; ++i) {
    AppConfig c;
    c.load.a_leg = u(rng);
    c.load.b_leg = u(rng);
    c.load.a_abd = u(rng);
    c.load.b_abd = u(rng);
    c.load.p_leg = u(rng);
    const auto& views = sets[i % sets.size()];
    const PosturePlan p = PlanPosture(views, {u(rng) + 0.01, u(rng)}, c);
    const auto region = FeasibleRegion(views, c);
    EXPECT_TRUE(region->roll.Contains(p.posture.roll));
    EXPECT_TRUE(region->pitch.Contains(p.posture.pitch));
    EXPECT_NEAR(p.split.lat + p.split.thor, p.posture.roll, 1e-9);
  }
}

TEST(Plan, MonotoneLoadGivesMinimalCorner) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int i = 0; i < 20; ++i) {
    AppConfig c;
    c.load.a_leg = u(rng);
    c.load.b_abd = u(rng);
    c.load.p_abd = u(rng);
    const PosturePlan p = PlanPosture({"plax"}, {u(rng), u(rng)}, c);
    EXPECT_NEAR(p.posture.roll, 10.0, 1e-9);
    EXPECT_NEAR(p.posture.pitch, 50.0, 1e-9);
  }
}

TEST(Plan, PerViewMode) {
  const AppConfig c;
  const auto plans = PlanPerView({"plax", "a4c", "plax"}, c.weights, c);
  ASSERT_EQ(plans.size(), 2u);
  EXPECT_EQ(plans[0].views[0], "apical_four_chamber");
  EXPECT_NEAR(plans[0].posture.pitch, 60.0, 1e-9);
  EXPECT_NEAR(plans[1].posture.pitch, 50.0, 1e-9);
  // Works even where the shared region is empty.
  const AppConfig o = WithOverride();
  const auto split = PlanPerView({"plax", "a4c"}, o.weights, o, "S3");
  EXPECT_NEAR(split[1].posture.roll, 35.0, 1e-9);
}

}  // namespace
}  // namespace pbench
