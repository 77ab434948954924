#include "core/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "core/errors.hpp"
#include "core/kinematics.hpp"

namespace pbench {

using nlohmann::json;

const char* AxisName(Axis axis) {
  switch (axis) {
    case Axis::kPitch: return "pitch";
    case Axis::kLat: return "lat";
    case Axis::kThor: return "thor";
    case Axis::kBase: return "base";
  }
  return "?";
}

Axis AxisFromName(const std::string& name) {
  for (Axis a : kAllAxes) {
    if (name == AxisName(a)) return a;
  }
  throw InputError("unknown axis '" + name + "'");
}

MechanismConfig::MechanismConfig() {
  // Leads and strokes are declared defaults; linkage rest lengths are
  // calibrated so full stroke spans the required pitch / lateral ranges.
  drive(Axis::kPitch) = {4.0, 500, 159.0, 10.0};
  drive(Axis::kLat) = {4.0, 500, 59.4, 4.0};
  drive(Axis::kThor) = {2.0, 500, 158.0, 10.0};
  drive(Axis::kBase) = {4.0, 500, 245.0, 20.0};
  pitch_linkage = {120.0, 220.0, 139.817};
  lat_linkage = {100.0, 180.0, 138.779};
}

namespace {

void RequirePositive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(what + " must be > 0 (got " + std::to_string(v) + ")");
  }
}

void RequireInterval(const Interval& i, const std::string& what) {
  if (i.Empty() || !std::isfinite(i.lo) || !std::isfinite(i.hi)) {
    throw ConfigError(what + " is not a valid interval");
  }
}

}  // namespace

void MechanismConfig::Validate() const {
  for (Axis a : kAllAxes) {
    const AxisDrive& d = drive(a);
    const std::string n = AxisName(a);
    RequirePositive(d.screw_lead, n + ".screw_lead");
    RequirePositive(d.stroke, n + ".stroke");
    RequirePositive(d.v_max, n + ".v_max");
    if (d.steps_per_rev <= 0) throw ConfigError(n + ".steps_per_rev must be > 0");
  }
  for (const auto* l : {&pitch_linkage, &lat_linkage}) {
    RequirePositive(l->lever_arm, "linkage.lever_arm");
    RequirePositive(l->base_offset, "linkage.base_offset");
    RequirePositive(l->rest_length, "linkage.rest_length");
  }
  RequirePositive(arc_radius_thoracic, "arc_radius_thoracic");
  RequirePositive(pendulum_arc_radius, "pendulum_arc_radius");
  RequirePositive(trunk_axis_offset, "trunk_axis_offset");
  RequirePositive(waist_plate_height, "waist_plate_height");
  RequireInterval(pitch_limits, "pitch_limits");
  RequireInterval(roll_limits, "roll_limits");
  RequireInterval(lat_limits, "lat_limits");
  RequireInterval(thor_limits, "thor_limits");
  RequireInterval(passive_height_range, "passive_height_range");
  if (!passive_height_range.Contains(passive_height)) {
    throw ConfigError("passive_height outside passive_height_range");
  }
  if (lat_limits.hi + thor_limits.hi < roll_limits.hi) {
    throw ConfigError("lat_limits.max + thor_limits.max must cover roll_limits.max");
  }
  if (lat_limits.lo < 0.0 || thor_limits.lo < 0.0 || pitch_limits.lo < 0.0) {
    throw ConfigError("joint limits must start at or above the home angle 0");
  }

  // Linkage reachability over the whole stroke; throws ConfigError itself.
  CheckLinkage(pitch_linkage, drive(Axis::kPitch).stroke, "pitch");
  CheckLinkage(lat_linkage, drive(Axis::kLat).stroke, "lat");

  // Each stroke must reach the top of its joint range.
  const struct {
    Axis axis;
    double limit;
  } coverage[] = {{Axis::kPitch, pitch_limits.hi},
                  {Axis::kLat, lat_limits.hi},
                  {Axis::kThor, thor_limits.hi},
                  {Axis::kBase, lat_limits.hi}};
  for (const auto& c : coverage) {
    const double reach = ForwardAxis(c.axis, drive(c.axis).stroke, *this);
    if (reach < c.limit) {
      throw ConfigError(std::string(AxisName(c.axis)) + " stroke reaches only " +
                        std::to_string(reach) + " deg, below limit " +
                        std::to_string(c.limit));
    }
  }
}

void LoadParams::Validate() const {
  for (double v : {k0_leg, k0_abd, a_leg, b_leg, a_abd, b_abd, p_leg, p_abd}) {
    if (!(v >= 0.0)) throw ConfigError("load coefficients must be >= 0");
  }
  for (double c : {c_leg, c_abd}) {
    if (!(c > 0.0 && c <= 1.0)) {
      throw ConfigError("pendulum relief factors must lie in (0, 1]");
    }
  }
}

void SplitWeights::Validate() const {
  if (!(w_leg >= 0.0) || !(w_abd >= 0.0)) {
    throw ConfigError("split weights must be >= 0");
  }
  if (w_leg == 0.0 && w_abd == 0.0) {
    throw ConfigError("split weights must not both be zero");
  }
}

std::vector<ViewRegion> DefaultViewRegions() {
  return {
      {"parasternal_long_axis", {10.0, 30.0}, {50.0, 80.0}},
      {"apical_four_chamber", {10.0, 20.0}, {60.0, 70.0}},
  };
}

AppConfig::AppConfig() : regions(DefaultViewRegions()) {}

void AppConfig::Validate() const {
  mechanism.Validate();
  load.Validate();
  weights.Validate();
  for (const auto& r : regions) {
    RequireInterval(r.roll, r.view + ".roll");
    RequireInterval(r.pitch, r.view + ".pitch");
  }
  for (const auto& [id, s] : subjects) {
    if (s.weights) s.weights->Validate();
    for (const auto& [view, r] : s.regions) {
      RequireInterval(r.roll, id + "/" + view + ".roll");
      RequireInterval(r.pitch, id + "/" + view + ".pitch");
    }
  }
  RequirePositive(control.tick_hz, "control.tick_hz");
  RequirePositive(control.stream_hz, "control.stream_hz");
  RequirePositive(control.base_sync_tolerance_deg, "control.base_sync_tolerance_deg");
  RequirePositive(emg.low_hz, "emg.low_hz");
  RequirePositive(emg.window_s, "emg.window_s");
  if (!(emg.high_hz > emg.low_hz)) throw ConfigError("emg.high_hz must exceed emg.low_hz");
  if (emg.order < 2 || emg.order % 2 != 0) {
    throw ConfigError("emg.order must be an even number >= 2");
  }
}

SplitWeights AppConfig::WeightsFor(const std::string& subject) const {
  auto it = subjects.find(subject);
  if (it != subjects.end() && it->second.weights) return *it->second.weights;
  return weights;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
void Get(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

void GetInterval(const json& j, const char* key, Interval& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a [lo, hi] pair");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

json IntervalJson(const Interval& i) { return json::array({i.lo, i.hi}); }

LeverLinkage LinkageFromJson(const json& j, LeverLinkage l) {
  Get(j, "lever_arm", l.lever_arm);
  Get(j, "base_offset", l.base_offset);
  Get(j, "rest_length", l.rest_length);
  return l;
}

json LinkageToJson(const LeverLinkage& l) {
  return {{"lever_arm", l.lever_arm},
          {"base_offset", l.base_offset},
          {"rest_length", l.rest_length}};
}

SplitWeights WeightsFromJson(const json& j, SplitWeights w) {
  Get(j, "w_leg", w.w_leg);
  Get(j, "w_abd", w.w_abd);
  return w;
}

// Short names accepted in config files for the two built-in views.
std::string ViewAlias(const std::string& view) {
  if (view == "plax") return "parasternal_long_axis";
  if (view == "a4c") return "apical_four_chamber";
  return view;
}

ViewRegion RegionFromJson(const json& j, const std::string& view) {
  ViewRegion r{view, {}, {}};
  if (!j.contains("roll") || !j.contains("pitch")) {
    throw ConfigError("region '" + view + "' needs roll and pitch intervals");
  }
  GetInterval(j, "roll", r.roll);
  GetInterval(j, "pitch", r.pitch);
  return r;
}

}  // namespace

AppConfig ConfigFromJson(const json& doc) {
  AppConfig c;
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");

  if (doc.contains("mechanism")) {
    const json& m = doc.at("mechanism");
    MechanismConfig& mc = c.mechanism;
    if (m.contains("axes")) {
      for (const auto& [name, a] : m.at("axes").items()) {
        AxisDrive& d = mc.drive(AxisFromName(name));
        Get(a, "screw_lead", d.screw_lead);
        Get(a, "steps_per_rev", d.steps_per_rev);
        Get(a, "stroke", d.stroke);
        Get(a, "v_max", d.v_max);
      }
    }
    if (m.contains("pitch_linkage")) {
      mc.pitch_linkage = LinkageFromJson(m.at("pitch_linkage"), mc.pitch_linkage);
    }
    if (m.contains("lat_linkage")) {
      mc.lat_linkage = LinkageFromJson(m.at("lat_linkage"), mc.lat_linkage);
    }
    GetInterval(m, "pitch_limits", mc.pitch_limits);
    GetInterval(m, "roll_limits", mc.roll_limits);
    GetInterval(m, "lat_limits", mc.lat_limits);
    GetInterval(m, "thor_limits", mc.thor_limits);
    Get(m, "arc_radius_thoracic", mc.arc_radius_thoracic);
    Get(m, "pendulum_arc_radius", mc.pendulum_arc_radius);
    Get(m, "trunk_axis_offset", mc.trunk_axis_offset);
    Get(m, "waist_plate_height", mc.waist_plate_height);
    GetInterval(m, "passive_height_range", mc.passive_height_range);
    Get(m, "passive_height", mc.passive_height);
  }

  if (doc.contains("load_params")) {
    const json& l = doc.at("load_params");
    LoadParams& p = c.load;
    Get(l, "k0_leg", p.k0_leg);
    Get(l, "k0_abd", p.k0_abd);
    Get(l, "a_leg", p.a_leg);
    Get(l, "b_leg", p.b_leg);
    Get(l, "a_abd", p.a_abd);
    Get(l, "b_abd", p.b_abd);
    Get(l, "c_leg", p.c_leg);
    Get(l, "c_abd", p.c_abd);
    Get(l, "p_leg", p.p_leg);
    Get(l, "p_abd", p.p_abd);
  }

  if (doc.contains("weights")) c.weights = WeightsFromJson(doc.at("weights"), c.weights);

  if (doc.contains("regions")) {
    c.regions.clear();
    for (const json& r : doc.at("regions")) {
      std::string view;
      Get(r, "view", view);
      if (view.empty()) throw ConfigError("region entry without 'view'");
      c.regions.push_back(RegionFromJson(r, view));
    }
  }

  if (doc.contains("subjects")) {
    for (const auto& [id, s] : doc.at("subjects").items()) {
      SubjectProfile profile;
      profile.id = id;
      if (s.contains("weights")) {
        profile.weights = WeightsFromJson(s.at("weights"), SplitWeights{});
      }
      if (s.contains("regions")) {
        for (const auto& [view, r] : s.at("regions").items()) {
          const std::string v = ViewAlias(view);
          profile.regions[v] = RegionFromJson(r, v);
        }
      }
      c.subjects[id] = std::move(profile);
    }
  }

  if (doc.contains("control")) {
    const json& k = doc.at("control");
    Get(k, "tick_hz", c.control.tick_hz);
    Get(k, "stream_hz", c.control.stream_hz);
    Get(k, "base_sync_tolerance_deg", c.control.base_sync_tolerance_deg);
  }

  if (doc.contains("emg")) {
    const json& e = doc.at("emg");
    Get(e, "low_hz", c.emg.low_hz);
    Get(e, "high_hz", c.emg.high_hz);
    Get(e, "order", c.emg.order);
    Get(e, "window_s", c.emg.window_s);
  }

  c.Validate();
  return c;
}

json ConfigToJson(const AppConfig& c) {
  const MechanismConfig& mc = c.mechanism;
  json axes = json::object();
  for (Axis a : kAllAxes) {
    const AxisDrive& d = mc.drive(a);
    axes[AxisName(a)] = {{"screw_lead", d.screw_lead},
                         {"steps_per_rev", d.steps_per_rev},
                         {"stroke", d.stroke},
                         {"v_max", d.v_max}};
  }
  json regions = json::array();
  for (const auto& r : c.regions) {
    regions.push_back(
        {{"view", r.view}, {"roll", IntervalJson(r.roll)}, {"pitch", IntervalJson(r.pitch)}});
  }
  json subjects = json::object();
  for (const auto& [id, s] : c.subjects) {
    json sj = json::object();
    if (s.weights) sj["weights"] = {{"w_leg", s.weights->w_leg}, {"w_abd", s.weights->w_abd}};
    json rj = json::object();
    for (const auto& [view, r] : s.regions) {
      rj[view] = {{"roll", IntervalJson(r.roll)}, {"pitch", IntervalJson(r.pitch)}};
    }
    if (!rj.empty()) sj["regions"] = rj;
    subjects[id] = sj;
  }
  const LoadParams& p = c.load;
  return {
      {"mechanism",
       {{"axes", axes},
        {"pitch_linkage", LinkageToJson(mc.pitch_linkage)},
        {"lat_linkage", LinkageToJson(mc.lat_linkage)},
        {"pitch_limits", IntervalJson(mc.pitch_limits)},
        {"roll_limits", IntervalJson(mc.roll_limits)},
        {"lat_limits", IntervalJson(mc.lat_limits)},
        {"thor_limits", IntervalJson(mc.thor_limits)},
        {"arc_radius_thoracic", mc.arc_radius_thoracic},
        {"pendulum_arc_radius", mc.pendulum_arc_radius},
        {"trunk_axis_offset", mc.trunk_axis_offset},
        {"waist_plate_height", mc.waist_plate_height},
        {"passive_height_range", IntervalJson(mc.passive_height_range)},
        {"passive_height", mc.passive_height}}},
      {"load_params",
       {{"k0_leg", p.k0_leg}, {"k0_abd", p.k0_abd}, {"a_leg", p.a_leg},
        {"b_leg", p.b_leg}, {"a_abd", p.a_abd}, {"b_abd", p.b_abd},
        {"c_leg", p.c_leg}, {"c_abd", p.c_abd}, {"p_leg", p.p_leg},
        {"p_abd", p.p_abd}}},
      {"weights", {{"w_leg", c.weights.w_leg}, {"w_abd", c.weights.w_abd}}},
      {"regions", regions},
      {"subjects", subjects},
      {"control",
       {{"tick_hz", c.control.tick_hz},
        {"stream_hz", c.control.stream_hz},
        {"base_sync_tolerance_deg", c.control.base_sync_tolerance_deg}}},
      {"emg",
       {{"low_hz", c.emg.low_hz},
        {"high_hz", c.emg.high_hz},
        {"order", c.emg.order},
        {"window_s", c.emg.window_s}}},
  };
}

AppConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return ConfigFromJson(doc);
}

AppConfig ResolveConfig(const std::string& explicit_path) {
  if (!explicit_path.empty()) return LoadConfigFile(explicit_path);
  if (const char* env = std::getenv("POSTURE_BENCH_CONFIG"); env && *env) {
    return LoadConfigFile(env);
  }
  AppConfig c;
  c.Validate();
  return c;
}

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kRange: return "range";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kPlanning: return "planning";
    case ErrorKind::kIllegalMode: return "illegal_mode";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace pbench
