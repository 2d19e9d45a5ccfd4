#include "finfocal/scenario.hpp"

#include <fstream>
#include <sstream>

namespace finfocal {

namespace {

Vec json_vec(const Json& j) {
  Vec v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
  return v;
}

std::vector<Expr> json_exprs(const Json& j) {
  std::vector<Expr> out;
  for (const auto& e : j) {
    if (e.is_number())
      out.push_back(Expr::constant(e.get<double>()));
    else
      out.push_back(Expr::parse(e.get<std::string>()));
  }
  return out;
}

const char* kScenarioSchema = R"JSON({
  "type": "object",
  "required": ["name", "metric", "submanifold", "grid"],
  "properties": {
    "name": {"type": "string"},
    "seed": {"type": "integer"},
    "metric": {
      "type": "object",
      "required": ["kind"],
      "properties": {
        "kind": {"type": "string",
                 "enum": ["euclidean", "riemannian", "randers", "minkowski", "sphere"]},
        "dim": {"type": "integer"},
        "ambient_dim": {"type": "integer"},
        "radius": {"type": "number"},
        "g": {"type": "array"},
        "a": {"type": "array"},
        "b": {"type": "array"},
        "f_squared": {"type": "string"}
      }
    },
    "submanifold": {
      "type": "object",
      "required": ["kind"],
      "properties": {
        "kind": {"type": "string",
                 "enum": ["circle", "ellipse", "line", "point", "equator",
                           "expressions"]},
        "radius": {"type": "number"},
        "center": {"type": "array"},
        "a": {"type": "number"},
        "b": {"type": "number"},
        "base": {"type": "array"},
        "dir": {"type": "array"},
        "lo": {"type": "number"},
        "hi": {"type": "number"},
        "coords": {"type": "array"},
        "components": {"type": "array"},
        "param_dim": {"type": "integer"},
        "periodic": {"type": "boolean"},
        "param_lo": {"type": "array"},
        "param_hi": {"type": "array"}
      }
    },
    "side": {"type": "string", "enum": ["inner", "outer", "both", "plus", "minus"]},
    "interior_point": {"type": "array"},
    "grid": {
      "type": "object",
      "required": ["rays", "t_max"],
      "properties": {
        "rays": {"type": "integer"},
        "rays_lat": {"type": "integer"},
        "rays_lon": {"type": "integer"},
        "t_max": {"type": "number"},
        "max_focal_index": {"type": "integer"}
      }
    },
    "tolerances": {
      "type": "object",
      "properties": {
        "integrator": {"type": "number"},
        "focal_time": {"type": "number"},
        "rank": {"type": "number"},
        "cut_time": {"type": "number"},
        "cut_predicate": {"type": "number"}
      }
    },
    "oracle": {
      "type": "object",
      "required": ["box_lo", "box_hi"],
      "properties": {
        "box_lo": {"type": "array"},
        "box_hi": {"type": "array"},
        "resolution": {"type": "integer"},
        "stencil_radius": {"type": "integer"}
      }
    }
  }
})JSON";

const char* kSummarySchema = R"JSON({
  "type": "object",
  "required": ["tool", "version", "command", "scenario", "scenario_hash",
               "tolerances"],
  "properties": {
    "tool": {"type": "string"},
    "version": {"type": "string"},
    "command": {"type": "string"},
    "scenario": {"type": "string"},
    "scenario_hash": {"type": "string"},
    "seed": {"type": "integer"},
    "tolerances": {"type": "object"}
  }
})JSON";

}  // namespace

const char* Scenario::scenario_schema_text() { return kScenarioSchema; }
const char* Scenario::summary_schema_text() { return kSummarySchema; }

void check_schema(const Json& value, const Json& schema, const std::string& where) {
  const std::string type = schema.value("type", "");
  auto fail = [&](const std::string& msg) {
    throw ConfigError("schema violation at " + where + ": " + msg);
  };
  if (type == "object") {
    if (!value.is_object()) fail("expected object");
    if (schema.contains("required"))
      for (const auto& req : schema["required"])
        if (!value.contains(req.get<std::string>()))
          fail("missing required key '" + req.get<std::string>() + "'");
    if (schema.contains("properties")) {
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (schema["properties"].contains(it.key()))
          check_schema(it.value(), schema["properties"][it.key()],
                       where + "." + it.key());
      }
    }
  } else if (type == "array") {
    if (!value.is_array()) fail("expected array");
    if (schema.contains("items"))
      for (size_t i = 0; i < value.size(); ++i)
        check_schema(value[i], schema["items"], where + "[" + std::to_string(i) + "]");
  } else if (type == "string") {
    if (!value.is_string()) fail("expected string");
  } else if (type == "number") {
    if (!value.is_number()) fail("expected number");
  } else if (type == "integer") {
    if (!value.is_number_integer()) fail("expected integer");
  } else if (type == "boolean") {
    if (!value.is_boolean()) fail("expected boolean");
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || e == value;
    if (!ok) fail("value not in enum");
  }
}

void Scenario::validate_config(const Json& config) {
  check_schema(config, Json::parse(kScenarioSchema), "$");
  if (config.contains("tolerances"))
    for (auto it = config["tolerances"].begin(); it != config["tolerances"].end(); ++it)
      if (it.value().get<double>() <= 0.0)
        throw ConfigError("tolerance '" + it.key() + "' must be positive");
}

void Scenario::validate_summary(const Json& summary) {
  check_schema(summary, Json::parse(kSummarySchema), "$");
}

Scenario Scenario::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s = from_json(j, path);
  s.hash_ = fnv1a_hex(ss.str());
  return s;
}

Scenario Scenario::from_json(const Json& j, const std::string& source_name) {
  validate_config(j);
  Scenario s;
  s.name_ = j["name"].get<std::string>();
  s.seed_ = j.value("seed", 0u);
  s.hash_ = fnv1a_hex(j.dump());

  // metric + system
  const Json& jm = j["metric"];
  const std::string mkind = jm["kind"].get<std::string>();
  if (mkind == "sphere") {
    int ad = jm.value("ambient_dim", 3);
    double radius = jm.value("radius", 1.0);
    s.system_ = std::make_shared<GeodesicSystem>(
        GeodesicSystem::embedded(LevelSurface::sphere(ad, radius)));
  } else {
    int dim = jm.value("dim", 2);
    MetricModel metric = MetricModel::euclidean(dim);
    if (mkind == "riemannian") {
      metric = MetricModel::riemannian(dim, json_exprs(jm.at("g")));
    } else if (mkind == "randers") {
      metric = MetricModel::randers(dim, json_exprs(jm.at("a")), json_exprs(jm.at("b")));
    } else if (mkind == "minkowski") {
      metric = MetricModel::minkowski(dim, Expr::parse(jm.at("f_squared").get<std::string>()));
    }
    Vec lo = Vec::Constant(dim, -3.0), hi = Vec::Constant(dim, 3.0);
    metric.validate(lo, hi, 32, s.seed_ + 1);
    s.system_ = std::make_shared<GeodesicSystem>(GeodesicSystem::chart(std::move(metric)));
  }

  // submanifold
  const Json& js = j["submanifold"];
  const std::string skind = js["kind"].get<std::string>();
  Submanifold sub = [&]() -> Submanifold {
    if (skind == "circle")
      return Submanifold::circle(js.value("radius", 1.0),
                                 js.contains("center") ? json_vec(js["center"])
                                                       : Vec(Vec::Zero(2)));
    if (skind == "ellipse") return Submanifold::ellipse(js.at("a"), js.at("b"));
    if (skind == "line")
      return Submanifold::line(json_vec(js.at("base")), json_vec(js.at("dir")),
                               js.value("lo", -3.0), js.value("hi", 3.0));
    if (skind == "point") return Submanifold::point(json_vec(js.at("coords")));
    if (skind == "equator") {
      double radius = jm.value("radius", 1.0);
      return Submanifold::equator(radius);
    }
    // expressions
    return Submanifold::from_expressions(js.at("param_dim"), json_exprs(js.at("components")),
                                         js.value("periodic", true),
                                         json_vec(js.at("param_lo")),
                                         json_vec(js.at("param_hi")));
  }();

  std::optional<Vec> interior;
  if (j.contains("interior_point")) interior = json_vec(j["interior_point"]);
  s.bundle_ = std::make_shared<NormalBundle>(std::move(sub), *s.system_, interior);

  // grid
  const Json& jg = j["grid"];
  s.t_max_ = jg["t_max"].get<double>();
  s.max_focal_index_ = jg.value("max_focal_index", 2);
  const std::string side = j.value("side", "both");
  const NormalBundle& bundle = *s.bundle_;
  if (bundle.submanifold().param_dim() == 0) {
    if (bundle.manifold_dim() == 2) {
      s.rays_ = jg["rays"].get<int>();
      s.grid_ = std::make_shared<RayGrid>(RayGrid::point_circle(bundle, s.rays_));
    } else {
      int lat = jg.value("rays_lat", 12), lon = jg.value("rays_lon", 24);
      s.rays_ = lat * lon;
      s.grid_ = std::make_shared<RayGrid>(RayGrid::point_sphere(bundle, lat, lon));
    }
  } else {
    s.rays_ = jg["rays"].get<int>();
    std::vector<int> sides;
    Vec params0 = bundle.submanifold().param_lo();
    if (side == "both") {
      sides = {1, -1};
    } else if (side == "inner") {
      sides = {bundle.inward_side(params0)};
    } else if (side == "outer") {
      sides = {-bundle.inward_side(params0)};
    } else if (side == "plus") {
      sides = {1};
    } else {
      sides = {-1};
    }
    s.grid_ = std::make_shared<RayGrid>(RayGrid::ring(bundle, s.rays_, sides));
  }

  // tolerances
  if (j.contains("tolerances")) {
    const Json& jt = j["tolerances"];
    s.integrator_tol_ = jt.value("integrator", s.integrator_tol_);
    s.focal_time_tol_ = jt.value("focal_time", s.focal_time_tol_);
    s.rank_tol_ = jt.value("rank", s.rank_tol_);
    s.cut_report_tol_ = jt.value("cut_time", s.cut_report_tol_);
    s.cut_predicate_tol_ = jt.value("cut_predicate", s.cut_predicate_tol_);
  }

  if (j.contains("oracle")) {
    s.has_oracle_ = true;
    const Json& jo = j["oracle"];
    s.oracle_.box_lo = json_vec(jo["box_lo"]);
    s.oracle_.box_hi = json_vec(jo["box_hi"]);
    s.oracle_.resolution = jo.value("resolution", 600);
    s.oracle_.stencil_radius = jo.value("stencil_radius", 14);
  }

  log_info("scenario '%s' loaded from %s", s.name_.c_str(), source_name.c_str());
  return s;
}

FocalScanSettings Scenario::focal_settings(int threads) const {
  FocalScanSettings fs;
  fs.t_max = t_max_;
  fs.max_focal_index = max_focal_index_;
  fs.integrator_tol = integrator_tol_;
  fs.detect.time_tol = focal_time_tol_;
  fs.detect.rank_tol = rank_tol_;
  fs.threads = threads;
  return fs;
}

CutSettings Scenario::cut_settings(int threads) const {
  CutSettings cs;
  cs.t_max = t_max_;
  cs.integrator_tol = integrator_tol_;
  cs.report_tol = cut_report_tol_;
  cs.predicate_tol = cut_predicate_tol_;
  cs.bisect_tol = std::min(1e-4, 0.4 * cut_report_tol_);
  cs.threads = threads;
  return cs;
}

GridOracleSettings Scenario::oracle_settings() const { return oracle_; }

Json Scenario::summary_header(const std::string& command) const {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["scenario"] = name_;
  j["scenario_hash"] = hash_;
  j["seed"] = seed_;
  j["tolerances"] = {{"integrator", integrator_tol_},
                     {"focal_time", focal_time_tol_},
                     {"rank", rank_tol_},
                     {"cut_time", cut_report_tol_},
                     {"cut_predicate", cut_predicate_tol_}};
  return j;
}

}  // namespace finfocal
