#include "saddlelab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "saddlelab/errors.hpp"

namespace saddlelab {
namespace {

// Object reader that tracks consumed keys so leftovers can be reported.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(at(key) + ": missing required field");
    return *v;
  }

  double number(const std::string& key) { return as_number(require(key), at(key)); }
  double number_or(const std::string& key, double fallback) {
    const Json* v = find(key);
    return v ? as_number(*v, at(key)) : fallback;
  }
  long integer(const std::string& key) { return as_integer(require(key), at(key)); }
  long integer_or(const std::string& key, long fallback) {
    const Json* v = find(key);
    return v ? as_integer(*v, at(key)) : fallback;
  }
  std::string string(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) {
    return find(key) ? string(key) : fallback;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown field");
    }
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
  }
  static long as_integer(const Json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return v.get<long>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec as_vector(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = Fields::as_number(v[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

Mat as_matrix(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const size_t cols = v[0].is_array() ? v[0].size() : 0;
  Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec row = as_vector(v[i], where + "[" + std::to_string(i) + "]");
    if (static_cast<size_t>(row.size()) != cols || cols == 0) throw ConfigError(where + ": rows must have equal length");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_json(v(i)));
  return out;
}

template <typename T, typename Fn>
Json optional_json(const std::optional<T>& v, Fn&& fn) {
  return v ? fn(*v) : Json(nullptr);
}

int check_schema(const Json& root) {
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  auto it = root.find("schema");
  if (it == root.end()) throw ConfigError("schema: missing required field (expected 1)");
  if (!it->is_number_integer() || it->get<long>() != kSchemaVersion) {
    throw ConfigError("schema: unsupported version (expected 1)");
  }
  return kSchemaVersion;
}

// Re-raise construction errors with the config path in front.
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Sub-parsers report paths relative to their own object; nested use puts
// the parent path in front.
template <typename Fn>
auto nested(const std::string& parent, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(parent + "." + e.what());
  }
}

}  // namespace

ManifoldSpec parse_manifold(const Json& j) {
  Fields f(j, "manifold");
  const std::string kind = f.string("kind");
  ManifoldSpec m = with_path("manifold", [&] {
    if (kind == "euclidean") return ManifoldSpec::euclidean(static_cast<int>(f.integer("n")));
    if (kind == "sphere") return ManifoldSpec::sphere(static_cast<int>(f.integer("d")));
    if (kind == "hyperbolic") return ManifoldSpec::hyperbolic(static_cast<int>(f.integer("n")));
    if (kind == "stiefel") {
      return ManifoldSpec::stiefel(static_cast<int>(f.integer("n")), static_cast<int>(f.integer("p")));
    }
    if (kind == "product_spheres") {
      const Json& dims = f.require("dims");
      if (!dims.is_array()) throw ConfigError("dims: expected an array of integers");
      std::vector<int> d;
      for (const auto& v : dims) d.push_back(static_cast<int>(Fields::as_integer(v, "manifold.dims")));
      return ManifoldSpec::product_spheres(d);
    }
    throw ConfigError("kind: unknown manifold '" + kind + "'");
  });
  f.finish();
  return m;
}

CostSpec parse_cost(const Json& j, const ManifoldSpec& m) {
  Fields f(j, "cost");
  CostSpec spec;
  spec.name = f.string("name");
  if (const Json* p = f.find("params")) {
    Fields pf(*p, "cost.params");
    if (const Json* v = pf.find("matrix")) spec.params.matrix = as_matrix(*v, pf.at("matrix"));
    if (const Json* v = pf.find("linear")) spec.params.linear = as_vector(*v, pf.at("linear"));
    if (const Json* v = pf.find("base_point")) spec.params.base_point = as_vector(*v, pf.at("base_point"));
    if (const Json* v = pf.find("coupling")) spec.params.coupling = as_matrix(*v, pf.at("coupling"));
    if (const Json* v = pf.find("lipschitz")) spec.params.lipschitz = Fields::as_number(*v, pf.at("lipschitz"));
    if (const Json* v = pf.find("blocks")) {
      if (!v->is_array()) throw ConfigError(pf.at("blocks") + ": expected an array of matrices");
      for (size_t i = 0; i < v->size(); ++i) {
        spec.params.blocks.push_back(as_matrix((*v)[i], pf.at("blocks") + "[" + std::to_string(i) + "]"));
      }
    }
    pf.finish();
  }
  f.finish();
  with_path("cost", [&] { return builtin_cost(spec.name, spec.params, m); });
  return spec;
}

AlgorithmSpec parse_algorithm(const Json& j) {
  Fields f(j, "algorithm");
  AlgorithmSpec a;
  const std::string kind = f.string("kind");
  if (kind == "fixed_step") {
    a.kind = AlgorithmKind::FixedStep;
  } else if (kind == "stabilized_armijo") {
    a.kind = AlgorithmKind::StabilizedArmijo;
  } else if (kind == "standard_armijo") {
    a.kind = AlgorithmKind::StandardArmijo;
  } else if (kind == "proximal_point") {
    a.kind = AlgorithmKind::ProximalPoint;
  } else {
    throw ConfigError(f.at("kind") + ": unknown algorithm '" + kind + "'");
  }
  const std::string retraction = f.string_or("retraction", "exponential");
  if (retraction == "exponential") {
    a.retraction = RetractionKind::Exponential;
  } else if (retraction == "projection") {
    a.retraction = RetractionKind::Projection;
  } else {
    throw ConfigError(f.at("retraction") + ": expected \"exponential\" or \"projection\"");
  }
  const bool needs_alpha = a.kind == AlgorithmKind::FixedStep || a.kind == AlgorithmKind::ProximalPoint;
  a.alpha = needs_alpha ? f.number("alpha") : f.number_or("alpha", a.alpha);
  a.line_search.alpha_bar = f.number_or("alpha_bar", a.line_search.alpha_bar);
  a.line_search.tau = f.number_or("tau", a.line_search.tau);
  a.line_search.r = f.number_or("r", a.line_search.r);
  a.line_search.max_shrinks_per_step =
      static_cast<int>(f.integer_or("max_shrinks_per_step", a.line_search.max_shrinks_per_step));
  a.inner.tol = f.number_or("inner_tol", a.inner.tol);
  a.inner.max_iters = f.integer_or("inner_max_iters", a.inner.max_iters);
  f.finish();
  return a;
}

SamplerSpec parse_sampler(const Json& j, const ManifoldSpec& m) {
  Fields f(j, "sampler");
  SamplerSpec s;
  const std::string kind = f.string("kind");
  if (kind == "gaussian") {
    s.kind = SamplerKind::Gaussian;
    s.sigma = f.number_or("sigma", 1.0);
  } else if (kind == "uniform_sphere") {
    s.kind = SamplerKind::UniformSphere;
  } else if (kind == "uniform_annulus") {
    s.kind = SamplerKind::UniformAnnulus;
    s.r_lo = f.number("r_lo");
    s.r_hi = f.number("r_hi");
  } else if (kind == "listed") {
    s.kind = SamplerKind::Listed;
    const Json& pts = f.require("points");
    if (!pts.is_array()) throw ConfigError(f.at("points") + ": expected an array of points");
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec p = as_vector(pts[i], f.at("points") + "[" + std::to_string(i) + "]");
      if (p.size() != m.ambient_dim()) {
        throw ConfigError(f.at("points") + "[" + std::to_string(i) + "]: expected " + std::to_string(m.ambient_dim()) +
                          " coordinates");
      }
      s.points.push_back(p);
    }
  } else {
    throw ConfigError(f.at("kind") + ": unknown sampler '" + kind + "'");
  }
  f.finish();
  return s;
}

StopRule parse_stop(const Json& j) {
  Fields f(j, "stop");
  StopRule s;
  s.grad_tol = f.number_or("grad_tol", s.grad_tol);
  s.max_iters = f.integer_or("max_iters", s.max_iters);
  if (const Json* v = f.find("escape_radius")) {
    s.escape_radius = v->is_null() ? std::numeric_limits<double>::infinity() : Fields::as_number(*v, f.at("escape_radius"));
  }
  f.finish();
  return s;
}

ExperimentTolerances parse_tolerances(const Json& j) {
  Fields f(j, "tolerances");
  ExperimentTolerances t;
  t.window = static_cast<int>(f.integer_or("window", t.window));
  t.conv_tol = f.number_or("conv_tol", t.conv_tol);
  if (const Json* v = f.find("tol_g"); v && !v->is_null()) t.classify.tol_g = Fields::as_number(*v, f.at("tol_g"));
  t.classify.tol_lambda = f.number_or("tol_lambda", t.classify.tol_lambda);
  f.finish();
  return t;
}

MapKind parse_map_kind(const Json& j) {
  Fields f(j, "map");
  const std::string kind = f.string("kind");
  MapKind map;
  if (kind == "proximal_point") {
    map = MapKind::proximal();
  } else if (kind == "fixed_step") {
    const std::string r = f.string_or("retraction", "exponential");
    if (r != "exponential" && r != "projection") {
      throw ConfigError(f.at("retraction") + ": expected \"exponential\" or \"projection\"");
    }
    map = MapKind::fixed_step(r == "projection" ? RetractionKind::Projection : RetractionKind::Exponential);
  } else {
    throw ConfigError(f.at("kind") + ": unknown map '" + kind + "'");
  }
  f.finish();
  return map;
}

ExperimentConfig parse_experiment_config(const Json& root) {
  check_schema(root);
  Fields top(root, "");
  top.find("schema");
  Fields f(top.require("experiment"), "experiment");
  ExperimentConfig cfg;
  ExperimentPlan& plan = cfg.plan;
  plan.manifold = nested("experiment", [&] { return parse_manifold(f.require("manifold")); });
  plan.cost = nested("experiment", [&] { return parse_cost(f.require("cost"), plan.manifold); });
  plan.algorithm = nested("experiment", [&] { return parse_algorithm(f.require("algorithm")); });
  plan.sampler = nested("experiment", [&] { return parse_sampler(f.require("sampler"), plan.manifold); });
  plan.num_runs = f.integer_or("num_runs", 1);
  if (const Json* v = f.find("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long>() >= 0)) {
      throw ConfigError(f.at("seed") + ": expected a non-negative integer");
    }
    plan.seed = v->get<std::uint64_t>();
  }
  if (const Json* v = f.find("stop")) plan.stop = nested("experiment", [&] { return parse_stop(*v); });
  if (const Json* v = f.find("tolerances")) {
    plan.tolerances = nested("experiment", [&] { return parse_tolerances(*v); });
  }
  if (const Json* v = f.find("x0")) {
    cfg.x0 = as_vector(*v, f.at("x0"));
    if (cfg.x0->size() != plan.manifold.ambient_dim() || point_deviation(plan.manifold, *cfg.x0) > 1e-10) {
      throw ConfigError(f.at("x0") + ": not a point of " + plan.manifold.describe());
    }
  }
  f.finish();
  top.finish();
  with_path("experiment", [&] {
    plan.validate();
    return 0;
  });
  return cfg;
}

ScanConfig parse_scan_config(const Json& root) {
  check_schema(root);
  Fields top(root, "");
  top.find("schema");
  Fields f(top.require("scan"), "scan");
  ScanConfig cfg;
  cfg.manifold = nested("scan", [&] { return parse_manifold(f.require("manifold")); });
  cfg.cost = nested("scan", [&] { return parse_cost(f.require("cost"), cfg.manifold); });
  cfg.map = nested("scan", [&] { return parse_map_kind(f.require("map")); });
  cfg.point = as_vector(f.require("point"), f.at("point"));
  if (cfg.point.size() != cfg.manifold.ambient_dim() || point_deviation(cfg.manifold, cfg.point) > 1e-10) {
    throw ConfigError(f.at("point") + ": not a point of " + cfg.manifold.describe());
  }
  cfg.alpha_max = f.number("alpha_max");
  if (!(cfg.alpha_max > 0.0)) throw ConfigError(f.at("alpha_max") + ": must be > 0");
  cfg.grid_size = static_cast<int>(f.integer_or("grid_size", cfg.grid_size));
  if (cfg.grid_size < 2) throw ConfigError(f.at("grid_size") + ": must be >= 2");
  if (cfg.map.type == MapKind::Type::FixedStepRetraction && !cfg.manifold.supports(cfg.map.retraction)) {
    throw ConfigError("scan.map: retraction not available on " + cfg.manifold.describe());
  }
  f.finish();
  top.finish();
  return cfg;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Json to_json(const AvoidanceReport& report) {
  Json runs = Json::array();
  for (const RunRecord& r : report.runs) {
    const RunOutcome& o = r.outcome;
    runs.push_back({
        {"index", r.index},
        {"seed", r.seed},
        {"x0", vector_json(r.x0)},
        {"classification", to_string(o.classification)},
        {"limit_point", optional_json(o.limit_point, vector_json)},
        {"iterations", o.iterations},
        {"final_step", optional_json(o.final_step, number_json)},
        {"stabilization_index", optional_json(o.stabilization_index, [](long k) { return Json(k); })},
        {"termination", optional_json(r.termination, [](Termination t) { return Json(to_string(t)); })},
        {"error", optional_json(r.error, [](const std::string& s) { return Json(s); })},
    });
  }
  return {
      {"schema", kSchemaVersion},
      {"num_runs", report.num_runs},
      {"counts",
       {{to_string(Classification::ConvergedToStrictSaddle), report.count_strict_saddle},
        {to_string(Classification::ConvergedToOther), report.count_other},
        {to_string(Classification::Escaped), report.count_escaped},
        {to_string(Classification::Undecided), report.count_undecided}}},
      {"num_errors", report.num_errors},
      {"fraction_to_strict_saddle", report.fraction_to_strict_saddle},
      {"wilson_95", {{"lo", report.wilson.lo}, {"hi", report.wilson.hi}}},
      {"runs", runs},
  };
}

Json to_json(const SingularSet& set) {
  Json alphas = Json::array();
  for (double a : set.alphas) alphas.push_back(a);
  return {{"schema", kSchemaVersion},
          {"x", vector_json(set.x)},
          {"alphas", alphas},
          {"scan_range", {0.0, set.alpha_max}},
          {"method", set.method}};
}

Json to_json(const StepSizeBound& bound) {
  const BoundInputs& in = bound.inputs;
  return {{"schema", kSchemaVersion},
          {"regime", to_string(bound.regime)},
          {"alpha_max", number_json(bound.alpha_max)},
          {"inputs",
           {{"L", optional_json(in.lipschitz, number_json)},
            {"G", optional_json(in.gradient_bound, number_json)},
            {"J", optional_json(in.injectivity, number_json)},
            {"K_min", optional_json(in.k_min, number_json)},
            {"K_max", optional_json(in.k_max, number_json)},
            {"p", optional_json(in.stiefel_cols, [](int p) { return Json(p); })}}}};
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  const Eigen::Index n = traj.points.empty() ? 0 : traj.points.front().size();
  out << "iter";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  out << ",step,grad_norm,shrinks\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (size_t t = 0; t < traj.points.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << num(traj.points[t](i));
    out << ',';
    if (t < traj.steps.size()) out << num(traj.steps[t]);
    out << ',' << num(traj.grad_norms[t]) << ',';
    if (t < traj.shrink_counts.size()) out << traj.shrink_counts[t];
    out << '\n';
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace saddlelab
