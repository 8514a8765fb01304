#include "flowlab/runner.hpp"

#include "flowlab/brownian.hpp"

#include <cmath>

namespace flowlab {

namespace {

std::vector<double> halving(double H, int levels) {
  std::vector<double> out;
  for (int k = 0; k < levels; ++k) out.push_back(H / std::pow(2.0, k));
  return out;
}

double require_h(const RunConfig& cfg) {
  if (!(cfg.h > 0)) throw ConfigError("mesh.h", "required");
  return cfg.h;
}

std::vector<int> to_ints(const std::vector<double>& v, const std::string& field) {
  std::vector<int> out;
  for (double x : v) {
    if (x != std::round(x) || x < 1) throw ConfigError(field, "expected positive integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace

ExecPolicy config_exec(const RunConfig& cfg) { return {cfg.threads, cfg.reduction}; }

VectorXd config_state(const RunConfig& cfg, Index d, double fallback) {
  const auto v = cfg.param_list("x", {fallback});
  if (static_cast<Index>(v.size()) == d) return Eigen::Map<const VectorXd>(v.data(), d);
  if (v.size() == 1) return VectorXd::Constant(d, v[0]);
  throw ConfigError("params.x", "expected 1 or " + std::to_string(d) + " values");
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  validate(cfg);
  const ExecPolicy exec = config_exec(cfg);
  const std::uint64_t seed = *cfg.seed;
  const std::string& name = cfg.name;

  if (name == "decomposition") {
    DecompositionStudy s;
    s.base = config_base(cfg);
    s.perturbed = config_perturbed(cfg);
    s.s = cfg.param("s", 0.0);
    s.t = cfg.param("t", 2.0);
    s.x = config_state(cfg, s.base->state_dim());
    if (cfg.params.count("H_list")) {
      s.H = cfg.param_list("H_list");
      s.fine_factor = static_cast<int>(cfg.param("fine_factor", 8));
    } else {
      if (!(cfg.H > 0)) throw ConfigError("mesh.H", "required");
      s.fine_factor = static_cast<int>(mesh_ratio(cfg.H, require_h(cfg), "mesh.H"));
      s.H = halving(cfg.H, static_cast<int>(cfg.param("levels", 3)));
    }
    s.paths = cfg.paths;
    s.seed = seed;
    s.monotone_k = cfg.tolerance("monotone_k", s.monotone_k);
    s.min_slope = cfg.tolerance("min_slope", s.min_slope);
    s.centering_k = cfg.tolerance("centering_k", s.centering_k);
    s.exec = exec;
    return run_decomposition_study(s);
  }
  if (name == "skorohod-variance") {
    SkorohodVarianceStudy s;
    s.base = config_base(cfg);
    s.perturbed = config_perturbed(cfg);
    s.s = cfg.param("s", 0.0);
    s.t = cfg.param("t", 2.0);
    s.x = config_state(cfg, s.base->state_dim());
    s.h = require_h(cfg);
    s.H = cfg.H > 0 ? cfg.H : cfg.h;
    s.paths = cfg.paths;
    s.seed = seed;
    s.cross_nodes = static_cast<int>(cfg.param("cross_nodes", s.cross_nodes));
    s.target = cfg.param("target", s.target);
    s.k = cfg.tolerance("k", s.k);
    s.cross_k = cfg.tolerance("cross_k", s.cross_k);
    s.exec = exec;
    return run_skorohod_variance(s);
  }
  if (name == "discretization-bound") {
    DiscretizationBoundStudy s;
    s.model = config_model(cfg);
    s.s = cfg.param("s", 0.0);
    s.t = cfg.param("t", s.t);
    s.x = config_state(cfg, s.model->state_dim());
    s.H = cfg.param_list("H_list", s.H);
    s.h = require_h(cfg);
    s.n = static_cast<int>(cfg.param("n", s.n));
    s.record_every = cfg.param("record_every", s.record_every);
    s.paths = cfg.paths;
    s.seed = seed;
    s.min_slope = cfg.tolerance("min_slope", s.min_slope);
    s.exec = exec;
    return run_discretization_bound(s);
  }
  if (name == "meanfield") {
    MeanFieldStudy s;
    s.theta = cfg.param("theta", s.theta);
    s.gamma = cfg.param("gamma", s.gamma);
    s.sigma = cfg.param("sigma", s.sigma);
    s.x0 = cfg.param("x0", s.x0);
    s.horizon = cfg.param("t", s.horizon);
    s.h = require_h(cfg);
    s.N.clear();
    for (int n : to_ints(cfg.param_list("N_list", {16, 64, 256, 1024}), "params.N_list"))
      s.N.push_back(n);
    s.pairs = cfg.paths;
    s.seed = seed;
    s.bias_tol = cfg.tolerance("bias_tol", s.bias_tol);
    s.fluct_tol = cfg.tolerance("fluct_tol", s.fluct_tol);
    s.exec = exec;
    return run_meanfield(s);
  }
  if (name == "perturbation") {
    PerturbationStudy s;
    s.base = config_model(cfg);
    s.s = cfg.param("s", 0.0);
    s.t = cfg.param("t", s.t);
    s.x = config_state(cfg, s.base->state_dim());
    s.delta = cfg.param_list("delta_list", s.delta);
    s.h = require_h(cfg);
    s.paths = cfg.paths;
    s.seed = seed;
    s.slope_tol = cfg.tolerance("slope_tol", s.slope_tol);
    s.max_ratio = cfg.tolerance("max_ratio", s.max_ratio);
    s.exec = exec;
    return run_perturbation(s);
  }
  if (name == "decay-rates") {
    DecayRateStudy s;
    s.model = config_model(cfg);
    s.x = config_state(cfg, s.model->state_dim());
    s.times = cfg.param_list("t_list", s.times);
    s.orders = to_ints(cfg.param_list("n_list", {2}), "params.n_list");
    s.h = require_h(cfg);
    s.paths = cfg.paths;
    s.seed = seed;
    s.pathwise = cfg.param("pathwise", 0.0) != 0.0;
    s.k = cfg.tolerance("k", s.k);
    s.exec = exec;
    return run_decay_rates(s);
  }
  if (name == "uniform-difference") {
    UniformDifferenceStudy s;
    s.base = config_base(cfg);
    s.perturbed = config_perturbed(cfg);
    s.x = config_state(cfg, s.base->state_dim());
    s.times = cfg.param_list("t_list", s.times);
    s.n = static_cast<int>(cfg.param("n", s.n));
    s.h = require_h(cfg);
    s.paths = cfg.paths;
    s.seed = seed;
    s.k = cfg.tolerance("k", s.k);
    s.exec = exec;
    return run_uniform_difference(s);
  }
  throw ConfigError("run.name", "unknown experiment '" + name + "'");
}

}  // namespace flowlab
