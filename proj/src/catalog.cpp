#include "flowlab/catalog.hpp"

namespace flowlab {

namespace {

double require(const ParamMap& p, const std::string& key, const std::string& table) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigError(table + "." + key, "missing required parameter");
  return it->second;
}

double optional(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

Index as_dim(double v, const std::string& field) {
  if (v < 1 || v != static_cast<double>(static_cast<Index>(v)))
    throw ConfigError(field, "must be a positive integer");
  return static_cast<Index>(v);
}

}  // namespace

const std::vector<CatalogEntry>& model_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"ou", "b(x) = -rate x, sigma = sigma I", {"rate", "sigma"}, {"dim", "tanh_delta"}},
      {"gbm", "1D b(x) = beta x, sigma(x) = alpha x", {"beta", "alpha"}, {"tanh_delta"}},
      {"langevin-tanh", "b = -grad U, U = curvature |x|^2/2 + sum ln cosh x_i, sigma = sigma I",
       {"sigma"}, {"dim", "curvature", "tanh_delta"}},
      {"frozen-drift", "drift of a catalog model frozen on a mesh of width H (mesh.H)",
       {"base model table"}, {}},
  };
  return entries;
}

const std::vector<CatalogEntry>& experiment_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"decomposition", "residual of X - Xbar - T - S under estimator mesh refinement",
       {"[base]", "[perturbed]", "mesh.h", "mesh.H", "mc.paths", "mc.seed"},
       {"params.H_list", "params.fine_factor", "params.levels", "params.t", "params.x"}},
      {"skorohod-variance", "1D variance of the fluctuation sum vs Malliavin terms",
       {"[base]", "[perturbed]", "mesh.h", "mc.paths", "mc.seed"},
       {"mesh.H", "params.t", "params.x", "params.target", "params.cross_nodes"}},
      {"discretization-bound", "frozen-drift error vs uniform bound",
       {"[model]", "mesh.h", "mc.paths", "mc.seed"},
       {"params.H_list", "params.n", "params.t", "params.x", "params.record_every"}},
      {"meanfield", "bias and fluctuation of the empirical mean vs N",
       {"mesh.h", "mc.paths", "mc.seed"},
       {"params.N_list", "params.theta", "params.gamma", "params.sigma", "params.x0", "params.t"}},
      {"perturbation", "second order remainder of a tanh drift perturbation",
       {"[model]", "mesh.h", "mc.paths", "mc.seed"},
       {"params.delta_list", "params.t", "params.x"}},
      {"decay-rates", "tangent and Hessian moment decay vs bound curves",
       {"[model]", "mesh.h", "mc.paths", "mc.seed"},
       {"params.t_list", "params.n_list", "params.pathwise", "params.x"}},
      {"uniform-difference", "time-uniform flow difference plateau",
       {"[base]", "[perturbed]", "mesh.h", "mc.paths", "mc.seed"},
       {"params.t_list", "params.n", "params.x"}},
  };
  return entries;
}

ModelPtr<double> make_model(const std::string& kind, const ParamMap& params,
                            const std::string& table) {
  ModelPtr<double> model;
  if (kind == "ou") {
    const Index d = as_dim(optional(params, "dim", 1), table + ".dim");
    model = std::make_shared<OrnsteinUhlenbeck<double>>(d, require(params, "rate", table),
                                                        require(params, "sigma", table));
  } else if (kind == "gbm") {
    model = std::make_shared<GeometricBrownian<double>>(require(params, "beta", table),
                                                        require(params, "alpha", table));
  } else if (kind == "langevin-tanh") {
    const Index d = as_dim(optional(params, "dim", 1), table + ".dim");
    model = std::make_shared<LangevinTanh<double>>(d, require(params, "sigma", table),
                                                   optional(params, "curvature", 1.0));
  } else {
    throw ConfigError(table + ".kind", "unknown model '" + kind + "'");
  }
  if (auto it = params.find("tanh_delta"); it != params.end() && it->second != 0.0)
    model = std::make_shared<TanhDriftPerturbation<double>>(model, it->second);
  return model;
}

}  // namespace flowlab
