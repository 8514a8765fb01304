#include "commands.hpp"

#include "flowlab/brownian.hpp"
#include "flowlab/catalog.hpp"
#include "flowlab/estimators.hpp"
#include "flowlab/interpolation.hpp"
#include "flowlab/io.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/runner.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace flowlab::cli {

namespace {

RunConfig load(const Options& opt) {
  RunConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.threads) cfg.threads = *opt.threads;
  set_default_threads(cfg.threads);
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
  return cfg.output_dir + "/" + file;
}

void emit(const RunConfig& cfg, const std::string& stem, const Json& j) {
  const std::string path = out_path(cfg, stem + ".json");
  write_text(path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
}

Observable config_observable(const RunConfig& cfg) {
  const auto it = cfg.params.find("observable");
  const std::string kind = it == cfg.params.end() ? "square" : it->second;
  if (kind == "square") return Observable::squared_norm();
  if (kind == "coordinate") return Observable::coordinate(static_cast<Index>(cfg.param("index", 0)));
  if (kind == "constant") return Observable::constant(cfg.param("c", 1.0));
  throw ConfigError("params.observable", "expected square, coordinate or constant");
}

WeightSpec config_weight(const RunConfig& cfg) {
  WeightSpec w;
  const auto it = cfg.params.find("weight");
  if (it == cfg.params.end() || it->second == "linear") {
    w.kind = WeightKind::linear;
  } else if (it->second == "cosine") {
    w.kind = WeightKind::cosine;
    w.epsilon = cfg.param("epsilon", w.epsilon);
  } else {
    throw ConfigError("params.weight", "expected linear or cosine");
  }
  return w;
}

SampleSpec config_samples(const RunConfig& cfg) {
  SampleSpec s;
  s.lo = cfg.param("box_lo", s.lo);
  s.hi = cfg.param("box_hi", s.hi);
  s.count = static_cast<Index>(cfg.param("box_samples", static_cast<double>(s.count)));
  return s;
}

ModelPair<double> config_pair(const RunConfig& cfg) {
  return ModelPair<double>(config_base(cfg), config_perturbed(cfg));
}

std::vector<int> orders(const RunConfig& cfg) {
  std::vector<int> out;
  for (double v : cfg.param_list("n_list", {2, 4})) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

int run(const Options& opt) {
  const RunConfig cfg = load(opt);
  const ExperimentResult res = run_experiment(cfg);
  const Json j = to_json(res);
  write_text(out_path(cfg, res.name + ".json"), j.dump(2) + "\n");
  std::ostringstream csv;
  write_csv(csv, res);
  write_text(out_path(cfg, res.name + ".csv"), csv.str());
  for (const auto& v : res.verdicts)
    std::cout << (v.passed ? "PASS " : "FAIL ") << res.name << " " << v.criterion << ": "
              << v.detail << "\n";
  std::cout << "digest " << res.digest() << "\n";
  return res.passed() ? 0 : 2;
}

int check(const Options& opt) {
  const RunConfig cfg = load(opt);
  const SampleSpec spec = config_samples(cfg);
  const double c = cfg.param("chi_constant", 1.0);
  Json j;
  if (cfg.has_model()) {
    j = to_json(condition_report(*config_model(cfg), spec, orders(cfg), c));
  } else {
    j["base"] = to_json(condition_report(*config_base(cfg), spec, orders(cfg), c));
    j["perturbed"] = to_json(condition_report(*config_perturbed(cfg), spec, orders(cfg), c));
  }
  emit(cfg, "check", j);
  return 0;
}

int decompose(const Options& opt) {
  const RunConfig cfg = load(opt);
  validate(cfg);
  const ModelPair<double> pair = config_pair(cfg);
  const double s = cfg.param("s", 0.0), t = cfg.param("t", 1.0);
  const VectorXd x = config_state(cfg, pair.state_dim());
  if (!(cfg.h > 0)) throw ConfigError("mesh.h", "required");
  const double H = cfg.H > 0 ? cfg.H : cfg.h;
  const Index steps = mesh_ratio(t - s, cfg.h, "mesh.h");
  const Index stride = mesh_ratio(H, cfg.h, "mesh.H");
  const auto index = static_cast<std::uint64_t>(cfg.param("path", 0));
  const BrownianGrid grid = sample_brownian(*cfg.seed, index, s, t, steps, pair.noise_dim());
  DecompositionOptions dopt;
  dopt.keep_nodes = cfg.param("keep_nodes", 0.0) != 0.0;
  const auto work = decompose_path(pair, grid, x, stride, dopt);

  std::vector<double> res(cfg.paths);
  parallel_for(cfg.paths, cfg.threads, [&](Index i) {
    const BrownianGrid g =
        sample_brownian(*cfg.seed, static_cast<std::uint64_t>(i), s, t, steps, pair.noise_dim());
    res[i] = decompose_path(pair, g, x, stride).report.residual.norm();
  });
  const auto st = sample_stats(res);
  Json j;
  j["path"] = index;
  j["report"] = to_json(work.report);
  j["mean_residual_norm"] = st.mean;
  j["mean_residual_stderr"] = st.std_error;
  j["paths"] = cfg.paths;
  emit(cfg, "decompose", j);
  if (cfg.param("dump", 0.0) != 0.0) {
    std::ostringstream a, b;
    write_path_csv(a, grid, integrate_tangent(pair.base(), grid, x));
    write_path_csv(b, grid, integrate_tangent(pair.perturbed(), grid, x));
    write_text(out_path(cfg, "base_path.csv"), a.str());
    write_text(out_path(cfg, "perturbed_path.csv"), b.str());
  }
  return work.report.diverged ? 2 : 0;
}

int moments(const Options& opt) {
  const RunConfig cfg = load(opt);
  validate(cfg);
  const ModelPair<double> pair = config_pair(cfg);
  const double s = cfg.param("s", 0.0);
  const auto times = cfg.param_list("t_list", {cfg.param("t", 1.0)});
  const int n = static_cast<int>(cfg.param("n", 2));
  if (!(cfg.h > 0)) throw ConfigError("mesh.h", "required");
  const auto est = flow_difference_moments_over_time(
      pair, s, times, config_state(cfg, pair.state_dim()), n, cfg.paths, MeshSpec{cfg.h},
      *cfg.seed, config_exec(cfg));
  Json arr = Json::array();
  for (std::size_t i = 0; i < est.size(); ++i) {
    Json e = to_json(est[i]);
    e["t"] = times[i];
    arr.push_back(e);
  }
  emit(cfg, "moments", arr);
  return 0;
}

int bel(const Options& opt) {
  const RunConfig cfg = load(opt);
  validate(cfg);
  const ModelPtr<double> model = config_model(cfg);
  const double s = cfg.param("s", 0.0), t = cfg.param("t", 1.0);
  BelSpec spec;
  spec.paths = cfg.paths;
  spec.seed = *cfg.seed;
  if (!(cfg.h > 0)) throw ConfigError("mesh.h", "required");
  spec.h = cfg.h;
  spec.weight = config_weight(cfg);
  spec.eigen_floor = cfg.param("eigen_floor", spec.eigen_floor);
  spec.exec = config_exec(cfg);
  const Observable f = config_observable(cfg);
  const VectorXd x = config_state(cfg, model->state_dim());
  Json j;
  j["gradient"] = to_json(bel_gradient(*model, f, s, t, x, spec));
  if (cfg.param("hessian", 1.0) != 0.0) j["hessian"] = to_json(bel_hessian(*model, f, s, t, x, spec));
  emit(cfg, "bel", j);
  return 0;
}

int semigroup(const Options& opt) {
  const RunConfig cfg = load(opt);
  validate(cfg);
  const ModelPair<double> pair = config_pair(cfg);
  SemigroupSpec spec;
  spec.outer = static_cast<Index>(cfg.param("outer", static_cast<double>(spec.outer)));
  spec.inner = static_cast<Index>(cfg.param("inner", static_cast<double>(spec.inner)));
  spec.lhs_paths = cfg.paths;
  if (!(cfg.h > 0)) throw ConfigError("mesh.h", "required");
  spec.h = cfg.h;
  spec.nodes = static_cast<int>(cfg.param("nodes", spec.nodes));
  spec.seed = *cfg.seed;
  spec.weight = config_weight(cfg);
  spec.budget = cfg.param("budget", spec.budget);
  spec.exec = config_exec(cfg);
  const double s = cfg.param("s", 0.0), t = cfg.param("t", 1.0);
  const auto r = semigroup_difference(pair, config_observable(cfg), s, t,
                                      config_state(cfg, pair.state_dim()), spec);
  emit(cfg, "semigroup", to_json(r));
  return 0;
}

int invariant(const Options& opt) {
  const RunConfig cfg = load(opt);
  validate(cfg);
  const ModelPair<double> pair = config_pair(cfg);
  InvariantSpec spec;
  spec.samples = cfg.paths;
  spec.inner = static_cast<Index>(cfg.param("inner", static_cast<double>(spec.inner)));
  if (cfg.h > 0) spec.h = cfg.h;
  spec.burn_in = cfg.param("burn_in", spec.burn_in);
  spec.horizon = cfg.param("horizon", spec.horizon);
  spec.nodes = static_cast<int>(cfg.param("nodes", spec.nodes));
  spec.seed = *cfg.seed;
  spec.weight = config_weight(cfg);
  spec.conditions = config_samples(cfg);
  spec.exec = config_exec(cfg);
  emit(cfg, "invariant", to_json(invariant_shift(pair, config_observable(cfg), spec)));
  return 0;
}

int oracle(const Options& opt) {
  const RunConfig cfg = load(opt);
  const double s = cfg.param("s", 0.0), t = cfg.param("t", 1.0);
  const int n = static_cast<int>(cfg.param("n", 2));
  auto need = [](const ModelPtr<double>& m, const char* table) {
    auto o = LinearOracle::from_model(*m);
    if (!o) throw ConfigError(table, "no closed form for model " + m->name());
    return *o;
  };
  Json j;
  j["t"] = t;
  j["n"] = n;
  if (cfg.has_model()) {
    const auto m = config_model(cfg);
    const LinearOracle o = need(m, "model");
    const VectorXd x = config_state(cfg, m->state_dim());
    j["second_moment"] = oracle_second_moment(o, s, t, x);
    j["tangent_moment"] = oracle_tangent_moment(o, n, s, t);
  }
  if (cfg.has_pair()) {
    const auto a = config_base(cfg), b = config_perturbed(cfg);
    const LinearOracle oa = need(a, "base"), ob = need(b, "perturbed");
    const VectorXd x = config_state(cfg, a->state_dim());
    const auto law = oracle_difference_law(oa, ob, s, t, x);
    j["difference_mean"] = std::vector<double>(law.mean.data(), law.mean.data() + law.mean.size());
    j["difference_variance"] = law.variance;
    j["difference_moment"] = oracle_difference_moment(oa, ob, n, s, t, x);
  }
  emit(cfg, "oracle", j);
  return 0;
}

int list() {
  auto table = [](const char* title, const std::vector<CatalogEntry>& entries) {
    std::cout << title << "\n";
    for (const auto& e : entries) {
      std::printf("  %-22s %s\n", e.name.c_str(), e.description.c_str());
      std::string req, opt;
      for (const auto& r : e.required) req += (req.empty() ? "" : ", ") + r;
      for (const auto& o : e.optional) opt += (opt.empty() ? "" : ", ") + o;
      std::printf("  %-22s required: %s\n", "", req.c_str());
      if (!opt.empty()) std::printf("  %-22s optional: %s\n", "", opt.c_str());
    }
  };
  table("models", model_catalog());
  table("experiments", experiment_catalog());
  return 0;
}

}  // namespace flowlab::cli
