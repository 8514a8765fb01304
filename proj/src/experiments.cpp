#include "flowlab/experiments.hpp"

#include "flowlab/brownian.hpp"
#include "flowlab/catalog.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/rng.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace flowlab {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

class Clock {
 public:
  Clock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Collects "key=value;" pairs for the config digest.
class Describe {
 public:
  Describe& operator()(const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out_ << key << '=' << buf << ';';
    return *this;
  }
  Describe& operator()(const std::string& key, const std::string& v) {
    out_ << key << '=' << v << ';';
    return *this;
  }
  Describe& operator()(const std::string& key, const std::vector<double>& v) {
    out_ << key << '=';
    for (double x : v) (*this)("", x);
    return *this;
  }
  Describe& operator()(const std::string& key, const VectorXd& v) {
    return (*this)(key, std::vector<double>(v.data(), v.data() + v.size()));
  }
  Describe& model(const std::string& key, const ModelPtr<double>& m) {
    out_ << key << '=' << m->name() << '{';
    for (const auto& [k, v] : m->metadata().params) (*this)(k, v);
    out_ << "};";
    return *this;
  }
  std::string digest() const { return fnv1a_hex(out_.str()); }

 private:
  std::ostringstream out_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Verdict verdict(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

void require_model(const ModelPtr<double>& m, const char* field) {
  if (!m) throw ConfigError(field, "model missing");
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool ExperimentResult::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

std::string ExperimentResult::digest() const {
  std::string bytes = name;
  auto put = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  };
  for (const auto& r : rows) {
    bytes += r.label;
    put(r.parameter);
    put(r.measured);
    put(r.target);
    put(r.std_error);
  }
  for (const auto& s : slopes) {
    bytes += s.name;
    put(s.slope);
    put(s.std_error);
    put(s.intercept);
  }
  for (const auto& v : verdicts) bytes += v.criterion + (v.passed ? "1" : "0");
  return fnv1a_hex(bytes);
}

SlopeFit fit_loglog(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs at least two matching points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.name = name;
  fit.points = static_cast<Index>(n);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = ly[i] - fit.intercept - fit.slope * lx[i];
      sse += e * e;
    }
    fit.std_error = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

ExperimentResult run_decomposition_study(const DecompositionStudy& cfg) {
  require_model(cfg.base, "base");
  require_model(cfg.perturbed, "perturbed");
  const Clock clock;
  const ModelPair<double> pair(cfg.base, cfg.perturbed);
  const Index L = static_cast<Index>(cfg.H.size());
  if (L < 2) throw ConfigError("params.H", "need at least two estimator meshes");
  for (Index k = 1; k < L; ++k)
    if (mesh_ratio(cfg.H[k - 1], cfg.H[k], "params.H") != 2)
      throw ConfigError("params.H", "estimator meshes must halve");
  if (cfg.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const double h0 = cfg.H[0] / cfg.fine_factor;
  const Index steps0 = mesh_ratio(cfg.t - cfg.s, h0, "mesh.h");
  const Index M = cfg.paths;

  std::vector<std::vector<double>> res(L, std::vector<double>(M)), shat(L, std::vector<double>(M));
  std::vector<char> bad(M, 0), nonzero(M, 0);
  parallel_for(M, cfg.exec.threads, [&](Index i) {
    BrownianGrid grid = sample_brownian(cfg.seed, static_cast<std::uint64_t>(i), cfg.s, cfg.t,
                                        steps0, pair.noise_dim());
    for (Index k = 0; k < L; ++k) {
      if (k > 0) grid = refine(grid, 2);
      const auto work = decompose_path(pair, grid, cfg.x, cfg.fine_factor);
      if (work.report.diverged) {
        bad[i] = 1;
        return;
      }
      res[k][i] = work.report.residual.norm();
      shat[k][i] = work.report.s_hat(0);
      if (work.report.s_hat.cwiseAbs().maxCoeff() != 0.0) nonzero[i] = 1;
    }
  });

  ExperimentResult out;
  out.name = "decomposition";
  Describe desc;
  desc.model("base", cfg.base).model("perturbed", cfg.perturbed)("s", cfg.s)("t", cfg.t)(
      "x", cfg.x)("H", cfg.H)("fine_factor", cfg.fine_factor)("paths", double(M))(
      "seed", double(cfg.seed));
  out.config_digest = desc.digest();

  auto good = [&](const std::vector<double>& v) {
    std::vector<double> o;
    for (Index i = 0; i < M; ++i)
      if (!bad[i]) o.push_back(v[i]);
    return o;
  };
  Index divergent = 0;
  for (char c : bad) divergent += c;
  if (divergent == M) throw EstimationError("decomposition study: all paths diverged", divergent);

  std::vector<double> means;
  for (Index k = 0; k < L; ++k) {
    const auto st = sample_stats(good(res[k]));
    means.push_back(st.mean);
    out.rows.push_back({"residual", cfg.H[k], st.mean, nan_value, st.std_error});
  }
  for (Index k = 0; k < L; ++k) {
    const auto st = sample_stats(good(shat[k]));
    out.rows.push_back({"s_hat_mean", cfg.H[k], st.mean, 0.0, st.std_error});
  }
  out.rows.push_back({"divergent", 0, double(divergent), 0.0, 0.0});

  bool monotone = true;
  std::string worst;
  for (Index k = 0; k + 1 < L; ++k) {
    std::vector<double> diff(M);
    for (Index i = 0; i < M; ++i) diff[i] = res[k + 1][i] - res[k][i];
    const auto st = sample_stats(good(diff));
    out.rows.push_back({"residual_step_change", cfg.H[k + 1], st.mean, 0.0, st.std_error});
    if (st.mean > cfg.monotone_k * st.std_error) {
      monotone = false;
      worst += " H=" + fmt(cfg.H[k + 1]) + " change " + fmt(st.mean) + " > " +
               fmt(cfg.monotone_k * st.std_error);
    }
  }
  out.verdicts.push_back(verdict("residual_monotone", monotone,
                                 monotone ? "paired residual changes within tolerance" : worst));

  const SlopeFit fit = fit_loglog("residual_vs_H", cfg.H, means);
  out.slopes.push_back(fit);
  out.verdicts.push_back(verdict("residual_slope", fit.slope >= cfg.min_slope,
                                 "slope " + fmt(fit.slope) + " (min " + fmt(cfg.min_slope) + ")"));

  const auto last = sample_stats(good(shat[L - 1]));
  const bool centered = std::abs(last.mean) <= cfg.centering_k * last.std_error;
  out.verdicts.push_back(verdict("s_centering", centered,
                                 "mean " + fmt(last.mean) + ", stderr " + fmt(last.std_error)));

  const auto delta = delta_eval(pair, cfg.s, cfg.x);
  if (cfg.base->traits().constant_diffusion && cfg.perturbed->traits().constant_diffusion &&
      delta.dsigma.cwiseAbs().maxCoeff() == 0.0) {
    Index nz = 0;
    for (char c : nonzero) nz += c;
    out.verdicts.push_back(
        verdict("s_identically_zero", nz == 0, std::to_string(nz) + " paths with nonzero S"));
  }
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_skorohod_variance(const SkorohodVarianceStudy& cfg) {
  require_model(cfg.base, "base");
  require_model(cfg.perturbed, "perturbed");
  const Clock clock;
  const ModelPair<double> pair(cfg.base, cfg.perturbed);
  VarianceSpec spec;
  spec.paths = cfg.paths;
  spec.seed = cfg.seed;
  spec.fine_steps = mesh_ratio(cfg.t - cfg.s, cfg.h, "mesh.h");
  spec.stride = mesh_ratio(cfg.H, cfg.h, "mesh.H");
  spec.cross_nodes = cfg.cross_nodes;
  spec.exec = cfg.exec;
  const VarianceReport rep = skorohod_variance_1d(pair, spec, cfg.s, cfg.t, cfg.x);

  ExperimentResult out;
  out.name = "skorohod-variance";
  Describe desc;
  desc.model("base", cfg.base).model("perturbed", cfg.perturbed)("s", cfg.s)("t", cfg.t)(
      "x", cfg.x)("h", cfg.h)("H", cfg.H)("paths", double(cfg.paths))("seed", double(cfg.seed))(
      "cross_nodes", cfg.cross_nodes)("target", cfg.target);
  out.config_digest = desc.digest();

  out.rows.push_back({"s_mean", cfg.H, rep.s_mean, 0.0, rep.s_mean_stderr});
  out.rows.push_back({"empirical_variance", cfg.H, rep.empirical_variance, rep.total, rep.mc_stderr});
  out.rows.push_back({"diagonal_term", cfg.H, rep.diagonal_term, cfg.target, rep.diagonal_stderr});
  out.rows.push_back({"cross_term", cfg.H, rep.cross_term, nan_value, rep.cross_stderr});
  out.rows.push_back({"total", cfg.H, rep.total, rep.empirical_variance, rep.paired_stderr});
  out.rows.push_back({"divergent", cfg.H, double(rep.divergent), 0.0, 0.0});

  out.verdicts.push_back(verdict("s_centering", std::abs(rep.s_mean) <= cfg.k * rep.s_mean_stderr,
                                 "mean " + fmt(rep.s_mean) + ", stderr " + fmt(rep.s_mean_stderr)));
  const double k = rep.cross_forced_zero ? cfg.k : cfg.cross_k;
  const double se = std::sqrt(rep.mc_stderr * rep.mc_stderr +
                              rep.diagonal_stderr * rep.diagonal_stderr +
                              rep.cross_stderr * rep.cross_stderr);
  const double gap = std::abs(rep.empirical_variance - rep.total);
  out.verdicts.push_back(verdict("variance_match", gap <= k * se,
                                 "|Var - total| " + fmt(gap) + " vs " + fmt(k * se) +
                                     (rep.cross_forced_zero ? " (cross term zero)" : "")));
  if (std::isfinite(cfg.target)) {
    const double ge = std::abs(rep.empirical_variance - cfg.target);
    out.verdicts.push_back(verdict("empirical_target", ge <= cfg.k * rep.mc_stderr,
                                   "|Var - target| " + fmt(ge) + " vs " + fmt(cfg.k * rep.mc_stderr)));
    const double dse = std::sqrt(rep.mc_stderr * rep.mc_stderr +
                                 rep.diagonal_stderr * rep.diagonal_stderr);
    const double gd = std::abs(rep.diagonal_term - cfg.target);
    out.verdicts.push_back(verdict("diagonal_target", gd <= cfg.k * dse,
                                   "|diag - target| " + fmt(gd) + " vs " + fmt(cfg.k * dse)));
  }
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_discretization_bound(const DiscretizationBoundStudy& cfg) {
  require_model(cfg.model, "model");
  const Clock clock;
  const Model<double>& model = *cfg.model;
  if (!model.traits().constant_diffusion)
    throw ConditionError("discretization bound needs a constant diffusion coefficient");
  const ConditionReport cond = condition_report(model, cfg.conditions, {cfg.n});
  if (!cond.T(cfg.n))
    throw ConditionError("discretization bound: contraction condition fails (lambda_A = " +
                         fmt(cond.lambda_A) + ")");
  const Index d = model.state_dim(), r = model.noise_dim();
  double grad_sup = 0;
  MatrixXd g(d, d);
  for (const auto& p : sample_points(cfg.conditions, d)) {
    model.drift_grad(cfg.s, p, g);
    grad_sup = std::max(grad_sup, spectral_norm(g));
  }
  VectorXd b0(d);
  model.drift(cfg.s, VectorXd::Zero(d), b0);
  MatrixXd sig(d, r);
  model.diffusion(cfg.s, VectorXd::Zero(d), sig);
  const double sigma_norm = sig.norm();

  const Index steps = mesh_ratio(cfg.t - cfg.s, cfg.h, "mesh.h");
  const Index rec = mesh_ratio(cfg.record_every, cfg.h, "params.record_every");
  if (steps % rec != 0) throw ConfigError("params.record_every", "must divide the horizon");
  const Index R = steps / rec + 1;
  const Index L = static_cast<Index>(cfg.H.size());
  for (double H : cfg.H) {
    const Index m = mesh_ratio(H, cfg.h, "params.H");
    if (steps % m != 0) throw ConfigError("params.H", "must divide the horizon");
  }
  if (cfg.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const Index M = cfg.paths;

  // err[k][node][path], norm[k][node][path]
  std::vector<std::vector<std::vector<double>>> err(
      L, std::vector<std::vector<double>>(R, std::vector<double>(M))),
      norm = err;
  std::vector<char> bad(M, 0);
  parallel_for(M, cfg.exec.threads, [&](Index i) {
    const BrownianGrid grid =
        sample_brownian(cfg.seed, static_cast<std::uint64_t>(i), cfg.s, cfg.t, steps, r);
    const FlowPath<double> exact = integrate_flow(model, grid, cfg.x);
    if (exact.diverged) {
      bad[i] = 1;
      return;
    }
    for (Index k = 0; k < L; ++k) {
      const FlowPath<double> frozen = integrate_frozen_drift(model, grid, cfg.x, cfg.H[k]);
      if (frozen.diverged) {
        bad[i] = 1;
        return;
      }
      for (Index q = 0; q < R; ++q) {
        const Index node = q * rec;
        err[k][q][i] = (frozen.states.row(node) - exact.states.row(node)).norm();
        norm[k][q][i] = frozen.states.row(node).norm();
      }
    }
  });
  Index divergent = 0;
  for (char c : bad) divergent += c;
  auto good = [&](const std::vector<double>& v) {
    std::vector<double> o;
    for (Index i = 0; i < M; ++i)
      if (!bad[i]) o.push_back(v[i]);
    return o;
  };

  ExperimentResult out;
  out.name = "discretization-bound";
  Describe desc;
  desc.model("model", cfg.model)("s", cfg.s)("t", cfg.t)("x", cfg.x)("H", cfg.H)("h", cfg.h)(
      "n", cfg.n)("paths", double(M))("seed", double(cfg.seed))("record_every", cfg.record_every);
  out.config_digest = desc.digest();

  double m_hat = 0;
  for (Index k = 0; k < L; ++k)
    for (Index q = 0; q < R; ++q)
      m_hat = std::max(m_hat, moment_from_samples(good(norm[k][q]), cfg.n, cfg.seed, divergent,
                                                   cfg.exec).value);
  out.rows.push_back({"lambda_A", 0, cond.lambda_A, nan_value, 0});
  out.rows.push_back({"grad_b_sup", 0, grad_sup, nan_value, 0});
  out.rows.push_back({"m_hat", 0, m_hat, nan_value, 0});

  std::vector<double> measured;
  for (Index k = 0; k < L; ++k) {
    MomentEstimate worst;
    for (Index q = 1; q < R; ++q) {
      const auto e = moment_from_samples(good(err[k][q]), cfg.n, cfg.seed, divergent, cfg.exec);
      if (e.value >= worst.value) worst = e;
    }
    const double H = cfg.H[k];
    const double bound =
        grad_sup * ((b0.norm() + m_hat * grad_sup) * H + sigma_norm * std::sqrt(H)) / cond.lambda_A;
    measured.push_back(worst.value);
    out.rows.push_back({"error", H, worst.value, bound, worst.std_error});
    out.verdicts.push_back(verdict("bound_H=" + fmt(H), worst.value <= bound,
                                   "error " + fmt(worst.value) + " vs bound " + fmt(bound)));
  }
  const SlopeFit fit = fit_loglog("error_vs_H", cfg.H, measured);
  out.slopes.push_back(fit);
  out.verdicts.push_back(verdict("error_slope", fit.slope >= cfg.min_slope,
                                 "slope " + fmt(fit.slope) + " (min " + fmt(cfg.min_slope) + ")"));
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_meanfield(const MeanFieldStudy& cfg) {
  const Clock clock;
  const Index steps = mesh_ratio(cfg.horizon, cfg.h, "mesh.h");
  if (cfg.pairs < 2) throw ConfigError("mc.paths", "need at least 2 repetitions");
  const double h = cfg.horizon / static_cast<double>(steps);
  auto limit_rhs = [&](double m) { return -m - cfg.gamma * std::tanh(m); };
  double m_euler = cfg.x0;
  for (Index k = 0; k < steps; ++k) m_euler += limit_rhs(m_euler) * h;
  double m_rk4 = cfg.x0;
  for (Index k = 0; k < steps; ++k) {
    const double k1 = limit_rhs(m_rk4), k2 = limit_rhs(m_rk4 + 0.5 * h * k1),
                 k3 = limit_rhs(m_rk4 + 0.5 * h * k2), k4 = limit_rhs(m_rk4 + h * k3);
    m_rk4 += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }

  ExperimentResult out;
  out.name = "meanfield";
  Describe desc;
  std::vector<double> Nd(cfg.N.begin(), cfg.N.end());
  desc("theta", cfg.theta)("gamma", cfg.gamma)("sigma", cfg.sigma)("x0", cfg.x0)(
      "horizon", cfg.horizon)("h", cfg.h)("N", Nd)("pairs", double(cfg.pairs))(
      "seed", double(cfg.seed));
  out.config_digest = desc.digest();
  out.rows.push_back({"euler_limit", 0, m_euler, nan_value, 0});
  out.rows.push_back({"rk4_limit", 0, m_rk4, nan_value, 0});

  std::vector<double> bias, fluct;
  const double sq = std::sqrt(h);
  for (Index q = 0; q < static_cast<Index>(cfg.N.size()); ++q) {
    const Index N = cfg.N[q];
    if (N < 1) throw ConfigError("params.N", "particle counts must be positive");
    std::vector<double> plus(cfg.pairs), minus(cfg.pairs);
    parallel_for(cfg.pairs, cfg.exec.threads, [&](Index i) {
      Substream rng(cfg.seed,
                    derive_stream(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(N),
                                  stream_tag::sample));
      VectorXd a = VectorXd::Constant(N, cfg.x0), b = a, z(N);
      for (Index k = 0; k < steps; ++k) {
        rng.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(N)));
        const double ma = a.mean(), mb = b.mean();
        for (Index j = 0; j < N; ++j) {
          const double dw = sq * z(j);
          a(j) += (-a(j) + cfg.theta * (ma - a(j)) - cfg.gamma * std::tanh(ma)) * h + cfg.sigma * dw;
          b(j) += (-b(j) + cfg.theta * (mb - b(j)) - cfg.gamma * std::tanh(mb)) * h - cfg.sigma * dw;
        }
      }
      plus[i] = a.mean();
      minus[i] = b.mean();
    });
    std::vector<double> avg(cfg.pairs);
    for (Index i = 0; i < cfg.pairs; ++i) avg[i] = 0.5 * (plus[i] + minus[i]);
    const auto st = sample_stats(avg);
    const double bi = std::abs(st.mean - m_euler);
    const auto sp = sample_stats(plus);
    const double sd = sp.std_error * std::sqrt(static_cast<double>(cfg.pairs));
    const double sd_se = sd / std::sqrt(2.0 * static_cast<double>(cfg.pairs - 1));
    bias.push_back(bi);
    fluct.push_back(sd);
    out.rows.push_back({"bias", double(N), bi, nan_value, st.std_error});
    out.rows.push_back({"fluctuation", double(N), sd, nan_value, sd_se});
    out.rows.push_back({"mean", double(N), st.mean, m_euler, st.std_error});
  }
  if (cfg.sigma == 0.0) {
    out.verdicts.push_back(verdict("fluctuation_zero",
                                   *std::max_element(fluct.begin(), fluct.end()) == 0.0,
                                   "deterministic particle system"));
  } else {
    const SlopeFit fb = fit_loglog("bias_vs_N", Nd, bias);
    const SlopeFit ff = fit_loglog("fluctuation_vs_N", Nd, fluct);
    out.slopes.push_back(fb);
    out.slopes.push_back(ff);
    out.verdicts.push_back(verdict("bias_slope", std::abs(fb.slope - cfg.bias_slope) <= cfg.bias_tol,
                                   "slope " + fmt(fb.slope) + " target " + fmt(cfg.bias_slope) +
                                       " +- " + fmt(cfg.bias_tol)));
    out.verdicts.push_back(
        verdict("fluctuation_slope", std::abs(ff.slope - cfg.fluct_slope) <= cfg.fluct_tol,
                "slope " + fmt(ff.slope) + " target " + fmt(cfg.fluct_slope) + " +- " +
                    fmt(cfg.fluct_tol)));
  }
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_perturbation(const PerturbationStudy& cfg) {
  require_model(cfg.base, "base");
  const Clock clock;
  const Model<double>& base = *cfg.base;
  const Index d = base.state_dim(), r = base.noise_dim();
  const Index steps = mesh_ratio(cfg.t - cfg.s, cfg.h, "mesh.h");
  const Index D = static_cast<Index>(cfg.delta.size());
  if (cfg.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const Index M = cfg.paths;
  std::vector<ModelPtr<double>> perturbed;
  for (double delta : cfg.delta)
    perturbed.push_back(std::make_shared<TanhDriftPerturbation<double>>(cfg.base, delta));

  std::vector<std::vector<double>> rem(D, std::vector<double>(M, 0.0));
  std::vector<char> bad(M, 0);
  parallel_for(M, cfg.exec.threads, [&](Index i) {
    const BrownianGrid grid =
        sample_brownian(cfg.seed, static_cast<std::uint64_t>(i), cfg.s, cfg.t, steps, r);
    const double h = grid.step();
    VectorXd x = cfg.x, deriv = VectorXd::Zero(d), dw(r), src(d);
    MatrixXd gb(d, d), gs(d, d), step_map(d, d);
    EulerStepper<double> stepper(base);
    VariationalState<double> st;
    st.reset(cfg.x, Order::flow);
    for (Index k = 0; k < steps; ++k) {
      const double u = grid.time(k);
      for (Index c = 0; c < r; ++c) dw(c) = grid.increments(k, c);
      base.drift_grad(u, st.x, gb);
      step_map = MatrixXd::Identity(d, d) + gb * h;
      if (!base.traits().constant_diffusion)
        for (Index c = 0; c < r; ++c) {
          base.diffusion_grad(u, st.x, c, gs);
          step_map += gs * dw(c);
        }
      src = st.x.array().tanh().matrix() * h;
      deriv = step_map.transpose() * deriv + src;
      stepper.step(u, h, grid.increments.row(k), st, Order::flow);
      if (stepper.exploded(st)) {
        bad[i] = 1;
        return;
      }
    }
    for (Index q = 0; q < D; ++q) {
      const FlowPath<double> xd = integrate_flow(*perturbed[q], grid, cfg.x);
      if (xd.diverged) {
        bad[i] = 1;
        return;
      }
      rem[q][i] = (xd.terminal() - st.x - cfg.delta[q] * deriv).norm();
    }
  });
  Index divergent = 0;
  for (char c : bad) divergent += c;
  if (divergent == M) throw EstimationError("perturbation: all paths diverged", divergent);

  ExperimentResult out;
  out.name = "perturbation";
  Describe desc;
  desc.model("base", cfg.base)("s", cfg.s)("t", cfg.t)("x", cfg.x)("delta", cfg.delta)(
      "h", cfg.h)("paths", double(M))("seed", double(cfg.seed));
  out.config_digest = desc.digest();

  std::vector<double> means, ratios;
  for (Index q = 0; q < D; ++q) {
    std::vector<double> v;
    for (Index i = 0; i < M; ++i)
      if (!bad[i]) v.push_back(rem[q][i]);
    const auto st = sample_stats(v);
    const double dl = cfg.delta[q];
    means.push_back(st.mean);
    out.rows.push_back({"remainder", dl, st.mean, nan_value, st.std_error});
    if (dl != 0.0) {
      ratios.push_back(st.mean / (dl * dl));
      out.rows.push_back({"remainder_over_delta2", dl, ratios.back(), nan_value,
                          st.std_error / (dl * dl)});
    }
  }
  out.rows.push_back({"divergent", 0, double(divergent), 0.0, 0.0});
  std::vector<double> xs, ys;
  for (Index q = 0; q < D; ++q)
    if (cfg.delta[q] != 0.0) {
      xs.push_back(cfg.delta[q]);
      ys.push_back(means[q]);
    } else {
      out.verdicts.push_back(verdict("zero_delta", means[q] == 0.0, "remainder " + fmt(means[q])));
    }
  if (xs.size() >= 2) {
    const SlopeFit fit = fit_loglog("remainder_vs_delta", xs, ys);
    out.slopes.push_back(fit);
    out.verdicts.push_back(verdict("remainder_slope", std::abs(fit.slope - cfg.slope) <= cfg.slope_tol,
                                   "slope " + fmt(fit.slope) + " target " + fmt(cfg.slope) + " +- " +
                                       fmt(cfg.slope_tol)));
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    const double lo = *std::min_element(ratios.begin(), ratios.end());
    out.verdicts.push_back(verdict("remainder_ratio", hi <= cfg.max_ratio * lo,
                                   "max/min " + fmt(hi / lo) + " (max " + fmt(cfg.max_ratio) + ")"));
  }
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_decay_rates(const DecayRateStudy& cfg) {
  require_model(cfg.model, "model");
  const Clock clock;
  const Model<double>& model = *cfg.model;
  const Index d = model.state_dim(), r = model.noise_dim();
  const ConditionReport cond = condition_report(model, cfg.conditions, cfg.orders);
  for (int n : cfg.orders)
    if (!cond.T(n))
      throw ConditionError("decay rates: condition (T)_" + std::to_string(n) +
                           " fails (lambda_A = " + fmt(cond.lambda_A) + ")");
  std::vector<double> times = cfg.times;
  std::sort(times.begin(), times.end());
  std::vector<Index> nodes;
  for (double t : times) nodes.push_back(mesh_ratio(t, cfg.h, "params.times"));
  const Index steps = nodes.back();
  const Index T = static_cast<Index>(times.size());
  if (cfg.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const Index M = cfg.paths;
  const double lam = cond.lambda_A;
  const double hess_sup = cond.drift_hess_sup;
  const double slack = 1.0 + 10.0 * cfg.h;

  std::vector<std::vector<double>> jn(T, std::vector<double>(M)), hn = jn;
  std::vector<double> worst_j(M, 0.0), worst_h(M, 0.0), max_h(M, 0.0);
  std::vector<char> bad(M, 0);
  parallel_for(M, cfg.exec.threads, [&](Index i) {
    const BrownianGrid grid =
        sample_brownian(cfg.seed, static_cast<std::uint64_t>(i), 0.0, times.back(), steps, r);
    EulerStepper<double> stepper(model);
    VariationalState<double> st;
    st.reset(cfg.x, Order::hessian);
    Index q = 0;
    for (Index k = 0; k < steps; ++k) {
      stepper.step(grid.time(k), grid.step(), grid.increments.row(k), st, Order::hessian);
      if (stepper.exploded(st)) {
        bad[i] = 1;
        return;
      }
      const double t = grid.time(k + 1);
      const double hf = st.H.norm();
      max_h[i] = std::max(max_h[i], hf);
      if (cfg.pathwise) {
        const double decay = std::exp(-lam * t) * slack;
        worst_j[i] = std::max(worst_j[i], spectral_norm(st.J) / decay);
        const double hb = static_cast<double>(d) / lam * hess_sup * decay;
        worst_h[i] = std::max(worst_h[i], hb > 0 ? hf / hb : (hf > 0 ? INFINITY : 0.0));
      }
      while (q < T && nodes[q] == k + 1) {
        jn[q][i] = st.J.norm();
        hn[q][i] = hf;
        ++q;
      }
    }
  });
  Index divergent = 0;
  for (char c : bad) divergent += c;
  if (divergent == M) throw EstimationError("decay rates: all paths diverged", divergent);
  auto good = [&](const std::vector<double>& v) {
    std::vector<double> o;
    for (Index i = 0; i < M; ++i)
      if (!bad[i]) o.push_back(v[i]);
    return o;
  };

  ExperimentResult out;
  out.name = "decay-rates";
  Describe desc;
  std::vector<double> od(cfg.orders.begin(), cfg.orders.end());
  desc.model("model", cfg.model)("x", cfg.x)("times", times)("orders", od)("h", cfg.h)(
      "paths", double(M))("seed", double(cfg.seed))("pathwise", cfg.pathwise ? 1.0 : 0.0);
  out.config_digest = desc.digest();
  out.rows.push_back({"lambda_A", 0, lam, nan_value, 0});
  out.rows.push_back({"drift_hess_sup", 0, hess_sup, nan_value, 0});

  const auto oracle = LinearOracle::from_model(model);
  const double root_d = std::sqrt(static_cast<double>(d));
  for (int n : cfg.orders) {
    const double lam_n = lambda_A_n(lam, cond.rho_star, d, n);
    bool below = true, matches = true;
    std::string detail, odetail;
    for (Index q = 0; q < T; ++q) {
      const double t = times[q];
      const auto e = moment_from_samples(good(jn[q]), n, cfg.seed, divergent, cfg.exec);
      const double bound = root_d * std::exp(-lam_n * t);
      out.rows.push_back({"tangent_n" + std::to_string(n), t, e.value, bound, e.std_error});
      if (e.value > bound * (1.0 + cfg.k * e.relative_stderr())) {
        below = false;
        detail += " t=" + fmt(t) + ": " + fmt(e.value) + " > " + fmt(bound);
      }
      if (oracle && oracle->kind == OracleKind::ou) {
        const double exact = oracle_tangent_moment(*oracle, n, 0.0, t);
        const double tol = e.std_error + root_d * std::exp(-oracle->rate * t) * t * cfg.h;
        out.rows.push_back({"tangent_oracle_n" + std::to_string(n), t, e.value, exact, e.std_error});
        if (std::abs(e.value - exact) > tol) {
          matches = false;
          odetail += " t=" + fmt(t) + ": |" + fmt(e.value) + " - " + fmt(exact) + "| > " + fmt(tol);
        }
      }
      const auto he = moment_from_samples(good(hn[q]), n, cfg.seed, divergent, cfg.exec);
      out.rows.push_back({"hessian_n" + std::to_string(n), t, he.value, nan_value, he.std_error});
    }
    out.verdicts.push_back(verdict("tangent_bound_n" + std::to_string(n), below,
                                   below ? "moments below the decay curve" : detail));
    if (oracle && oracle->kind == OracleKind::ou)
      out.verdicts.push_back(verdict("tangent_oracle_n" + std::to_string(n), matches,
                                     matches ? "within stderr + O(h)" : odetail));
  }
  if (model.traits().linear) {
    const double mh = *std::max_element(max_h.begin(), max_h.end());
    out.verdicts.push_back(verdict("hessian_zero", mh == 0.0, "max |H| " + fmt(mh)));
  }
  if (cfg.pathwise) {
    const double wj = *std::max_element(worst_j.begin(), worst_j.end());
    const double wh = *std::max_element(worst_h.begin(), worst_h.end());
    out.rows.push_back({"tangent_as_ratio", 0, wj, 1.0, 0});
    out.rows.push_back({"hessian_as_ratio", 0, wh, 1.0, 0});
    out.verdicts.push_back(verdict("tangent_as", wj <= 1.0, "max ratio to bound " + fmt(wj)));
    out.verdicts.push_back(verdict("hessian_as", wh <= 1.0, "max ratio to bound " + fmt(wh)));
  }
  out.wall_time = clock.seconds();
  return out;
}

ExperimentResult run_uniform_difference(const UniformDifferenceStudy& cfg) {
  require_model(cfg.base, "base");
  require_model(cfg.perturbed, "perturbed");
  const Clock clock;
  const ModelPair<double> pair(cfg.base, cfg.perturbed);
  const auto cb = condition_report(*cfg.base, cfg.conditions, {cfg.n});
  const auto cp = condition_report(*cfg.perturbed, cfg.conditions, {cfg.n});
  std::vector<double> times = cfg.times;
  std::sort(times.begin(), times.end());
  ExecPolicy exec = cfg.exec;
  const auto est = flow_difference_moments_over_time(pair, 0.0, times, cfg.x, cfg.n, cfg.paths,
                                                     MeshSpec{cfg.h}, cfg.seed, exec);

  ExperimentResult out;
  out.name = "uniform-difference";
  Describe desc;
  desc.model("base", cfg.base).model("perturbed", cfg.perturbed)("x", cfg.x)("times", times)(
      "n", cfg.n)("h", cfg.h)("paths", double(cfg.paths))("seed", double(cfg.seed));
  out.config_digest = desc.digest();
  out.rows.push_back({"lambda_A_base", double(cfg.n), cb.lambda_A, nan_value, 0});
  out.rows.push_back({"lambda_A_perturbed", double(cfg.n), cp.lambda_A, nan_value, 0});

  const auto ob = LinearOracle::from_model(*cfg.base);
  const auto op = LinearOracle::from_model(*cfg.perturbed);
  const bool closed = ob && op && ob->kind == OracleKind::ou && op->kind == OracleKind::ou;
  double hi = 0, lo = INFINITY, rel = 0;
  for (std::size_t q = 0; q < times.size(); ++q) {
    const auto& e = est[q];
    const double target =
        closed ? oracle_difference_moment(*ob, *op, cfg.n, 0.0, times[q], cfg.x) : nan_value;
    out.rows.push_back({"difference_moment", times[q], e.value, target, e.std_error});
    hi = std::max(hi, e.value);
    lo = std::min(lo, e.value);
    rel = std::max(rel, e.relative_stderr());
  }
  const bool cond_ok = cb.T(cfg.n) && cp.T(cfg.n);
  const double ratio = hi / lo;
  out.rows.push_back({"plateau_ratio", 0, ratio, 1.0 + cfg.k * rel, 0});
  out.verdicts.push_back(verdict("plateau", ratio <= 1.0 + cfg.k * rel,
                                 "max/min " + fmt(ratio) + " vs " + fmt(1.0 + cfg.k * rel) +
                                     (cond_ok ? "" : " (conditions violated)")));
  if (cfg.base->traits().constant_diffusion && cfg.perturbed->traits().constant_diffusion) {
    const auto delta = delta_eval(pair, 0.0, cfg.x);
    const double scale = delta.db.norm() + delta.dsigma.norm();
    if (scale > 0) out.rows.push_back({"kappa_fit", 0, hi / scale, nan_value, 0});
  }
  out.wall_time = clock.seconds();
  return out;
}

}  // namespace flowlab
