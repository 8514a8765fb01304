#include "flowlab/estimators.hpp"

#include "flowlab/paths.hpp"
#include "flowlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace flowlab {

namespace {

std::uint64_t lhs_stream(Index i) {
  return derive_stream(static_cast<std::uint64_t>(i), 1, stream_tag::path);
}
std::uint64_t outer_stream(Index i) {
  return derive_stream(static_cast<std::uint64_t>(i), 0, stream_tag::outer);
}
std::uint64_t inner_stream(std::uint64_t parent, Index node, Index path) {
  return derive_stream(derive_stream(parent, static_cast<std::uint64_t>(node), stream_tag::node),
                       static_cast<std::uint64_t>(path), stream_tag::inner);
}

Index steps_for(double span, double h, const char* field) {
  return mesh_ratio(span, h, field);
}

}  // namespace

SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats out;
  if (v.empty()) return out;
  double s = 0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double q = 0;
  for (double x : v) q += (x - out.mean) * (x - out.mean);
  out.std_error = std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

MomentEstimate moment_from_samples(const std::vector<double>& norms, int n, std::uint64_t seed,
                                   Index divergent, const ExecPolicy& exec) {
  if (n < 1) throw std::invalid_argument("moment order must be >= 1");
  if (norms.empty())
    throw EstimationError("all " + std::to_string(divergent) + " samples diverged", divergent);
  std::vector<double> powered(norms.size());
  for (std::size_t i = 0; i < norms.size(); ++i) powered[i] = std::pow(std::abs(norms[i]), n);
  const double count = static_cast<double>(powered.size());
  MomentEstimate out;
  out.order = n;
  out.seed = seed;
  out.samples = static_cast<Index>(powered.size());
  out.divergent = divergent;
  out.raw_mean = reduce_sum(powered, exec) / count;
  out.value = std::pow(out.raw_mean, 1.0 / n);
  if (powered.size() >= 2 && out.raw_mean > 0) {
    std::vector<double> dev(powered.size());
    for (std::size_t i = 0; i < powered.size(); ++i)
      dev[i] = (powered[i] - out.raw_mean) * (powered[i] - out.raw_mean);
    const double var = reduce_sum(dev, exec) / (count - 1);
    const double raw_se = std::sqrt(var / count);
    out.std_error = raw_se / n * std::pow(out.raw_mean, 1.0 / n - 1.0);
  }
  return out;
}

namespace {

std::vector<double> collect(const PathSampler& sampler, Index M, std::uint64_t seed,
                            const ExecPolicy& exec, Index& divergent) {
  if (M < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  std::vector<std::optional<double>> raw(M);
  parallel_for(M, exec.threads,
               [&](Index i) { raw[i] = sampler(seed, static_cast<std::uint64_t>(i)); });
  std::vector<double> ok;
  ok.reserve(M);
  divergent = 0;
  for (const auto& v : raw) {
    if (v && std::isfinite(*v))
      ok.push_back(*v);
    else
      ++divergent;
  }
  return ok;
}

}  // namespace

MomentEstimate moment_estimate(const PathSampler& sampler, int n, Index M, std::uint64_t seed,
                               const ExecPolicy& exec) {
  Index divergent = 0;
  const auto ok = collect(sampler, M, seed, exec, divergent);
  return moment_from_samples(ok, n, seed, divergent, exec);
}

std::vector<MomentEstimate> moment_estimates(const PathSampler& sampler,
                                             const std::vector<int>& orders, Index M,
                                             std::uint64_t seed, const ExecPolicy& exec) {
  Index divergent = 0;
  const auto ok = collect(sampler, M, seed, exec, divergent);
  std::vector<MomentEstimate> out;
  for (int n : orders) out.push_back(moment_from_samples(ok, n, seed, divergent, exec));
  return out;
}

std::vector<MomentEstimate> flow_difference_moments_over_time(
    const ModelPair<double>& pair, double s, const std::vector<double>& times, const VectorXd& x,
    int n, Index M, const MeshSpec& mesh, std::uint64_t seed, const ExecPolicy& exec) {
  if (times.empty()) throw std::invalid_argument("no observation times");
  if (M < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  double t_max = s;
  std::vector<Index> nodes;
  for (double t : times) {
    nodes.push_back(steps_for(t - s, mesh.h, "mesh.h"));
    t_max = std::max(t_max, t);
  }
  const Index steps = steps_for(t_max - s, mesh.h, "mesh.h");
  const Index T = static_cast<Index>(times.size());
  std::vector<std::vector<double>> norms(T, std::vector<double>(M, 0.0));
  std::vector<char> bad(M, 0);
  parallel_for(M, exec.threads, [&](Index i) {
    const BrownianGrid grid = sample_brownian(seed, static_cast<std::uint64_t>(i), s, t_max,
                                              steps, pair.noise_dim());
    EulerStepper<double> a(pair.base()), b(pair.perturbed());
    VariationalState<double> sa, sb;
    sa.reset(x, Order::flow);
    sb.reset(x, Order::flow);
    std::vector<Index> order(T);
    for (Index j = 0; j < T; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](Index p, Index q) { return nodes[p] < nodes[q]; });
    Index at = 0;
    for (Index j : order) {
      a.propagate(grid, at, nodes[j], sa, Order::flow);
      b.propagate(grid, at, nodes[j], sb, Order::flow);
      at = nodes[j];
      if (sa.diverged || sb.diverged) {
        bad[i] = 1;
        return;
      }
      norms[j][i] = (sa.x - sb.x).norm();
    }
  });
  Index divergent = 0;
  for (char c : bad) divergent += c;
  std::vector<MomentEstimate> out;
  for (Index j = 0; j < T; ++j) {
    std::vector<double> ok;
    for (Index i = 0; i < M; ++i)
      if (!bad[i]) ok.push_back(norms[j][i]);
    out.push_back(moment_from_samples(ok, n, seed, divergent, exec));
  }
  return out;
}

MomentEstimate flow_difference_moments(const ModelPair<double>& pair, double s, double t,
                                       const VectorXd& x, int n, Index M, const MeshSpec& mesh,
                                       std::uint64_t seed, const ExecPolicy& exec) {
  return flow_difference_moments_over_time(pair, s, {t}, x, n, M, mesh, seed, exec).front();
}

Observable Observable::constant(double c) {
  return {[c](const VectorXd&) { return c; },
          [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); },
          [](const VectorXd& x) { return MatrixXd::Zero(x.size(), x.size()).eval(); }};
}

Observable Observable::coordinate(Index i) {
  return {[i](const VectorXd& x) { return x(i); },
          [i](const VectorXd& x) {
            VectorXd g = VectorXd::Zero(x.size());
            g(i) = 1;
            return g;
          },
          [](const VectorXd& x) { return MatrixXd::Zero(x.size(), x.size()).eval(); }};
}

Observable Observable::squared_norm() {
  return {[](const VectorXd& x) { return x.squaredNorm(); },
          [](const VectorXd& x) { return (2.0 * x).eval(); },
          [](const VectorXd& x) { return (2.0 * MatrixXd::Identity(x.size(), x.size())).eval(); }};
}

double WeightSpec::phi(double v) const {
  v = std::clamp(v, 0.0, 1.0);
  if (kind == WeightKind::linear) return v;
  if (v < 1.0 - epsilon) return 0.0;
  return 1.0 + std::cos((1.0 + (1.0 - v) / epsilon) * std::numbers::pi / 2.0);
}

double WeightSpec::phi_prime(double v) const {
  if (v < 0.0 || v > 1.0) return 0.0;
  if (kind == WeightKind::linear) return 1.0;
  if (v < 1.0 - epsilon) return 0.0;
  return std::numbers::pi / (2.0 * epsilon) *
         std::sin((1.0 + (1.0 - v) / epsilon) * std::numbers::pi / 2.0);
}

MatrixXd inverse_sqrt_spd(const MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd& lam = es.eigenvalues();
  if (!(lam.minCoeff() >= floor))
    throw EllipticityError("diffusion matrix eigenvalue " + std::to_string(lam.minCoeff()) +
                           " below floor " + std::to_string(floor));
  return es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Tensor21<double> inverse_sqrt_gradient(const MatrixXd& sigma,
                                       const std::vector<MatrixXd>& diffusion_grad, double floor) {
  const Index d = sigma.rows(), r = sigma.cols();
  const MatrixXd a = sigma * sigma.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd lam = es.eigenvalues();
  if (!(lam.minCoeff() >= floor))
    throw EllipticityError("diffusion matrix eigenvalue " + std::to_string(lam.minCoeff()) +
                           " below floor " + std::to_string(floor));
  const MatrixXd& Q = es.eigenvectors();
  const VectorXd root = lam.cwiseSqrt();
  const MatrixXd inv_sqrt = Q * root.cwiseInverse().asDiagonal() * Q.transpose();
  Tensor21<double> out(d * d, d);
  MatrixXd dsig(d, r);
  for (Index i = 0; i < d; ++i) {
    for (Index k = 0; k < r; ++k) dsig.col(k) = diffusion_grad[k].row(i).transpose();
    const MatrixXd da = dsig * sigma.transpose() + sigma * dsig.transpose();
    MatrixXd g = Q.transpose() * da * Q;
    for (Index p = 0; p < d; ++p)
      for (Index q = 0; q < d; ++q) g(p, q) /= root(p) + root(q);
    const MatrixXd dsqrt = Q * g * Q.transpose();
    const MatrixXd dinv = -inv_sqrt * dsqrt * inv_sqrt;
    for (Index j = 0; j < d; ++j) out.row(pair_row(i, j, d)) = dinv.row(j);
  }
  return out;
}

namespace {

struct WeightMatrices {
  MatrixXd inv_sqrt;
  Tensor21<double> grad;
};

class BelWeights {
 public:
  BelWeights(const Model<double>& model, double floor, bool want_grad)
      : model_(model), floor_(floor), want_grad_(want_grad),
        constant_(model.traits().constant_diffusion) {
    const Index d = model.state_dim(), r = model.noise_dim();
    if (d != r) throw DimensionError("BEL weights need r = d");
    sigma_.resize(d, r);
    gs_.assign(r, MatrixXd(d, d));
  }

  const WeightMatrices& at(double t, const VectorXd& x) {
    if (constant_ && ready_) return w_;
    model_.diffusion(t, x, sigma_);
    w_.inv_sqrt = inverse_sqrt_spd(sigma_ * sigma_.transpose(), floor_);
    const MatrixXd check = w_.inv_sqrt * sigma_ - MatrixXd::Identity(sigma_.rows(), sigma_.cols());
    if (check.cwiseAbs().maxCoeff() > 1e-8)
      throw EllipticityError("BEL weight needs sigma = a^{1/2} (symmetric positive definite) at " +
                             describe_point(t, x));
    const Index d = model_.state_dim();
    if (want_grad_ && !constant_) {
      for (Index k = 0; k < model_.noise_dim(); ++k) model_.diffusion_grad(t, x, k, gs_[k]);
      w_.grad = inverse_sqrt_gradient(sigma_, gs_, floor_);
    } else {
      w_.grad = Tensor21<double>::Zero(d * d, d);
    }
    ready_ = true;
    return w_;
  }

  bool constant() const { return constant_; }

 private:
  const Model<double>& model_;
  double floor_;
  bool want_grad_;
  bool constant_;
  bool ready_ = false;
  MatrixXd sigma_;
  std::vector<MatrixXd> gs_;
  WeightMatrices w_;
};

}  // namespace

BelSample bel_sample(const Model<double>& model, const Observable& f, const BrownianGrid& grid,
                     const VectorXd& x, const BelSpec& spec, bool want_hessian) {
  check_state<double>(model, x, grid);
  const Index d = model.state_dim();
  const Index n = grid.steps;
  const double s = grid.t0, t = grid.t1;
  const bool split = want_hessian && spec.form == HessianForm::split;
  if (split && !(spec.split > 0 && spec.split < 1))
    throw std::invalid_argument("split point must lie in (0,1)");
  const Index ks = split ? std::clamp<Index>(static_cast<Index>(std::llround(spec.split * n)), 1, n - 1) : n;
  const double us = grid.time(ks);

  BelWeights weights(model, spec.eigen_floor, want_hessian);
  EulerStepper<double> stepper(model);
  EulerStepper<double> stepper2(model);
  const Order order = want_hessian ? Order::hessian : Order::tangent;
  VariationalState<double> st, st2;
  st.reset(x, order);

  VectorXd tau = VectorXd::Zero(d);       // full interval weight
  VectorXd tau_a = VectorXd::Zero(d);     // [s, us]
  VectorXd tau_b = VectorXd::Zero(d);     // [us, t] from the restart at us
  VectorXd tau2 = VectorXd::Zero(d * d);  // second-order weight ([s,t] or [s,us])
  MatrixXd j_split;
  MatrixXd jj(d * d, d * d);
  VectorXd z(d), dwv(d);
  const double h = grid.step();
  for (Index k = 0; k < n; ++k) {
    const double u = grid.time(k);
    for (Index c = 0; c < d; ++c) dwv(c) = grid.increments(k, c);
    const double w_full = spec.weight.phi_prime((u - s) / (t - s)) / (t - s);
    double w_a = 0, w_b = 0;
    if (split) {
      if (k < ks) w_a = spec.weight.phi_prime((u - s) / (us - s)) / (us - s);
      else w_b = spec.weight.phi_prime((u - us) / (t - us)) / (t - us);
    }
    const double w2 = split ? w_a : w_full;
    if (k == ks && split) {
      j_split = st.J;
      st2.reset(st.x, Order::tangent);
    }
    if (w_full != 0 || w_a != 0 || w_b != 0) {
      const WeightMatrices& wm = weights.at(u, st.x);
      z.noalias() = wm.inv_sqrt * dwv;
      if (w_full != 0) tau.noalias() += w_full * (st.J * z);
      if (w_a != 0) tau_a.noalias() += w_a * (st.J * z);
      if (w_b != 0) tau_b.noalias() += w_b * (st2.J * z);
      if (want_hessian && w2 != 0) {
        VectorXd term = st.H * z;
        if (!weights.constant()) {
          otimes(st.J, st.J, jj);
          term.noalias() += jj * (wm.grad * dwv);
        }
        tau2 += w2 * term;
      }
    }
    stepper.step(u, h, grid.increments.row(k), st, order);
    if (split && k >= ks) stepper2.step(u, h, grid.increments.row(k), st2, Order::tangent);
    if (stepper.exploded(st)) {
      BelSample bad;
      bad.diverged = true;
      return bad;
    }
  }
  BelSample out;
  const double fx = f.value(st.x);
  out.gradient = fx * tau;
  if (want_hessian) {
    if (split) {
      out.hessian = fx * (unvec(tau2, d) + (j_split * tau_b) * tau_a.transpose());
    } else {
      if (!f.gradient) throw std::invalid_argument("gradient-form Hessian needs f.gradient");
      out.hessian = fx * unvec(tau2, d) + (st.J * f.gradient(st.x)) * tau.transpose();
    }
  }
  return out;
}

namespace {

struct BelAggregate {
  std::vector<BelSample> samples;
  Index divergent = 0;
};

BelAggregate run_bel(const Model<double>& model, const Observable& f, double s, double t,
                     const VectorXd& x, const BelSpec& spec, bool want_hessian) {
  if (spec.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const Index n = steps_for(t - s, spec.h, "mesh.h");
  BelAggregate agg;
  agg.samples.resize(spec.paths);
  parallel_for(spec.paths, spec.exec.threads, [&](Index i) {
    const BrownianGrid grid =
        sample_brownian(spec.seed, static_cast<std::uint64_t>(i), s, t, n, model.noise_dim());
    agg.samples[i] = bel_sample(model, f, grid, x, spec, want_hessian);
  });
  for (const auto& smp : agg.samples) agg.divergent += smp.diverged ? 1 : 0;
  if (agg.divergent == spec.paths)
    throw EstimationError("all BEL paths diverged", agg.divergent);
  return agg;
}

}  // namespace

GradientEstimate bel_gradient(const Model<double>& model, const Observable& f, double s,
                              double t, const VectorXd& x, const BelSpec& spec) {
  const BelAggregate agg = run_bel(model, f, s, t, x, spec, false);
  const Index d = model.state_dim();
  GradientEstimate out;
  out.value.resize(d);
  out.std_error.resize(d);
  out.divergent = agg.divergent;
  for (Index i = 0; i < d; ++i) {
    std::vector<double> v;
    for (const auto& smp : agg.samples)
      if (!smp.diverged) v.push_back(smp.gradient(i));
    const auto st = sample_stats(v);
    out.value(i) = st.mean;
    out.std_error(i) = st.std_error;
    out.samples = static_cast<Index>(v.size());
  }
  return out;
}

HessianEstimate bel_hessian(const Model<double>& model, const Observable& f, double s, double t,
                            const VectorXd& x, const BelSpec& spec) {
  const BelAggregate agg = run_bel(model, f, s, t, x, spec, true);
  const Index d = model.state_dim();
  HessianEstimate out;
  out.value.resize(d, d);
  out.std_error.resize(d, d);
  out.divergent = agg.divergent;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      std::vector<double> v;
      for (const auto& smp : agg.samples)
        if (!smp.diverged) v.push_back(smp.hessian(i, j));
      const auto st = sample_stats(v);
      out.value(i, j) = st.mean;
      out.std_error(i, j) = st.std_error;
      out.samples = static_cast<Index>(v.size());
    }
  return out;
}

double SemigroupResult::combined_stderr() const {
  return std::sqrt(lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr);
}

namespace {

// Nested BEL estimate of (Delta b . grad + 1/2 Delta a : grad^2) P_{u,t} f at y.
double generator_difference(const ModelPair<double>& pair, const Observable& f, double u,
                            double t, const VectorXd& y, Index steps, Index inner,
                            std::uint64_t seed, std::uint64_t parent, Index node,
                            const BelSpec& bel) {
  const auto delta = delta_eval(pair, u, y);
  const bool need_hess = delta.da.cwiseAbs().maxCoeff() != 0.0;
  const bool need_grad = delta.db.cwiseAbs().maxCoeff() != 0.0;
  if (!need_hess && !need_grad) return 0.0;
  const Index d = pair.state_dim();
  VectorXd g = VectorXd::Zero(d);
  MatrixXd H = MatrixXd::Zero(d, d);
  Index used = 0;
  for (Index l = 0; l < inner; ++l) {
    const BrownianGrid grid =
        sample_brownian(seed, inner_stream(parent, node, l), u, t, steps, pair.noise_dim());
    const BelSample smp = bel_sample(pair.base(), f, grid, y, bel, need_hess);
    if (smp.diverged) continue;
    g += smp.gradient;
    if (need_hess) H += smp.hessian;
    ++used;
  }
  if (used == 0) throw EstimationError("all inner BEL paths diverged", inner);
  g /= static_cast<double>(used);
  H /= static_cast<double>(used);
  double v = g.dot(delta.db);
  if (need_hess) v += 0.5 * (H.array() * delta.da.array()).sum();
  return v;
}

}  // namespace

SemigroupResult semigroup_difference(const ModelPair<double>& pair, const Observable& f,
                                     double s, double t, const VectorXd& x,
                                     const SemigroupSpec& spec) {
  if (spec.outer < 2) throw ConfigError("semigroup.outer", "need at least 2 outer paths");
  if (spec.inner < 1) throw ConfigError("semigroup.inner", "need at least 1 inner path");
  if (spec.lhs_paths < 2) throw ConfigError("semigroup.lhs_paths", "need at least 2 paths");
  if (spec.nodes < 1) throw ConfigError("semigroup.nodes", "need at least one node");
  const Index n = steps_for(t - s, spec.h, "mesh.h");
  const Index K = spec.nodes;
  if (n % (2 * K) != 0)
    throw ConfigError("semigroup.nodes", "fine steps must be a multiple of 2 * nodes");
  std::vector<Index> idx(K);
  double inner_steps = 0;
  for (Index j = 0; j < K; ++j) {
    idx[j] = (2 * j + 1) * n / (2 * K);
    inner_steps += static_cast<double>(n - idx[j]);
  }
  SemigroupResult res;
  res.outer = spec.outer;
  res.inner = spec.inner;
  res.nodes = spec.nodes;
  res.cost = static_cast<double>(spec.outer) * static_cast<double>(spec.inner) * inner_steps +
             static_cast<double>(spec.lhs_paths) * static_cast<double>(n);
  if (res.cost > spec.budget)
    throw BudgetError("semigroup_difference: cost " + std::to_string(res.cost) +
                      " step evaluations exceeds budget " + std::to_string(spec.budget));

  const Index r = pair.noise_dim();
  std::vector<double> lhs(spec.lhs_paths, 0.0);
  std::vector<char> lhs_bad(spec.lhs_paths, 0);
  parallel_for(spec.lhs_paths, spec.exec.threads, [&](Index i) {
    const BrownianGrid grid = sample_brownian(spec.seed, lhs_stream(i), s, t, n, r);
    EulerStepper<double> a(pair.base()), b(pair.perturbed());
    VariationalState<double> sa, sb;
    sa.reset(x, Order::flow);
    sb.reset(x, Order::flow);
    a.propagate(grid, 0, n, sa, Order::flow);
    b.propagate(grid, 0, n, sb, Order::flow);
    if (sa.diverged || sb.diverged) {
      lhs_bad[i] = 1;
      return;
    }
    lhs[i] = f.value(sa.x) - f.value(sb.x);
  });

  BelSpec bel;
  bel.h = spec.h;
  bel.weight = spec.weight;
  bel.eigen_floor = spec.eigen_floor;
  bel.seed = spec.seed;
  const double dt = (t - s) / static_cast<double>(K);
  std::vector<double> rhs(spec.outer, 0.0);
  std::vector<char> rhs_bad(spec.outer, 0);
  parallel_for(spec.outer, spec.exec.threads, [&](Index i) {
    const std::uint64_t id = outer_stream(i);
    const BrownianGrid grid = sample_brownian(spec.seed, id, s, t, n, r);
    EulerStepper<double> pert(pair.perturbed());
    VariationalState<double> ps;
    ps.reset(x, Order::flow);
    Index at = 0;
    double total = 0;
    for (Index j = 0; j < K; ++j) {
      pert.propagate(grid, at, idx[j], ps, Order::flow);
      at = idx[j];
      if (ps.diverged) {
        rhs_bad[i] = 1;
        return;
      }
      total += generator_difference(pair, f, grid.time(idx[j]), t, ps.x, n - idx[j], spec.inner,
                                    spec.seed, id, j, bel) *
               dt;
    }
    rhs[i] = total;
  });

  auto filtered = [](const std::vector<double>& v, const std::vector<char>& bad) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!bad[i]) out.push_back(v[i]);
    return out;
  };
  const auto l = sample_stats(filtered(lhs, lhs_bad));
  const auto rr = sample_stats(filtered(rhs, rhs_bad));
  res.lhs = l.mean;
  res.lhs_stderr = l.std_error;
  res.rhs = rr.mean;
  res.rhs_stderr = rr.std_error;
  return res;
}

InvariantResult invariant_shift(const ModelPair<double>& pair, const Observable& f,
                                const InvariantSpec& spec) {
  if (spec.samples < 2) throw ConfigError("invariant.samples", "need at least 2 samples");
  const auto base_rep = condition_report(pair.base(), spec.conditions, {2});
  const auto pert_rep = condition_report(pair.perturbed(), spec.conditions, {2});
  if (!base_rep.T(2) || !pert_rep.T(2))
    throw ConditionError("invariant_shift: ergodicity condition (T)_2 fails (lambda_A = " +
                         std::to_string(base_rep.lambda_A) + " / " +
                         std::to_string(pert_rep.lambda_A) + ")");
  InvariantResult res;
  res.lambda_A = base_rep.lambda_A;
  res.horizon = spec.horizon > 0 ? spec.horizon : 5.0 / base_rep.lambda_A;
  if (std::exp(-base_rep.lambda_A * res.horizon) >= 0.01)
    throw ConditionError("invariant_shift: horizon too short for the contraction rate");
  const Index burn = std::max<Index>(1, static_cast<Index>(std::llround(spec.burn_in / spec.h)));
  const Index K = spec.nodes;
  const double dt = res.horizon / static_cast<double>(K);
  const Index r = pair.noise_dim(), d = pair.state_dim();
  BelSpec bel;
  bel.weight = spec.weight;
  bel.eigen_floor = spec.eigen_floor;
  std::vector<double> vals(spec.samples, 0.0);
  parallel_for(spec.samples, spec.exec.threads, [&](Index i) {
    const std::uint64_t id =
        derive_stream(static_cast<std::uint64_t>(i), 0, stream_tag::sample);
    const BrownianGrid grid = sample_brownian(spec.seed, id, 0.0, spec.burn_in, burn, r);
    EulerStepper<double> pert(pair.perturbed());
    VariationalState<double> ps;
    ps.reset(VectorXd::Zero(d), Order::flow);
    pert.propagate(grid, 0, burn, ps, Order::flow);
    if (ps.diverged) throw EstimationError("invariant_shift: burn-in diverged", 1);
    double total = 0;
    for (Index j = 0; j < K; ++j) {
      const double u = (static_cast<double>(j) + 0.5) * dt;
      const Index steps = std::max<Index>(1, static_cast<Index>(std::llround(u / spec.h)));
      BelSpec b = bel;
      b.h = u / static_cast<double>(steps);
      total += generator_difference(pair, f, 0.0, u, ps.x, steps, spec.inner, spec.seed, id, j, b) *
               dt;
    }
    vals[i] = total;
  });
  const auto st = sample_stats(vals);
  res.value = st.mean;
  res.std_error = st.std_error;
  res.samples = spec.samples;
  return res;
}

}  // namespace flowlab
