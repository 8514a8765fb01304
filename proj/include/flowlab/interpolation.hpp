#pragma once

#include "flowlab/brownian.hpp"
#include "flowlab/model.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/paths.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace flowlab {

struct NodeContribution {
  Index node = 0;   // fine index of u
  double u = 0;
  VectorXd t_part;
  VectorXd s_part;
};

template <typename Scalar>
struct DecompositionReport {
  Vector<Scalar> lhs;
  Vector<Scalar> t_hat;
  Vector<Scalar> s_hat;
  Vector<Scalar> residual;
  Index estimator_steps = 0;
  Index fine_steps = 0;
  double H = 0;
  double h = 0;
  bool diverged = false;
  std::vector<NodeContribution> nodes;
};

struct DecompositionOptions {
  bool t_term = true;
  bool s_term = true;
  bool keep_nodes = false;
  bool sigma_diagonal = false;  // accumulate sum_u ||Sigma_{s,u,t}||_F^2 H
  double cap = default_explosion_cap;
};

template <typename Scalar>
struct DecompositionWork {
  DecompositionReport<Scalar> report;
  double sigma_diagonal = 0;
};

inline Index estimator_stride(const BrownianGrid& grid, double H) {
  const Index m = mesh_ratio(H, grid.step(), "mesh.H");
  if (grid.steps % m != 0)
    throw ConfigError("mesh.H", "estimator mesh does not divide the horizon");
  return m;
}

namespace detail {

template <typename Scalar>
bool is_zero(const Matrix<Scalar>& m) {
  return m.cwiseAbs().maxCoeff() == Scalar(0);
}

}  // namespace detail

// Per-path decomposition X - Xbar = T + S + residual with estimator stride m (H = m h).
template <typename Scalar>
DecompositionWork<Scalar> decompose_path(const ModelPair<Scalar>& pair, const BrownianGrid& grid,
                                         const Vector<Scalar>& x, Index m,
                                         const DecompositionOptions& opt = {}) {
  const Model<Scalar>& base = pair.base();
  check_state<Scalar>(base, x, grid);
  check_state<Scalar>(pair.perturbed(), x, grid);
  if (m < 1 || grid.steps % m != 0)
    throw ConfigError("mesh.H", "estimator stride must divide the fine step count");
  const Index d = pair.state_dim(), r = pair.noise_dim();
  const Index n = grid.steps, N = n / m;
  const Scalar Hs = Scalar(grid.step() * static_cast<double>(m));
  const bool linear = base.traits().linear;

  DecompositionWork<Scalar> work;
  auto& rep = work.report;
  rep.estimator_steps = N;
  rep.fine_steps = n;
  rep.h = grid.step();
  rep.H = grid.step() * static_cast<double>(m);
  rep.t_hat = Vector<Scalar>::Zero(d);
  rep.s_hat = Vector<Scalar>::Zero(d);

  EulerStepper<Scalar> base_stepper(base, Scalar(opt.cap));
  EulerStepper<Scalar> pert_stepper(pair.perturbed(), Scalar(opt.cap));

  // perturbed path at the estimator nodes
  std::vector<Vector<Scalar>> ybar(N + 1);
  VariationalState<Scalar> ps;
  ps.reset(x, Order::flow);
  ybar[0] = ps.x;
  for (Index j = 0; j < N; ++j) {
    pert_stepper.propagate(grid, j * m, (j + 1) * m, ps, Order::flow);
    ybar[j + 1] = ps.x;
  }
  VariationalState<Scalar> bs;
  bs.reset(x, Order::flow);
  base_stepper.propagate(grid, 0, n, bs, Order::flow);
  if (ps.diverged || bs.diverged) {
    rep.diverged = true;
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    rep.lhs = rep.t_hat = rep.s_hat = rep.residual = Vector<Scalar>::Constant(d, nan);
    work.sigma_diagonal = std::numeric_limits<double>::quiet_NaN();
    return work;
  }
  rep.lhs = bs.x - ps.x;

  DeltaValues<Scalar> delta;
  Vector<Scalar> sb;
  Matrix<Scalar> ss;
  Vector<Scalar> dw(r);
  VariationalState<Scalar> rs;
  for (Index j = 0; j < N && !rep.diverged; ++j) {
    const Index k = j * m;
    const Scalar u = Scalar(grid.time(k));
    delta_eval_into(pair, u, ybar[j], delta, sb, ss);
    const bool db_zero = detail::is_zero<Scalar>(delta.db);
    const bool da_zero = detail::is_zero<Scalar>(delta.da);
    const bool ds_zero = detail::is_zero<Scalar>(delta.dsigma);
    NodeContribution node;
    if (opt.keep_nodes) {
      node.node = k;
      node.u = double(u);
      node.t_part = VectorXd::Zero(d);
      node.s_part = VectorXd::Zero(d);
    }

    const bool need_hess = opt.t_term && !da_zero && !linear;
    const bool need_t = opt.t_term && !(db_zero && (da_zero || linear));
    const bool need_diag = opt.sigma_diagonal && !ds_zero;
    if (need_t || need_diag) {
      const Order order = need_hess ? Order::hessian : Order::tangent;
      rs.reset(ybar[j], order);
      base_stepper.propagate(grid, k, n, rs, order);
      if (rs.diverged) {
        rep.diverged = true;
        break;
      }
      if (need_t) {
        Vector<Scalar> part = rs.J.transpose() * delta.db;
        if (need_hess) part += Scalar(0.5) * contract(rs.H, delta.da);
        part *= Hs;
        rep.t_hat += part;
        if (opt.keep_nodes) node.t_part = part.template cast<double>();
      }
      if (need_diag)
        work.sigma_diagonal +=
            double((rs.J.transpose() * delta.dsigma).squaredNorm()) * double(Hs);
    }

    if (opt.s_term && !ds_zero) {
      dw.setZero();
      for (Index i = k; i < k + m; ++i)
        for (Index c = 0; c < r; ++c) dw(c) += Scalar(grid.increments(i, c));
      rs.reset(ybar[j], Order::tangent);
      base_stepper.propagate(grid, k + m, n, rs, Order::tangent);
      if (rs.diverged) {
        rep.diverged = true;
        break;
      }
      Vector<Scalar> part = rs.J.transpose() * (delta.dsigma * dw);
      rep.s_hat += part;
      if (opt.keep_nodes) node.s_part = part.template cast<double>();
    }
    if (opt.keep_nodes) rep.nodes.push_back(std::move(node));
  }
  if (rep.diverged) {
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    rep.t_hat = rep.s_hat = rep.residual = Vector<Scalar>::Constant(d, nan);
    work.sigma_diagonal = std::numeric_limits<double>::quiet_NaN();
    return work;
  }
  rep.residual = rep.lhs - rep.t_hat - rep.s_hat;
  return work;
}

template <typename Scalar>
DecompositionReport<Scalar> telescoping_decomposition(const ModelPair<Scalar>& pair,
                                                      const BrownianGrid& grid,
                                                      const Vector<Scalar>& x, double H,
                                                      bool keep_nodes = false) {
  DecompositionOptions opt;
  opt.keep_nodes = keep_nodes;
  return decompose_path(pair, grid, x, estimator_stride(grid, H), opt).report;
}

template <typename Scalar>
Vector<Scalar> t_term(const ModelPair<Scalar>& pair, const BrownianGrid& grid,
                      const Vector<Scalar>& x, double H) {
  DecompositionOptions opt;
  opt.s_term = false;
  return decompose_path(pair, grid, x, estimator_stride(grid, H), opt).report.t_hat;
}

template <typename Scalar>
Vector<Scalar> s_term(const ModelPair<Scalar>& pair, const BrownianGrid& grid,
                      const Vector<Scalar>& x, double H) {
  DecompositionOptions opt;
  opt.t_term = false;
  return decompose_path(pair, grid, x, estimator_stride(grid, H), opt).report.s_hat;
}

struct VarianceSpec {
  Index paths = 1024;
  std::uint64_t seed = 0;
  Index fine_steps = 64;
  Index stride = 1;       // estimator mesh H = stride * h
  int cross_nodes = 16;   // coarse grid intervals for the cross term
  ExecPolicy exec;
};

struct VarianceReport {
  double diagonal_term = 0;
  double cross_term = 0;
  double total = 0;
  double empirical_variance = 0;
  double mc_stderr = 0;        // std_error of empirical_variance
  double diagonal_stderr = 0;
  double cross_stderr = 0;
  double paired_stderr = 0;    // std_error of empirical_variance - total on shared paths
  double s_mean = 0;
  double s_mean_stderr = 0;
  bool cross_forced_zero = false;
  Index samples = 0;
  Index divergent = 0;
};

VarianceReport skorohod_variance_1d(const ModelPair<double>& pair, const VarianceSpec& spec,
                                    double s, double t, const VectorXd& x);

// Per-path cross-term integrand sum for the 1D Malliavin correction.
double skorohod_cross_term_path(const ModelPair<double>& pair, const BrownianGrid& grid,
                                const VectorXd& x, int cross_nodes);

}  // namespace flowlab
