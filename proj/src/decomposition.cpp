#include "flowlab/interpolation.hpp"

#include <cmath>

namespace flowlab {

namespace {

struct Scalar1D {
  double value;
  double grad;
};

Scalar1D diffusion_1d(const Model<double>& m, double t, double x) {
  VectorXd p(1);
  p(0) = x;
  MatrixXd s(1, 1), g(1, 1);
  m.diffusion(t, p, s);
  m.diffusion_grad(t, p, 0, g);
  return {s(0, 0), g(0, 0)};
}

struct Restart {
  double x, J, H;
  bool diverged;
};

Restart run(EulerStepper<double>& stepper, const BrownianGrid& grid, Index from, Index to,
            double y, Order order) {
  VariationalState<double> s;
  VectorXd p(1);
  p(0) = y;
  s.reset(p, order);
  stepper.propagate(grid, from, to, s, order);
  return {s.x(0), order >= Order::tangent ? s.J(0, 0) : 1.0,
          order >= Order::hessian ? s.H(0, 0) : 0.0, s.diverged};
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0;
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

double skorohod_cross_term_path(const ModelPair<double>& pair, const BrownianGrid& grid,
                                const VectorXd& x, int cross_nodes) {
  const Model<double>& base = pair.base();
  const Model<double>& pert = pair.perturbed();
  const Index n = grid.steps;
  const Index K = std::max<Index>(1, std::min<Index>(cross_nodes, n));
  std::vector<Index> idx(K + 1);
  std::vector<double> tv(K + 1), w(K + 1, 0.0);
  for (Index a = 0; a <= K; ++a) {
    idx[a] = a * n / K;
    tv[a] = grid.time(idx[a]);
  }
  for (Index a = 0; a <= K; ++a) {
    if (a > 0) w[a] += 0.5 * (tv[a] - tv[a - 1]);
    if (a < K) w[a] += 0.5 * (tv[a + 1] - tv[a]);
  }

  EulerStepper<double> bstep(base), pstep(pert);
  // perturbed flow and tangent at the coarse nodes
  std::vector<double> y(K + 1), jy(K + 1);
  {
    VariationalState<double> s;
    s.reset(x, Order::tangent);
    y[0] = s.x(0);
    jy[0] = 1.0;
    for (Index a = 0; a < K; ++a) {
      pstep.propagate(grid, idx[a], idx[a + 1], s, Order::tangent);
      if (s.diverged) return std::numeric_limits<double>::quiet_NaN();
      y[a + 1] = s.x(0);
      jy[a + 1] = s.J(0, 0);
    }
  }
  // backward objects restarted from Ybar at each coarse node
  std::vector<Restart> back(K + 1);
  for (Index a = 0; a <= K; ++a) {
    back[a] = run(bstep, grid, idx[a], n, y[a], Order::hessian);
    if (back[a].diverged) return std::numeric_limits<double>::quiet_NaN();
  }
  double total = 0;
  for (Index a = 0; a <= K; ++a) {
    const double ta = tv[a];
    const Scalar1D sig_b_a = diffusion_1d(base, ta, y[a]);
    const Scalar1D sig_p_a = diffusion_1d(pert, ta, y[a]);
    const double vs_a = sig_b_a.value - sig_p_a.value;
    for (Index b = a; b <= K; ++b) {
      const double tb = tv[b];
      const Scalar1D sig_b_b = diffusion_1d(base, tb, y[b]);
      const Scalar1D sig_p_b = diffusion_1d(pert, tb, y[b]);
      const double vs_b = sig_b_b.value - sig_p_b.value;
      const double vs_b_grad = sig_b_b.grad - sig_p_b.grad;
      // forward derivative of the integrand at tb with respect to the noise at ta
      const double p1 = (jy[b] / jy[a]) * (back[b].H * vs_b + back[b].J * vs_b_grad) *
                        sig_p_a.value;
      // backward derivative of the integrand at ta with respect to the noise at tb
      double p2;
      if (a == b) {
        p2 = (back[a].H * sig_b_a.value + back[a].J * sig_b_a.grad) * vs_a;
      } else {
        const Restart z = run(bstep, grid, idx[a], idx[b], y[a], Order::tangent);
        const Restart tail = run(bstep, grid, idx[b], n, z.x, Order::hessian);
        if (z.diverged || tail.diverged) return std::numeric_limits<double>::quiet_NaN();
        const Scalar1D sig_z = diffusion_1d(base, tb, z.x);
        p2 = z.J * (tail.H * sig_z.value + tail.J * sig_z.grad) * vs_a;
      }
      total += (a == b ? 1.0 : 2.0) * w[a] * w[b] * p1 * p2;
    }
  }
  return total;
}

VarianceReport skorohod_variance_1d(const ModelPair<double>& pair, const VarianceSpec& spec,
                                    double s, double t, const VectorXd& x) {
  if (pair.state_dim() != 1 || pair.noise_dim() != 1)
    throw DimensionError("skorohod_variance_1d requires d = r = 1");
  if (spec.paths < 2) throw ConfigError("mc.paths", "need at least 2 paths");
  const ModelTraits bt = pair.base().traits();
  // D_v of the integrand vanishes when the base flow has constant tangent dynamics
  const bool forced_zero = bt.constant_diffusion && bt.linear;
  const Index M = spec.paths;
  std::vector<double> S(M), diag(M), cross(M, 0.0);
  std::vector<char> bad(M, 0);
  DecompositionOptions opt;
  opt.t_term = false;
  opt.sigma_diagonal = true;
  parallel_for(M, spec.exec.threads, [&](Index i) {
    const BrownianGrid grid =
        sample_brownian(spec.seed, static_cast<std::uint64_t>(i), s, t, spec.fine_steps, 1);
    const auto work = decompose_path(pair, grid, x, spec.stride, opt);
    if (work.report.diverged) {
      bad[i] = 1;
      return;
    }
    S[i] = work.report.s_hat(0);
    diag[i] = work.sigma_diagonal;
    if (!forced_zero) {
      cross[i] = skorohod_cross_term_path(pair, grid, x, spec.cross_nodes);
      if (!std::isfinite(cross[i])) bad[i] = 1;
    }
  });
  std::vector<double> s_ok, d_ok, c_ok;
  for (Index i = 0; i < M; ++i)
    if (!bad[i]) {
      s_ok.push_back(S[i]);
      d_ok.push_back(diag[i]);
      c_ok.push_back(cross[i]);
    }
  VarianceReport rep;
  rep.samples = static_cast<Index>(s_ok.size());
  rep.divergent = M - rep.samples;
  if (rep.samples < 2) throw EstimationError("skorohod_variance_1d: all paths diverged", rep.divergent);
  const double n = static_cast<double>(rep.samples);
  rep.s_mean = mean_of(s_ok);
  rep.s_mean_stderr = stderr_of(s_ok, rep.s_mean);
  std::vector<double> sq(s_ok.size()), paired(s_ok.size()), tot(s_ok.size());
  for (std::size_t i = 0; i < s_ok.size(); ++i) {
    sq[i] = (s_ok[i] - rep.s_mean) * (s_ok[i] - rep.s_mean);
    tot[i] = d_ok[i] + c_ok[i];
  }
  rep.empirical_variance = mean_of(sq) * n / (n - 1);
  rep.mc_stderr = stderr_of(sq, mean_of(sq)) * n / (n - 1);
  rep.diagonal_term = mean_of(d_ok);
  rep.diagonal_stderr = stderr_of(d_ok, rep.diagonal_term);
  rep.cross_forced_zero = forced_zero;
  rep.cross_term = forced_zero ? 0.0 : mean_of(c_ok);
  rep.cross_stderr = forced_zero ? 0.0 : stderr_of(c_ok, rep.cross_term);
  rep.total = rep.diagonal_term + rep.cross_term;
  for (std::size_t i = 0; i < s_ok.size(); ++i) paired[i] = sq[i] * n / (n - 1) - tot[i];
  rep.paired_stderr = stderr_of(paired, mean_of(paired));
  return rep;
}

}  // namespace flowlab
