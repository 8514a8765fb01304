#include "flowlab/regularity.hpp"

#include "flowlab/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowlab {

std::vector<VectorXd> sample_points(const SampleSpec& spec, Index d) {
  if (spec.count < 1) throw std::invalid_argument("sample spec needs count >= 1");
  std::vector<VectorXd> pts;
  if (d <= 10) {
    const Index corners = Index(1) << d;
    for (Index c = 0; c < corners; ++c) {
      VectorXd p(d);
      for (Index i = 0; i < d; ++i) p(i) = (c >> i) & 1 ? spec.hi : spec.lo;
      pts.push_back(p);
    }
  }
  pts.push_back(VectorXd::Zero(d));
  Substream rng(spec.seed, derive_stream(spec.seed, 0, stream_tag::sample));
  for (Index k = 0; k < spec.count; ++k) {
    VectorXd p(d);
    for (Index i = 0; i < d; ++i) p(i) = spec.lo + (spec.hi - spec.lo) * rng.uniform();
    pts.push_back(p);
  }
  return pts;
}

MatrixXd log_norm_matrix(const Model<double>& model, double t, const VectorXd& x) {
  const auto bundle = eval_derivatives(model, t, x);
  MatrixXd a = bundle.drift_grad + bundle.drift_grad.transpose();
  for (const auto& g : bundle.diffusion_grad) a.noalias() += g * g.transpose();
  MatrixXd sym = (a + a.transpose()) / 2.0;
  for (Index i = 0; i < sym.rows(); ++i)
    for (Index j = i + 1; j < sym.cols(); ++j) sym(j, i) = sym(i, j);
  return sym;
}

LambdaEstimate estimate_lambda_A(const Model<double>& model, const SampleSpec& spec) {
  LambdaEstimate out;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : sample_points(spec, model.state_dim())) {
    const double top = log_norm(log_norm_matrix(model, spec.t, p));
    if (top > worst) {
      worst = top;
      out.argmax = p;
    }
  }
  out.lambda_A = -0.5 * worst;
  return out;
}

double lambda_A_n(double lambda_A, double rho_star, Index d, int n) {
  return lambda_A - static_cast<double>(d) * (n - 2) * rho_star * rho_star / 2.0;
}

KappaResult kappa_n(const GrowthParameters& p, int n) {
  if (n < 2) throw std::invalid_argument("kappa_n needs n >= 2");
  KappaResult out;
  out.beta2_n = p.beta2 - (n - 1) * p.alpha2 / 2.0;
  if (!(out.beta2_n > 0)) {
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    out.satisfied = false;
    return out;
  }
  const double gamma0 = p.alpha0 + 2 * p.beta0;
  const double gamma1 = p.alpha1 + 2 * p.beta1;
  const double g0 = gamma0 + (n - 2) * p.alpha0;
  if (g0 < 0) {
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.kappa = 1 + ((gamma1 + (n - 2) * p.alpha1) + std::sqrt(g0)) / (2 * std::sqrt(out.beta2_n));
  out.satisfied = true;
  return out;
}

DiffusionGradientBounds diffusion_gradient_bounds(const Model<double>& model,
                                                  const SampleSpec& spec) {
  const Index d = model.state_dim(), r = model.noise_dim();
  std::vector<double> rho(r, -std::numeric_limits<double>::infinity());
  MatrixXd g(d, d);
  for (const auto& p : sample_points(spec, d))
    for (Index k = 0; k < r; ++k) {
      model.diffusion_grad(spec.t, p, k, g);
      rho[k] = std::max(rho[k], log_norm(g));
    }
  DiffusionGradientBounds out;
  out.rho_star = -std::numeric_limits<double>::infinity();
  for (double v : rho) {
    out.rho_star = std::max(out.rho_star, v);
    out.rho_sq += v * v;
  }
  return out;
}

SecondDerivativeBounds second_derivative_bounds(const Model<double>& model,
                                                const SampleSpec& spec) {
  const Index d = model.state_dim(), r = model.noise_dim();
  SecondDerivativeBounds out;
  Tensor21<double> t(d * d, d);
  for (const auto& p : sample_points(spec, d)) {
    model.drift_hess(spec.t, p, t);
    out.drift_hess = std::max(out.drift_hess, t.norm());
    double s = 0;
    for (Index k = 0; k < r; ++k) {
      model.diffusion_hess(spec.t, p, k, t);
      s += t.squaredNorm();
    }
    out.diffusion_hess = std::max(out.diffusion_hess, std::sqrt(s));
  }
  return out;
}

double chi(const Model<double>& model, const SampleSpec& spec, double c) {
  const auto second = second_derivative_bounds(model, spec);
  const auto rho = diffusion_gradient_bounds(model, spec);
  return c + second.drift_hess + second.diffusion_hess * second.diffusion_hess +
         rho.rho_star * rho.rho_star;
}

double sigma_bound_from_a(double a_norm_diff, double upsilon) {
  if (!(upsilon > 0)) throw std::invalid_argument("sigma_bound_from_a needs upsilon > 0");
  return a_norm_diff / std::sqrt(upsilon);
}

bool ConditionReport::T(int n) const {
  for (const auto& o : orders)
    if (o.n == n) return o.T_n;
  return lambda_A > 0 && lambda_A_n(lambda_A, rho_star, dim, n) > 0;
}

ConditionReport condition_report(const Model<double>& model, const SampleSpec& spec,
                                 const std::vector<int>& orders, double chi_constant) {
  ConditionReport rep;
  rep.model = model.name();
  rep.dim = model.state_dim();
  const auto lam = estimate_lambda_A(model, spec);
  rep.lambda_A = lam.lambda_A;
  rep.argmax = lam.argmax;
  const auto rho = diffusion_gradient_bounds(model, spec);
  rep.rho_star = rho.rho_star;
  rep.rho_sq = rho.rho_sq;
  const auto second = second_derivative_bounds(model, spec);
  rep.drift_hess_sup = second.drift_hess;
  rep.chi_constant = chi_constant;
  rep.chi = chi_constant + second.drift_hess + second.diffusion_hess * second.diffusion_hess +
            rho.rho_star * rho.rho_star;
  const auto pts = sample_points(spec, model.state_dim());
  rep.samples = static_cast<Index>(pts.size());
  rep.min_a_eigenvalue = std::numeric_limits<double>::infinity();
  MatrixXd sig(model.state_dim(), model.noise_dim());
  for (const auto& p : pts) {
    model.diffusion(spec.t, p, sig);
    MatrixXd a = sig * sig.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
    rep.min_a_eigenvalue = std::min(rep.min_a_eigenvalue, es.eigenvalues().minCoeff());
  }
  rep.growth = model.metadata().growth;
  for (int n : orders) {
    ConditionReport::PerOrder o;
    o.n = n;
    o.lambda_A_n = lambda_A_n(rep.lambda_A, rep.rho_star, rep.dim, n);
    o.T_n = rep.lambda_A > 0 && o.lambda_A_n > 0;
    if (rep.growth && n >= 2) o.kappa = kappa_n(*rep.growth, n);
    rep.orders.push_back(o);
  }
  return rep;
}

}  // namespace flowlab
