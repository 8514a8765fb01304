#include "flowlab/oracle.hpp"

#include "flowlab/catalog.hpp"

#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowlab {

namespace {

// (1 - e^{-c tau}) / c, continuous at c = 0
double relax(double c, double tau) {
  if (c == 0.0) return tau;
  return -std::expm1(-c * tau) / c;
}

double double_factorial_odd(int k) {
  double v = 1;
  for (int i = k; i > 1; i -= 2) v *= i;
  return v;
}

double binomial(int n, int k) {
  double v = 1;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

}  // namespace

std::optional<LinearOracle> LinearOracle::from_model(const Model<double>& model) {
  if (auto ou = dynamic_cast<const OrnsteinUhlenbeck<double>*>(&model)) {
    const MatrixXd& s = ou->sigma();
    if (s.rows() != s.cols()) return std::nullopt;
    if ((s - s(0, 0) * MatrixXd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff() != 0.0)
      return std::nullopt;
    return LinearOracle::ou(ou->rate(), s(0, 0), s.rows());
  }
  if (auto g = dynamic_cast<const GeometricBrownian<double>*>(&model))
    return LinearOracle::gbm(g->beta(), g->alpha());
  return std::nullopt;
}

double ou_zeta(double lambda, double h) {
  if (lambda == 0.0) return 1.0;
  return std::sqrt(relax(2 * lambda, h) / h);
}

FlowPath<double> oracle_flow(const LinearOracle& oracle, const BrownianGrid& grid,
                             const VectorXd& x) {
  if (x.size() != oracle.dim) throw DimensionError("oracle_flow: state dimension mismatch");
  if (oracle.kind == OracleKind::ou && grid.noise_dim() != oracle.dim)
    throw DimensionError("oracle_flow: OU oracle needs r = d");
  FlowPath<double> out;
  out.states.resize(grid.steps + 1, oracle.dim);
  const double h = grid.step();
  VectorXd cur = x;
  out.states.row(0) = cur.transpose();
  if (oracle.kind == OracleKind::ou) {
    const double decay = std::exp(-oracle.rate * h);
    const double weight = oracle.sigma * ou_zeta(oracle.rate, h);
    for (Index k = 0; k < grid.steps; ++k) {
      for (Index i = 0; i < oracle.dim; ++i)
        cur(i) = decay * cur(i) + weight * grid.increments(k, i);
      out.states.row(k + 1) = cur.transpose();
    }
  } else {
    const double drift = (oracle.rate - 0.5 * oracle.sigma * oracle.sigma) * h;
    for (Index k = 0; k < grid.steps; ++k) {
      cur(0) *= std::exp(drift + oracle.sigma * grid.increments(k, 0));
      out.states.row(k + 1) = cur.transpose();
    }
  }
  return out;
}

MatrixXd oracle_tangent(const LinearOracle& oracle, double s, double t, const VectorXd& x,
                        const VectorXd& x_t) {
  if (oracle.kind == OracleKind::ou)
    return std::exp(-oracle.rate * (t - s)) * MatrixXd::Identity(oracle.dim, oracle.dim);
  if (x(0) == 0.0) throw std::invalid_argument("oracle_tangent: GBM tangent needs x != 0");
  return MatrixXd::Constant(1, 1, x_t(0) / x(0));
}

double oracle_second_moment(const LinearOracle& oracle, double s, double t, const VectorXd& x) {
  const double tau = t - s;
  if (oracle.kind == OracleKind::ou)
    return x.squaredNorm() * std::exp(-2 * oracle.rate * tau) +
           oracle.dim * oracle.sigma * oracle.sigma * relax(2 * oracle.rate, tau);
  return x(0) * x(0) * std::exp((2 * oracle.rate + oracle.sigma * oracle.sigma) * tau);
}

double oracle_tangent_moment(const LinearOracle& oracle, int n, double s, double t) {
  const double tau = t - s;
  if (oracle.kind == OracleKind::ou)
    return std::sqrt(static_cast<double>(oracle.dim)) * std::exp(-oracle.rate * tau);
  const double a2 = oracle.sigma * oracle.sigma;
  return std::exp((oracle.rate - 0.5 * a2 + 0.5 * n * a2) * tau);
}

GaussianDifference oracle_difference_law(const LinearOracle& a, const LinearOracle& b, double s,
                                         double t, const VectorXd& x) {
  if (a.kind != OracleKind::ou || b.kind != OracleKind::ou)
    throw std::invalid_argument("oracle_difference_law: only OU pairs have a closed form");
  if (a.dim != b.dim || x.size() != a.dim)
    throw DimensionError("oracle_difference_law: dimension mismatch");
  const double tau = t - s;
  GaussianDifference out;
  out.mean = x * (std::exp(-a.rate * tau) - std::exp(-b.rate * tau));
  out.variance = a.sigma * a.sigma * relax(2 * a.rate, tau) +
                 b.sigma * b.sigma * relax(2 * b.rate, tau) -
                 2 * a.sigma * b.sigma * relax(a.rate + b.rate, tau);
  out.variance = std::max(0.0, out.variance);
  return out;
}

double gaussian_abs_moment(const VectorXd& mean, double variance, int n) {
  if (n < 1) throw std::invalid_argument("gaussian_abs_moment: n must be >= 1");
  const Index d = mean.size();
  if (variance == 0.0) return std::pow(mean.norm(), n);
  if (d == 1) {
    const double mu = mean(0);
    if (n % 2 == 0) {
      double sum = 0;
      for (int k = 0; 2 * k <= n; ++k)
        sum += binomial(n, 2 * k) * std::pow(mu, n - 2 * k) * std::pow(variance, k) *
               double_factorial_odd(2 * k - 1);
      return sum;
    }
    const double sd = std::sqrt(variance);
    return std::pow(sd, n) * std::pow(2.0, 0.5 * n) * std::tgamma(0.5 * (n + 1)) /
           std::sqrt(std::numbers::pi) *
           boost::math::hypergeometric_1F1(-0.5 * n, 0.5, -mu * mu / (2 * variance));
  }
  if (mean.isZero(0.0))
    return std::pow(2 * variance, 0.5 * n) *
           std::exp(std::lgamma(0.5 * (d + n)) - std::lgamma(0.5 * d));
  if (n == 2) return mean.squaredNorm() + d * variance;
  throw std::invalid_argument("gaussian_abs_moment: unsupported configuration (d > 1, mean != 0, n != 2)");
}

double oracle_difference_moment(const LinearOracle& a, const LinearOracle& b, int n, double s,
                                double t, const VectorXd& x) {
  const GaussianDifference law = oracle_difference_law(a, b, s, t, x);
  return std::pow(gaussian_abs_moment(law.mean, law.variance, n), 1.0 / n);
}

}  // namespace flowlab
