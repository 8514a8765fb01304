#pragma once

#include "flowlab/brownian.hpp"
#include "flowlab/model.hpp"
#include "flowlab/paths.hpp"

#include <optional>

namespace flowlab {

enum class OracleKind { ou, gbm };

// Closed forms for b = -rate x, sigma = sigma I (OU) and b = rate x, sigma = sigma x (GBM).
struct LinearOracle {
  OracleKind kind = OracleKind::ou;
  double rate = 0;
  double sigma = 0;
  Index dim = 1;

  static LinearOracle ou(double lambda, double sigma, Index d = 1) {
    return {OracleKind::ou, lambda, sigma, d};
  }
  static LinearOracle gbm(double beta, double alpha) { return {OracleKind::gbm, beta, alpha, 1}; }
  static std::optional<LinearOracle> from_model(const Model<double>& model);
};

// Per-step weight making sigma * zeta(h) * dW match the exact OU transition variance.
double ou_zeta(double lambda, double h);

FlowPath<double> oracle_flow(const LinearOracle& oracle, const BrownianGrid& grid,
                             const VectorXd& x);

// grad X_{s,t}(x) given the oracle flow value at t.
MatrixXd oracle_tangent(const LinearOracle& oracle, double s, double t, const VectorXd& x,
                        const VectorXd& x_t);

// E[|X_{s,t}(x)|^2]
double oracle_second_moment(const LinearOracle& oracle, double s, double t, const VectorXd& x);

// E[||grad X_{s,t}||_F^n]^{1/n}
double oracle_tangent_moment(const LinearOracle& oracle, int n, double s, double t);

struct GaussianDifference {
  VectorXd mean;
  double variance = 0;  // per coordinate, coordinates independent
};

// Law of X_{s,t}(x) - Xbar_{s,t}(x) driven by the same noise (both OU).
GaussianDifference oracle_difference_law(const LinearOracle& a, const LinearOracle& b, double s,
                                         double t, const VectorXd& x);

// E[||Z||^n] for Z with independent N(mean_i, variance) coordinates.
double gaussian_abs_moment(const VectorXd& mean, double variance, int n);

// E[||X - Xbar||^n]^{1/n}
double oracle_difference_moment(const LinearOracle& a, const LinearOracle& b, int n, double s,
                                double t, const VectorXd& x);

}  // namespace flowlab
