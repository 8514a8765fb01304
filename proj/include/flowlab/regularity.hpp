#pragma once

#include "flowlab/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowlab {

// Uniform samples in [lo, hi]^d plus the 2^d box corners (d <= 10).
struct SampleSpec {
  double lo = -5;
  double hi = 5;
  Index count = 256;
  std::uint64_t seed = 1;
  double t = 0;
};

std::vector<VectorXd> sample_points(const SampleSpec& spec, Index d);

// A = grad b + grad b' + sum_k grad sigma_k grad sigma_k'
MatrixXd log_norm_matrix(const Model<double>& model, double t, const VectorXd& x);

struct LambdaEstimate {
  double lambda_A = 0;
  VectorXd argmax;  // sample attaining the largest eigenvalue of A
};

LambdaEstimate estimate_lambda_A(const Model<double>& model, const SampleSpec& spec);

double lambda_A_n(double lambda_A, double rho_star, Index d, int n);

struct KappaResult {
  double beta2_n = 0;
  double kappa = 0;
  bool satisfied = false;
};

KappaResult kappa_n(const GrowthParameters& params, int n);

struct DiffusionGradientBounds {
  double rho_star = 0;  // max_k sup log-norm of grad sigma_k
  double rho_sq = 0;    // sum_k (sup log-norm of grad sigma_k)^2
};

DiffusionGradientBounds diffusion_gradient_bounds(const Model<double>& model,
                                                  const SampleSpec& spec);

struct SecondDerivativeBounds {
  double drift_hess = 0;      // sup ||grad^2 b||_F
  double diffusion_hess = 0;  // sup (sum_k ||grad^2 sigma_k||_F^2)^{1/2}
};

SecondDerivativeBounds second_derivative_bounds(const Model<double>& model,
                                                const SampleSpec& spec);

double chi(const Model<double>& model, const SampleSpec& spec, double c = 1.0);

// ||Delta a|| / sqrt(upsilon)
double sigma_bound_from_a(double a_norm_diff, double upsilon);

struct ConditionReport {
  std::string model;
  Index dim = 0;
  double lambda_A = 0;
  VectorXd argmax;
  double rho_star = 0;
  double rho_sq = 0;
  double chi = 0;
  double chi_constant = 1;
  double drift_hess_sup = 0;
  double min_a_eigenvalue = 0;
  std::optional<GrowthParameters> growth;
  struct PerOrder {
    int n = 2;
    double lambda_A_n = 0;
    bool T_n = false;
    std::optional<KappaResult> kappa;
  };
  std::vector<PerOrder> orders;
  Index samples = 0;

  bool T(int n) const;
};

ConditionReport condition_report(const Model<double>& model, const SampleSpec& spec,
                                 const std::vector<int>& orders, double chi_constant = 1.0);

}  // namespace flowlab
