#pragma once

#include "flowlab/brownian.hpp"
#include "flowlab/model.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/regularity.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace flowlab {

inline constexpr double normal_quantile_95 = 1.959963984540054;

struct MomentEstimate {
  int order = 1;
  double value = 0;
  double raw_mean = 0;
  double std_error = 0;
  Index samples = 0;
  std::uint64_t seed = 0;
  Index divergent = 0;

  double half_width() const { return normal_quantile_95 * std_error; }
  double relative_stderr() const { return value > 0 ? std_error / value : 0.0; }
};

// Returns the norm of a path functional, or nullopt for a divergent path.
using PathSampler = std::function<std::optional<double>(std::uint64_t seed, std::uint64_t path)>;

MomentEstimate moment_from_samples(const std::vector<double>& norms, int n, std::uint64_t seed,
                                   Index divergent = 0, const ExecPolicy& exec = {});

MomentEstimate moment_estimate(const PathSampler& sampler, int n, Index M, std::uint64_t seed,
                               const ExecPolicy& exec = {});

// Several orders on the same samples.
std::vector<MomentEstimate> moment_estimates(const PathSampler& sampler,
                                             const std::vector<int>& orders, Index M,
                                             std::uint64_t seed, const ExecPolicy& exec = {});

struct MeshSpec {
  double h = 0.01;
};

// E[|X_{s,t}(x) - Xbar_{s,t}(x)|^n]^{1/n} under common noise.
MomentEstimate flow_difference_moments(const ModelPair<double>& pair, double s, double t,
                                       const VectorXd& x, int n, Index M, const MeshSpec& mesh,
                                       std::uint64_t seed, const ExecPolicy& exec = {});

// Same paths observed at several times (each a multiple of h after s).
std::vector<MomentEstimate> flow_difference_moments_over_time(
    const ModelPair<double>& pair, double s, const std::vector<double>& times, const VectorXd& x,
    int n, Index M, const MeshSpec& mesh, std::uint64_t seed, const ExecPolicy& exec = {});

struct Observable {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&)> hessian;

  static Observable constant(double c);
  static Observable coordinate(Index i);
  static Observable squared_norm();
};

enum class WeightKind { linear, cosine };

// omega(u) = phi((u - s)/(t - s)) with phi(u) = u or the cosine ramp on [1 - eps, 1].
struct WeightSpec {
  WeightKind kind = WeightKind::linear;
  double epsilon = 0.5;

  double phi(double v) const;
  double phi_prime(double v) const;
};

enum class HessianForm { gradient, split };

struct BelSpec {
  Index paths = 4096;
  double h = 0.01;
  std::uint64_t seed = 0;
  WeightSpec weight;
  double eigen_floor = 1e-8;
  HessianForm form = HessianForm::gradient;
  double split = 0.5;  // relative split point in (0,1) for HessianForm::split
  ExecPolicy exec;
};

struct GradientEstimate {
  VectorXd value;
  VectorXd std_error;
  Index samples = 0;
  Index divergent = 0;
};

struct HessianEstimate {
  MatrixXd value;
  MatrixXd std_error;
  Index samples = 0;
  Index divergent = 0;
};

// Symmetric inverse square root; throws EllipticityError below the floor.
MatrixXd inverse_sqrt_spd(const MatrixXd& a, double floor);

// Rows i + d*j hold d_i (a^{-1/2})_{j,.} for a = sigma sigma'.
Tensor21<double> inverse_sqrt_gradient(const MatrixXd& sigma,
                                       const std::vector<MatrixXd>& diffusion_grad, double floor);

GradientEstimate bel_gradient(const Model<double>& model, const Observable& f, double s,
                              double t, const VectorXd& x, const BelSpec& spec);

HessianEstimate bel_hessian(const Model<double>& model, const Observable& f, double s, double t,
                            const VectorXd& x, const BelSpec& spec);

// Per-path samples (value * weight) for both estimators on shared paths.
struct BelSample {
  VectorXd gradient;
  MatrixXd hessian;
  bool diverged = false;
};

BelSample bel_sample(const Model<double>& model, const Observable& f, const BrownianGrid& grid,
                     const VectorXd& x, const BelSpec& spec, bool want_hessian);

struct SemigroupSpec {
  Index outer = 256;
  Index inner = 256;
  Index lhs_paths = 4096;
  double h = 1.0 / 64;
  int nodes = 16;
  std::uint64_t seed = 0;
  WeightSpec weight;
  double eigen_floor = 1e-8;
  double budget = 5e9;  // cap on outer * nodes * inner * inner-steps
  ExecPolicy exec;
};

struct SemigroupResult {
  double lhs = 0;
  double lhs_stderr = 0;
  double rhs = 0;
  double rhs_stderr = 0;
  double cost = 0;
  Index outer = 0;
  Index inner = 0;
  int nodes = 0;

  double combined_stderr() const;
};

SemigroupResult semigroup_difference(const ModelPair<double>& pair, const Observable& f,
                                     double s, double t, const VectorXd& x,
                                     const SemigroupSpec& spec);

struct InvariantSpec {
  Index samples = 256;
  Index inner = 32;
  double h = 0.02;
  double burn_in = 10.0;
  double horizon = 0;  // 0: 5 / lambda_A
  int nodes = 16;
  std::uint64_t seed = 0;
  WeightSpec weight;
  double eigen_floor = 1e-8;
  SampleSpec conditions{-5, 5, 64, 1, 0};
  ExecPolicy exec;
};

struct InvariantResult {
  double value = 0;
  double std_error = 0;
  double horizon = 0;
  double lambda_A = 0;
  Index samples = 0;
};

// (pi - pibar)(f) with pibar sampled by burn-in of the perturbed model.
InvariantResult invariant_shift(const ModelPair<double>& pair, const Observable& f,
                                const InvariantSpec& spec);

// Mean and standard error of a sample vector.
struct SampleStats {
  double mean = 0;
  double std_error = 0;
};
SampleStats sample_stats(const std::vector<double>& v);

}  // namespace flowlab
