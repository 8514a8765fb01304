#pragma once

#include "flowlab/estimators.hpp"
#include "flowlab/interpolation.hpp"
#include "flowlab/model.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/regularity.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace flowlab {

struct TableRow {
  std::string label;
  double parameter = 0;
  double measured = 0;
  double target = 0;  // bound or reference; NaN when absent
  double std_error = 0;
};

struct SlopeFit {
  std::string name;
  double slope = 0;
  double std_error = 0;
  double intercept = 0;
  Index points = 0;
};

struct Verdict {
  std::string criterion;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::string config_digest;
  std::vector<TableRow> rows;
  std::vector<SlopeFit> slopes;
  std::vector<Verdict> verdicts;
  double wall_time = 0;

  bool passed() const;
  // Hash of the bit patterns of every numeric field except wall_time.
  std::string digest() const;
};

// Least squares fit of log y against log x.
SlopeFit fit_loglog(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y);

std::string fnv1a_hex(const std::string& bytes);

struct DecompositionStudy {
  ModelPtr<double> base;
  ModelPtr<double> perturbed;
  double s = 0;
  double t = 2;
  VectorXd x;
  std::vector<double> H{0.125, 0.0625, 0.03125, 0.015625, 0.0078125};  // halving
  int fine_factor = 8;  // h = H / fine_factor
  Index paths = 512;
  std::uint64_t seed = 0;
  double monotone_k = 2;
  double min_slope = 0.4;
  double centering_k = 3;
  ExecPolicy exec;
};

ExperimentResult run_decomposition_study(const DecompositionStudy& cfg);

struct SkorohodVarianceStudy {
  ModelPtr<double> base;
  ModelPtr<double> perturbed;
  double s = 0;
  double t = 2;
  VectorXd x;
  double h = 1.0 / 128;
  double H = 1.0 / 128;
  Index paths = 4096;
  std::uint64_t seed = 0;
  int cross_nodes = 16;
  double target = std::numeric_limits<double>::quiet_NaN();  // closed-form diagonal if known
  double k = 3;
  double cross_k = 4;
  ExecPolicy exec;
};

ExperimentResult run_skorohod_variance(const SkorohodVarianceStudy& cfg);

struct DiscretizationBoundStudy {
  ModelPtr<double> model;
  double s = 0;
  double t = 5;
  VectorXd x;
  std::vector<double> H{0.2, 0.1, 0.05, 0.025};
  double h = 1e-3;
  int n = 2;
  Index paths = 2048;
  std::uint64_t seed = 0;
  double record_every = 0.25;  // time grid for the moment sup
  double min_slope = 0.4;
  SampleSpec conditions{-10, 10, 256, 1, 0};
  ExecPolicy exec;
};

ExperimentResult run_discretization_bound(const DiscretizationBoundStudy& cfg);

// B(x, m) = -x + theta (m - x) - gamma tanh(m), constant sigma.
struct MeanFieldStudy {
  double theta = 0.5;
  double gamma = 2.0;
  double sigma = 1.5;
  double x0 = 1.0;
  double horizon = 1.0;
  double h = 0.01;
  std::vector<Index> N{16, 64, 256, 1024};
  Index pairs = 256;  // antithetic repetitions
  std::uint64_t seed = 0;
  double bias_slope = -1.0;
  double bias_tol = 0.15;
  double fluct_slope = -0.5;
  double fluct_tol = 0.1;
  ExecPolicy exec;
};

ExperimentResult run_meanfield(const MeanFieldStudy& cfg);

// X^delta uses b + delta tanh; the first-order term is the exact derivative of the Euler map.
struct PerturbationStudy {
  ModelPtr<double> base;
  double s = 0;
  double t = 2;
  VectorXd x;
  std::vector<double> delta{0.2, 0.1, 0.05, 0.025};
  double h = 1e-3;
  Index paths = 1024;
  std::uint64_t seed = 0;
  double slope = 2.0;
  double slope_tol = 0.2;
  double max_ratio = 3.0;
  ExecPolicy exec;
};

ExperimentResult run_perturbation(const PerturbationStudy& cfg);

struct DecayRateStudy {
  ModelPtr<double> model;
  VectorXd x;
  std::vector<double> times{1, 2, 4};
  std::vector<int> orders{2};
  double h = 0.01;
  Index paths = 4096;
  std::uint64_t seed = 0;
  bool pathwise = false;  // almost sure checks on every path and node
  double k = 3;
  SampleSpec conditions{-10, 10, 256, 1, 0};
  ExecPolicy exec;
};

ExperimentResult run_decay_rates(const DecayRateStudy& cfg);

struct UniformDifferenceStudy {
  ModelPtr<double> base;
  ModelPtr<double> perturbed;
  VectorXd x;
  std::vector<double> times{2, 4, 8, 16};
  int n = 2;
  double h = 1.0 / 64;
  Index paths = 4096;
  std::uint64_t seed = 0;
  double k = 5;
  SampleSpec conditions{-10, 10, 256, 1, 0};
  ExecPolicy exec;
};

ExperimentResult run_uniform_difference(const UniformDifferenceStudy& cfg);

}  // namespace flowlab
