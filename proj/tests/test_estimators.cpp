#include "flowlab/catalog.hpp"
#include "flowlab/estimators.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlab;

namespace {

ModelPtr<double> ou(double rate, double sigma, Index d = 1) {
  return std::make_shared<OrnsteinUhlenbeck<double>>(d, rate, sigma);
}

VectorXd cst(Index d, double v) { return VectorXd::Constant(d, v); }

BelSpec bel_spec(Index paths, std::uint64_t seed) {
  BelSpec s;
  s.paths = paths;
  s.seed = seed;
  s.h = 0.01;
  return s;
}

}  // namespace

TEST(Moments, ConstantFunctional) {
  const auto e = moment_estimate([](std::uint64_t, std::uint64_t) { return std::optional(-2.5); },
                                 3, 100, 1);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  EXPECT_NEAR(e.std_error, 0.0, 1e-12);
  EXPECT_EQ(e.samples, 100);
}

TEST(Moments, DivergentPathsExcluded) {
  const auto e = moment_estimate(
      [](std::uint64_t, std::uint64_t i) {
        return i % 4 == 0 ? std::nullopt : std::optional(1.0);
      },
      2, 100, 1);
  EXPECT_EQ(e.divergent, 25);
  EXPECT_EQ(e.samples, 75);
}

TEST(Moments, OuStationarySecondMoment) {
  const auto m = ou(1, 1);
  const double t = 8, h = 0.01;
  const PathSampler sampler = [&](std::uint64_t seed, std::uint64_t i) -> std::optional<double> {
    const auto g = sample_brownian(seed, i, 0, t, Index(t / h + 0.5), 1);
    return integrate_flow(*m, g, cst(1, 0.0)).terminal().norm();
  };
  const auto e = moment_estimate(sampler, 2, 4000, 5);
  const double exact = std::sqrt(oracle_second_moment(LinearOracle::ou(1, 1), 0, t, cst(1, 0)));
  EXPECT_LT(std::abs(e.value - exact), 3 * e.std_error + h);
}

TEST(Moments, LyapunovOrdering) {
  const auto m = ou(1, 1);
  const PathSampler sampler = [&](std::uint64_t seed, std::uint64_t i) -> std::optional<double> {
    return integrate_flow(*m, sample_brownian(seed, i, 0, 1, 50, 1), cst(1, 0.3)).terminal().norm();
  };
  const auto e = moment_estimates(sampler, {1, 2, 4}, 500, 2);
  EXPECT_LE(e[0].value, e[1].value);
  EXPECT_LE(e[1].value, e[2].value);
}

TEST(Moments, FixedOrderReductionIsThreadInvariant) {
  const auto m = ou(1, 1);
  const PathSampler sampler = [&](std::uint64_t seed, std::uint64_t i) -> std::optional<double> {
    return integrate_flow(*m, sample_brownian(seed, i, 0, 1, 50, 1), cst(1, 0.3)).terminal().norm();
  };
  const auto a = moment_estimate(sampler, 2, 999, 3, {1, Reduction::fixed_order});
  const auto b = moment_estimate(sampler, 2, 999, 3, {3, Reduction::fixed_order});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(FlowDifference, IdenticalModels) {
  ModelPair<double> pair(ou(1, 1), ou(1, 1));
  const auto e = flow_difference_moments(pair, 0, 1, cst(1, 1.0), 2, 64, {0.01}, 4);
  EXPECT_EQ(e.value, 0.0);
}

TEST(FlowDifference, DiffusionOnlyLimit) {
  ModelPair<double> pair(ou(1, 1), ou(1, 0.5));
  const double t = 8, h = 0.01;
  const auto e = flow_difference_moments(pair, 0, t, cst(1, 1.0), 2, 4000, {h}, 6);
  const double exact =
      oracle_difference_moment(LinearOracle::ou(1, 1), LinearOracle::ou(1, 0.5), 2, 0, t, cst(1, 1));
  EXPECT_NEAR(exact, 0.5 / std::sqrt(2.0), 1e-6);
  EXPECT_LT(std::abs(e.value - exact), 3 * e.std_error + h);
}

TEST(FlowDifference, RejectsOffGridTime) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  EXPECT_THROW(flow_difference_moments(pair, 0, 1.005, cst(1, 1.0), 2, 8, {0.01}, 4), ConfigError);
}

TEST(Observable, SquaredNorm) {
  const auto f = Observable::squared_norm();
  VectorXd x(2);
  x << 1, -2;
  EXPECT_DOUBLE_EQ(f.value(x), 5.0);
  EXPECT_TRUE(f.gradient(x).isApprox(2 * x));
  EXPECT_TRUE(f.hessian(x).isApprox(2 * MatrixXd::Identity(2, 2)));
}

TEST(Weight, Endpoints) {
  for (WeightKind k : {WeightKind::linear, WeightKind::cosine}) {
    WeightSpec w{k, 0.5};
    EXPECT_NEAR(w.phi(0), 0.0, 1e-15);
    EXPECT_NEAR(w.phi(1), 1.0, 1e-15);
    double integral = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) integral += w.phi_prime((i + 0.5) / n) / n;
    EXPECT_NEAR(integral, 1.0, 1e-6);
  }
  WeightSpec c{WeightKind::cosine, 0.5};
  EXPECT_EQ(c.phi(0.3), 0.0);
  EXPECT_EQ(c.phi_prime(0.3), 0.0);
}

TEST(InverseSqrt, Diagonal) {
  MatrixXd a = MatrixXd::Zero(2, 2);
  a.diagonal() << 4, 9;
  const MatrixXd r = inverse_sqrt_spd(a, 1e-8);
  EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r(1, 1), 1.0 / 3, 1e-15);
  EXPECT_THROW(inverse_sqrt_spd(MatrixXd::Zero(2, 2), 1e-8), EllipticityError);
}

TEST(InverseSqrt, GradientMatchesFiniteDifference) {
  GeometricBrownian<double> m(0.1, 0.2);
  const VectorXd x = cst(1, 1.5);
  const auto b = eval_derivatives(m, 0.0, x);
  const auto g = inverse_sqrt_gradient(b.sigma, b.diffusion_grad, 1e-8);
  // a^{-1/2} = 1 / (alpha x), derivative -1 / (alpha x^2).
  EXPECT_NEAR(g(0, 0), -1 / (0.2 * 1.5 * 1.5), 1e-12);
}

TEST(Bel, OuGradient) {
  const auto m = ou(1, 1);
  const auto e = bel_gradient(*m, Observable::coordinate(0), 0, 1, cst(1, 1.0), bel_spec(8192, 7));
  EXPECT_LT(std::abs(e.value(0) - std::exp(-1.0)), 3 * e.std_error(0) + 0.01);
}

TEST(Bel, WeightsAgree) {
  const auto m = ou(1, 1);
  BelSpec a = bel_spec(4096, 8), b = a;
  b.weight = {WeightKind::cosine, 0.5};
  const auto ea = bel_gradient(*m, Observable::squared_norm(), 0, 1, cst(1, 0.7), a);
  const auto eb = bel_gradient(*m, Observable::squared_norm(), 0, 1, cst(1, 0.7), b);
  const double joint = std::hypot(ea.std_error(0), eb.std_error(0));
  EXPECT_LT(std::abs(ea.value(0) - eb.value(0)), 3 * joint);
}

TEST(Bel, ConstantObservableCentered) {
  const auto m = ou(1, 1);
  const auto e = bel_gradient(*m, Observable::constant(2.0), 0, 1, cst(1, 0.7), bel_spec(2048, 9));
  EXPECT_LT(std::abs(e.value(0)), 3 * e.std_error(0));
}

TEST(Bel, LinearObservableHessian) {
  const auto m = ou(1, 1);
  const auto e = bel_hessian(*m, Observable::coordinate(0), 0, 1, cst(1, 0.7), bel_spec(4096, 10));
  EXPECT_LT(std::abs(e.value(0, 0)), 3 * e.std_error(0, 0));
}

TEST(Bel, SecondWeightVanishesForLinearModel) {
  const auto m = ou(1, 1, 2);
  const auto g = sample_brownian(11, 0, 0, 1, 100, 2);
  BelSpec spec = bel_spec(1, 11);
  const auto s = bel_sample(*m, Observable::constant(1.0), g, cst(2, 0.2), spec, true);
  EXPECT_EQ(s.hessian.norm(), 0.0);
}

TEST(Bel, DegenerateDiffusionRejected) {
  const auto m = ou(1, 0);
  EXPECT_THROW(bel_gradient(*m, Observable::coordinate(0), 0, 1, cst(1, 1.0), bel_spec(16, 1)),
               EllipticityError);
}

TEST(Semigroup, IdenticalModels) {
  ModelPair<double> pair(ou(1, 1), ou(1, 1));
  SemigroupSpec spec;
  spec.outer = 32;
  spec.inner = 32;
  spec.lhs_paths = 256;
  spec.nodes = 4;
  spec.seed = 12;
  const auto r = semigroup_difference(pair, Observable::squared_norm(), 0, 1, cst(1, 1.0), spec);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
}

TEST(Semigroup, LinearObservableLhs) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  SemigroupSpec spec;
  spec.outer = 128;
  spec.inner = 128;
  spec.lhs_paths = 2048;
  spec.nodes = 4;
  spec.seed = 13;
  const double x = 1.5;
  const auto r = semigroup_difference(pair, Observable::coordinate(0), 0, 1, cst(1, x), spec);
  const double exact = x * (std::exp(-1.0) - std::exp(-2.0));
  EXPECT_LT(std::abs(r.lhs - exact), 3 * r.lhs_stderr + 2 * spec.h);
  EXPECT_LT(std::abs(r.lhs - r.rhs), 4 * r.combined_stderr() + 2 * spec.h);
}

TEST(Semigroup, BudgetEnforced) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  SemigroupSpec spec;
  spec.budget = 1000;
  EXPECT_THROW(semigroup_difference(pair, Observable::coordinate(0), 0, 1, cst(1, 1), spec),
               BudgetError);
}

TEST(Semigroup, NodesMustDivideSteps) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  SemigroupSpec spec;
  spec.nodes = 3;
  EXPECT_THROW(semigroup_difference(pair, Observable::coordinate(0), 0, 1, cst(1, 1), spec),
               ConfigError);
}

TEST(Invariant, IdenticalModels) {
  ModelPair<double> pair(ou(1, 1), ou(1, 1));
  InvariantSpec spec;
  spec.samples = 32;
  spec.inner = 8;
  spec.seed = 14;
  const auto r = invariant_shift(pair, Observable::squared_norm(), spec);
  EXPECT_EQ(r.value, 0.0);
}

TEST(Invariant, RequiresContractivity) {
  ModelPair<double> pair(std::make_shared<GeometricBrownian<double>>(0.1, 0.2),
                         std::make_shared<GeometricBrownian<double>>(0.1, 0.2));
  InvariantSpec spec;
  spec.seed = 15;
  EXPECT_THROW(invariant_shift(pair, Observable::squared_norm(), spec), ConditionError);
}
