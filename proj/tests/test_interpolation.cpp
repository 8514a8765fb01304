#include "flowlab/catalog.hpp"
#include "flowlab/estimators.hpp"
#include "flowlab/interpolation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlab;

namespace {

VectorXd cst(Index d, double v) { return VectorXd::Constant(d, v); }
VectorXd zero(Index d) { return VectorXd::Zero(d); }

ModelPtr<double> ou(double rate, double sigma, Index d = 1) {
  return std::make_shared<OrnsteinUhlenbeck<double>>(d, rate, sigma);
}

ModelPtr<double> langevin(double sigma) { return std::make_shared<LangevinTanh<double>>(1, sigma); }

}  // namespace

TEST(Decomposition, IdenticalModelsVanish) {
  ModelPair<double> pair(langevin(1), langevin(1));
  const auto g = sample_brownian(1, 0, 0, 1, 64, 1);
  const auto r = telescoping_decomposition(pair, g, cst(1, 0.5), 1.0 / 16);
  EXPECT_EQ(r.lhs.norm(), 0.0);
  EXPECT_EQ(r.t_hat.norm(), 0.0);
  EXPECT_EQ(r.s_hat.norm(), 0.0);
  EXPECT_EQ(r.residual.norm(), 0.0);
}

TEST(Decomposition, SameDiffusionHasNoSkorohodTerm) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  const auto g = sample_brownian(2, 0, 0, 1, 64, 1);
  EXPECT_EQ(s_term(pair, g, cst(1, 1.0), 1.0 / 16).norm(), 0.0);
}

TEST(Decomposition, LinearBaseHasNoDriftTermForDiffusionChange) {
  ModelPair<double> pair(ou(1, 1), ou(1, 0.5));
  const auto g = sample_brownian(3, 0, 0, 1, 64, 1);
  EXPECT_EQ(t_term(pair, g, cst(1, 1.0), 1.0 / 16).norm(), 0.0);
}

TEST(Decomposition, DiffusionOnlyLhsClosedForm) {
  const double lambda = 1, ds = 0.5;
  ModelPair<double> pair(ou(lambda, 1), ou(lambda, 1 - ds));
  const auto g = sample_brownian(4, 0, 0, 2, 256, 1);
  const auto r = telescoping_decomposition(pair, g, cst(1, 1.0), g.step());
  // Euler difference D_{k+1} = (1 - lambda h) D_k + ds dW_k.
  const double h = g.step();
  double sum = 0;
  for (Index k = 0; k < g.steps; ++k)
    sum += std::pow(1 - lambda * h, double(g.steps - 1 - k)) * ds * g.increments(k, 0);
  EXPECT_NEAR(r.lhs(0), sum, 1e-12);
  EXPECT_NEAR(std::abs(r.residual(0)), 0.0, 1e-12);
}

TEST(Decomposition, DiffusionOnlyResidualShrinks) {
  ModelPair<double> pair(ou(1, 1), ou(1, 0.5));
  double coarse = 0, fine = 0;
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto g = sample_brownian(5, i, 0, 2, 256, 1);
    const VectorXd x = cst(1, 1.0);
    coarse += telescoping_decomposition(pair, g, x, 0.25).residual.squaredNorm();
    fine += telescoping_decomposition(pair, g, x, 1.0 / 32).residual.squaredNorm();
  }
  EXPECT_LT(fine, coarse);
}

TEST(Decomposition, DriftOnlyResidualShrinks) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  double coarse = 0, fine = 0;
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto g = sample_brownian(6, i, 0, 2, 256, 1);
    const VectorXd x = cst(1, 1.0);
    coarse += telescoping_decomposition(pair, g, x, 0.25).residual.squaredNorm();
    fine += telescoping_decomposition(pair, g, x, 1.0 / 32).residual.squaredNorm();
  }
  EXPECT_LT(fine, coarse);
}

TEST(Decomposition, DeterministicBaseSkorohodIsIto) {
  const double lambda = 1;
  ModelPair<double> pair(ou(lambda, 0), ou(lambda, 1));
  const auto g = sample_brownian(7, 0, 0, 1, 128, 1);
  const double h = g.step();
  const auto s = s_term(pair, g, cst(1, 1.0), h);
  double sum = 0;
  for (Index k = 0; k < g.steps; ++k)
    sum -= std::pow(1 - lambda * h, double(g.steps - 1 - k)) * g.increments(k, 0);
  EXPECT_NEAR(s(0), sum, 1e-12);
}

TEST(Decomposition, SkorohodTermCentered) {
  ModelPair<double> pair(langevin(1.0), langevin(0.6));
  std::vector<double> v;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto g = sample_brownian(8, i, 0, 1, 64, 1);
    v.push_back(s_term(pair, g, cst(1, 0.5), 1.0 / 16)(0));
  }
  const auto st = sample_stats(v);
  EXPECT_LT(std::abs(st.mean), 3 * st.std_error);
}

TEST(Decomposition, RejectsNonMultipleMesh) {
  ModelPair<double> pair(ou(1, 1), ou(2, 1));
  const auto g = sample_brownian(9, 0, 0, 1, 64, 1);
  EXPECT_THROW(telescoping_decomposition(pair, g, cst(1, 1.0), 0.1), ConfigError);
}

TEST(SkorohodVariance, ConstantDiffusionCrossTermZero) {
  ModelPair<double> pair(ou(1, 1), ou(1, 0.5));
  VarianceSpec spec;
  spec.paths = 2048;
  spec.seed = 10;
  spec.fine_steps = 64;
  const auto r = skorohod_variance_1d(pair, spec, 0, 2, cst(1, 1.0));
  EXPECT_TRUE(r.cross_forced_zero);
  EXPECT_EQ(r.cross_term, 0.0);
  EXPECT_EQ(r.total, r.diagonal_term);
  EXPECT_LT(std::abs(r.empirical_variance - r.total), 3 * r.mc_stderr);
}
