#include "flowlab/catalog.hpp"
#include "flowlab/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlab;

namespace {

VectorXd cst(Index d, double v) { return VectorXd::Constant(d, v); }
VectorXd zero(Index d) { return VectorXd::Zero(d); }

ModelPtr<double> ou(double rate, double sigma, Index d = 1) {
  return std::make_shared<OrnsteinUhlenbeck<double>>(d, rate, sigma);
}

}  // namespace

TEST(Model, OuDerivatives) {
  const auto m = ou(1, 1);
  const VectorXd x = cst(1, 2.0);
  const auto b = eval_derivatives(*m, 0.0, x);
  EXPECT_EQ(b.b(0), -2.0);
  EXPECT_EQ(b.drift_grad(0, 0), -1.0);
  EXPECT_EQ(b.drift_hess.norm(), 0.0);
  EXPECT_EQ(b.sigma(0, 0), 1.0);
  EXPECT_EQ(b.diffusion_grad[0].norm(), 0.0);
  EXPECT_TRUE(m->traits().linear);
  EXPECT_TRUE(m->traits().constant_diffusion);
}

TEST(Model, GbmDerivatives) {
  GeometricBrownian<double> m(0.1, 0.2);
  const VectorXd x = cst(1, 3.0);
  const auto b = eval_derivatives(m, 0.0, x);
  EXPECT_DOUBLE_EQ(b.drift_grad(0, 0), 0.1);
  EXPECT_DOUBLE_EQ(b.diffusion_grad[0](0, 0), 0.2);
  EXPECT_EQ(b.drift_hess.norm(), 0.0);
  EXPECT_EQ(b.diffusion_hess[0].norm(), 0.0);
  EXPECT_DOUBLE_EQ(b.sigma(0, 0), 0.6);
  EXPECT_FALSE(m.traits().constant_diffusion);
}

TEST(Model, LangevinAtOrigin) {
  LangevinTanh<double> m(2, 1.0);
  const auto b = eval_derivatives(m, 0.0, zero(2));
  EXPECT_EQ(b.b.norm(), 0.0);
  // d^2 U(0) = 1 + sech^2(0) per coordinate.
  EXPECT_DOUBLE_EQ(b.drift_grad(0, 0), -2.0);
  EXPECT_DOUBLE_EQ(b.drift_grad(1, 1), -2.0);
  EXPECT_EQ(b.drift_grad(0, 1), 0.0);
}

TEST(Model, HessianSymmetry) {
  LangevinTanh<double> m(3, 1.0, 0.5);
  VectorXd x(3);
  x << 0.4, -1.1, 2.0;
  const auto b = eval_derivatives(m, 0.0, x);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      EXPECT_EQ(b.drift_hess.row(pair_row(i, j, 3)), b.drift_hess.row(pair_row(j, i, 3)));
}

TEST(FiniteDifference, Ou) {
  const auto m = ou(1.5, 0.7, 2);
  std::vector<FdSample> s{{0, cst(2, 0.3)}, {0, cst(2, -4)}};
  EXPECT_LT(finite_difference_check(*m, s, 1e-5).max(), 1e-9);
}

TEST(FiniteDifference, Gbm) {
  GeometricBrownian<double> m(0.1, 0.2);
  std::vector<FdSample> s{{0, cst(1, 1.0)}};
  EXPECT_LE(finite_difference_check(m, s, 1e-5).diffusion_grad, 1e-8);
}

TEST(FiniteDifference, Langevin) {
  LangevinTanh<double> m(2, 1.0);
  VectorXd x(2);
  x << 0.5, -0.3;
  EXPECT_TRUE(finite_difference_check(m, {{0, x}}, 1e-5).passed(1e-6));
}

TEST(FiniteDifference, TanhPerturbation) {
  TanhDriftPerturbation<double> m(ou(1, 1, 2), 0.3);
  VectorXd x(2);
  x << 1.2, -0.7;
  EXPECT_TRUE(finite_difference_check(m, {{0, x}}, 1e-5).passed(1e-6));
}

TEST(Delta, IdenticalModels) {
  ModelPair<double> p(ou(1, 1), ou(1, 1));
  const auto d = delta_eval(p, 0.0, cst(1, 3.0));
  EXPECT_EQ(d.db.norm(), 0.0);
  EXPECT_EQ(d.dsigma.norm(), 0.0);
  EXPECT_EQ(d.da.norm(), 0.0);
}

TEST(Delta, DriftDifference) {
  ModelPair<double> p(ou(1, 1), ou(2, 1));
  EXPECT_DOUBLE_EQ(delta_eval(p, 0.0, cst(1, 3.0)).db(0), 3.0);
}

TEST(Delta, DiffusionDifference) {
  ModelPair<double> p(ou(1, 1), ou(1, 0.5));
  const auto d = delta_eval(p, 0.0, cst(1, 1.0));
  EXPECT_DOUBLE_EQ(d.dsigma(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(d.da(0, 0), 0.75);
}

TEST(ModelPair, DimensionMismatch) {
  EXPECT_THROW(ModelPair<double>(ou(1, 1, 1), ou(1, 1, 2)), DimensionError);
}

TEST(Catalog, MakeModel) {
  const auto m = make_model("ou", {{"rate", 2}, {"sigma", 1}, {"dim", 3}});
  EXPECT_EQ(m->state_dim(), 3);
  try {
    make_model("gbm", {{"beta", 0.1}}, "base");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "base.alpha");
  }
  EXPECT_THROW(make_model("nope", {}), ConfigError);
}

TEST(Catalog, NonFiniteOutputThrows) {
  GeometricBrownian<double> m(0.1, 0.2);
  EXPECT_THROW(eval_derivatives(m, 0.0, cst(1, NAN)), ModelEvaluationError);
}
