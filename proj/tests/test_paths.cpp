#include "flowlab/catalog.hpp"
#include "flowlab/experiments.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowlab;

namespace {

VectorXd cst(Index d, double v) { return VectorXd::Constant(d, v); }
VectorXd zero(Index d) { return VectorXd::Zero(d); }

ModelPtr<double> ou(double rate, double sigma, Index d = 1) {
  return std::make_shared<OrnsteinUhlenbeck<double>>(d, rate, sigma);
}

// b = c (constant), sigma = s I.
class ConstantModel final : public Model<double> {
 public:
  ConstantModel(double c, double s) : c_(c), s_(s) {}
  std::string name() const override { return "constant"; }
  Index state_dim() const override { return 1; }
  Index noise_dim() const override { return 1; }
  void drift(double, const ConstVecRef&, VecRef out) const override { out.setConstant(c_); }
  void diffusion(double, const ConstVecRef&, MatRef out) const override { out.setConstant(s_); }
  void drift_grad(double, const ConstVecRef&, MatRef out) const override { out.setZero(); }
  void diffusion_grad(double, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }
  void drift_hess(double, const ConstVecRef&, MatRef out) const override { out.setZero(); }
  void diffusion_hess(double, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }
  ModelTraits traits() const override { return {true, true}; }

 private:
  double c_, s_;
};

}  // namespace

TEST(Flow, ZeroCoefficientsConstant) {
  const auto g = sample_brownian(1, 0, 0, 1, 32, 1);
  const auto p = integrate_flow(ConstantModel(0, 0), g, cst(1, 1.7));
  EXPECT_TRUE((p.states.array() == 1.7).all());
}

TEST(Flow, PureNoise) {
  const auto g = sample_brownian(1, 0, 0, 1, 32, 1);
  const VectorXd x = cst(1, 0.5);
  const auto p = integrate_flow(ConstantModel(0, 1), g, x);
  for (Index k = 0; k <= 32; ++k) EXPECT_NEAR(p.at(k)(0), x(0) + g.cumulative(k)(0), 1e-14);
}

TEST(Flow, OuStrongOrder) {
  const LinearOracle o = LinearOracle::ou(1, 1);
  const auto m = ou(1, 1);
  const VectorXd x = cst(1, 1.0);
  std::vector<double> hs, errs;
  for (int e = 4; e <= 10; ++e) {
    const Index n = Index(1) << e;
    double err = 0;
    const int paths = 200;
    for (int i = 0; i < paths; ++i) {
      const auto g = sample_brownian(17, i, 0, 1, n, 1);
      err += std::abs(integrate_flow(*m, g, x).terminal()(0) - oracle_flow(o, g, x).terminal()(0));
    }
    hs.push_back(1.0 / n);
    errs.push_back(err / paths);
  }
  EXPECT_GE(fit_loglog("strong", hs, errs).slope, 0.8);
}

TEST(Tangent, OuClosedRecursion) {
  const auto g = sample_brownian(2, 0, 0, 1, 50, 1);
  const auto p = integrate_tangent(*ou(1, 1), g, cst(1, 0.3));
  for (Index k = 0; k <= 50; ++k)
    EXPECT_NEAR(p.tangent.matrices[k](0, 0), std::pow(1 - g.step(), double(k)), 1e-14);
  EXPECT_NEAR(p.tangent.matrices[50](0, 0), std::exp(-1.0), g.step());
}

TEST(Tangent, ConstantCoefficientsIdentity) {
  const auto g = sample_brownian(2, 0, 0, 1, 20, 1);
  const auto p = integrate_tangent(ConstantModel(0.4, 1.1), g, zero(1));
  for (const auto& j : p.tangent.matrices) EXPECT_EQ(j(0, 0), 1.0);
}

TEST(Tangent, GbmLinearity) {
  GeometricBrownian<double> m(0.1, 0.2);
  const auto g = sample_brownian(3, 0, 0, 1, 64, 1);
  const VectorXd x = cst(1, 2.5);
  const auto p = integrate_tangent(m, g, x);
  for (Index k = 0; k <= 64; ++k)
    EXPECT_NEAR(p.tangent.matrices[k](0, 0) * x(0), p.flow.at(k)(0), 1e-12);
}

TEST(Hessian, LinearModelZero) {
  const auto g = sample_brownian(3, 0, 0, 1, 32, 2);
  const auto p = integrate_hessian(*ou(1, 1, 2), g, cst(2, 1.0));
  for (const auto& h : p.hessian.tensors) EXPECT_EQ(h.norm(), 0.0);
}

TEST(Hessian, LangevinScalarRecursion) {
  LangevinTanh<double> m(1, 1.0);
  const auto g = sample_brownian(4, 0, 0, 1, 200, 1);
  const auto p = integrate_hessian(m, g, cst(1, 0.8));
  const double h = g.step();
  double J = 1, H = 0;
  for (Index k = 0; k < g.steps; ++k) {
    const double x = p.flow.at(k)(0);
    const double c = std::cosh(x), s2 = 1 / (c * c);
    const double u2 = 1 + s2, u3 = -2 * s2 * std::tanh(x);
    H = H - h * (u2 * H + u3 * J * J);
    J = J - h * u2 * J;
    EXPECT_NEAR(p.hessian.tensors[k + 1](0, 0), H, 1e-12);
    EXPECT_NEAR(p.tangent.matrices[k + 1](0, 0), J, 1e-12);
  }
}

TEST(Hessian, SymmetricFirstIndices) {
  LangevinTanh<double> m(2, 1.0);
  const auto g = sample_brownian(5, 0, 0, 1, 32, 2);
  VectorXd x(2);
  x << 0.3, -1.2;
  const auto p = integrate_hessian(m, g, x);
  for (const auto& t : p.hessian.tensors)
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j)
        EXPECT_EQ(t.row(pair_row(i, j, 2)), t.row(pair_row(j, i, 2)));
}

TEST(Restart, FromStartMatchesFlow) {
  LangevinTanh<double> m(1, 0.8);
  const auto g = sample_brownian(6, 0, 0, 1, 40, 1);
  const VectorXd x = cst(1, 0.2);
  EXPECT_EQ(restart_flow(m, g, 0, x, false, false).flow.states, integrate_flow(m, g, x).states);
}

TEST(Restart, TailBitIdentical) {
  LangevinTanh<double> m(1, 0.8);
  const auto g = sample_brownian(6, 0, 0, 1, 40, 1);
  const auto base = integrate_flow(m, g, cst(1, 0.2));
  const auto tail = restart_flow(m, g, 15, VectorXd(base.at(15)), false, false).flow;
  for (Index k = 15; k <= 40; ++k) EXPECT_EQ(tail.at(k)(0), base.at(k)(0));
}

TEST(Restart, OuTangent) {
  const auto g = sample_brownian(6, 0, 0, 1, 100, 1);
  const auto p = restart_flow(*ou(1, 1), g, 40, cst(1, 1.0), true, false);
  EXPECT_NEAR(p.tangent.matrices.back()(0, 0), std::exp(-0.6), g.step());
}

TEST(FrozenDrift, FineMeshIsFlow) {
  const auto g = sample_brownian(7, 0, 0, 1, 64, 1);
  LangevinTanh<double> m(1, 1.0);
  const VectorXd x = cst(1, 0.5);
  const auto frozen = integrate_frozen_drift(m, g, x, g.step());
  EXPECT_LT((frozen.states - integrate_flow(m, g, x).states).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FrozenDrift, ZeroDriftIsNoise) {
  const auto g = sample_brownian(7, 0, 0, 1, 64, 1);
  const VectorXd x = cst(1, 0.5);
  const auto noise = integrate_flow(ConstantModel(0, 1), g, x);
  for (double H : {1.0 / 64, 1.0 / 8, 0.5})
    EXPECT_EQ(integrate_frozen_drift(ConstantModel(0, 1), g, x, H).states, noise.states);
}

TEST(FrozenDrift, RejectsNonMultiple) {
  const auto g = sample_brownian(7, 0, 0, 1, 64, 1);
  EXPECT_THROW(integrate_frozen_drift(*ou(1, 1), g, zero(1), 0.1), ConfigError);
}

TEST(Flow, DivergenceFlagged) {
  GeometricBrownian<double> m(50, 0.0);
  const auto g = sample_brownian(8, 0, 0, 10, 100, 1);
  const auto p = integrate_flow(m, g, cst(1, 1.0));
  EXPECT_TRUE(p.diverged);
  EXPECT_GT(p.divergence_node, 0);
}

TEST(Flow, DimensionMismatch) {
  const auto g = sample_brownian(8, 0, 0, 1, 4, 1);
  EXPECT_THROW(integrate_flow(*ou(1, 1), g, zero(2)), DimensionError);
}
