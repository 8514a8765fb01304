#pragma once

#include "flowlab/model.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace flowlab {

// b(x) = -lambda x, sigma = Sigma (d x r constant).
template <typename Scalar>
class OrnsteinUhlenbeck final : public Model<Scalar> {
 public:
  using typename Model<Scalar>::ConstVecRef;
  using typename Model<Scalar>::VecRef;
  using typename Model<Scalar>::MatRef;

  OrnsteinUhlenbeck(Scalar rate, Matrix<Scalar> sigma) : rate_(rate), sigma_(std::move(sigma)) {
    if (sigma_.rows() < 1 || sigma_.cols() < 1) throw DimensionError("OU needs a non-empty Sigma");
  }
  OrnsteinUhlenbeck(Index d, Scalar rate, Scalar sigma)
      : OrnsteinUhlenbeck(rate, Matrix<Scalar>::Identity(d, d) * sigma) {}

  std::string name() const override { return "ou"; }
  Index state_dim() const override { return sigma_.rows(); }
  Index noise_dim() const override { return sigma_.cols(); }
  Scalar rate() const { return rate_; }
  const Matrix<Scalar>& sigma() const { return sigma_; }

  void drift(Scalar, const ConstVecRef& x, VecRef out) const override { out = -rate_ * x; }
  void diffusion(Scalar, const ConstVecRef&, MatRef out) const override { out = sigma_; }
  void drift_grad(Scalar, const ConstVecRef&, MatRef out) const override {
    out.setIdentity();
    out *= -rate_;
  }
  void diffusion_grad(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }
  void drift_hess(Scalar, const ConstVecRef&, MatRef out) const override { out.setZero(); }
  void diffusion_hess(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }

  ModelTraits traits() const override { return {true, true}; }
  ModelMetadata metadata() const override {
    ModelMetadata m{"ou", {{"rate", double(rate_)}, {"dim", double(state_dim())}}, std::nullopt};
    const double s2 = double(sigma_.squaredNorm());
    m.params["sigma_fro"] = std::sqrt(s2);
    if (sigma_.rows() == sigma_.cols() &&
        (sigma_ - sigma_(0, 0) * Matrix<Scalar>::Identity(sigma_.rows(), sigma_.cols()))
                .cwiseAbs()
                .maxCoeff() == Scalar(0))
      m.params["sigma"] = double(sigma_(0, 0));
    m.growth = GrowthParameters{s2, 0, 0, 0, 0, double(rate_)};
    return m;
  }

 private:
  Scalar rate_;
  Matrix<Scalar> sigma_;
};

// 1D b(x) = beta x, sigma(x) = alpha x.
template <typename Scalar>
class GeometricBrownian final : public Model<Scalar> {
 public:
  using typename Model<Scalar>::ConstVecRef;
  using typename Model<Scalar>::VecRef;
  using typename Model<Scalar>::MatRef;

  GeometricBrownian(Scalar beta, Scalar alpha) : beta_(beta), alpha_(alpha) {}

  std::string name() const override { return "gbm"; }
  Index state_dim() const override { return 1; }
  Index noise_dim() const override { return 1; }
  Scalar beta() const { return beta_; }
  Scalar alpha() const { return alpha_; }

  void drift(Scalar, const ConstVecRef& x, VecRef out) const override { out = beta_ * x; }
  void diffusion(Scalar, const ConstVecRef& x, MatRef out) const override {
    out(0, 0) = alpha_ * x(0);
  }
  void drift_grad(Scalar, const ConstVecRef&, MatRef out) const override { out(0, 0) = beta_; }
  void diffusion_grad(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out(0, 0) = alpha_;
  }
  void drift_hess(Scalar, const ConstVecRef&, MatRef out) const override { out.setZero(); }
  void diffusion_hess(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }

  ModelTraits traits() const override { return {alpha_ == Scalar(0), true}; }
  ModelMetadata metadata() const override {
    const double a2 = double(alpha_ * alpha_);
    return {"gbm", {{"beta", double(beta_)}, {"alpha", double(alpha_)}},
            GrowthParameters{0, 0, a2, 0, 0, -double(beta_)}};
  }

 private:
  Scalar beta_;
  Scalar alpha_;
};

// b = -grad U with U(x) = c |x|^2 / 2 + sum_i ln cosh x_i, sigma = s I.
template <typename Scalar>
class LangevinTanh final : public Model<Scalar> {
 public:
  using typename Model<Scalar>::ConstVecRef;
  using typename Model<Scalar>::VecRef;
  using typename Model<Scalar>::MatRef;

  LangevinTanh(Index d, Scalar sigma, Scalar curvature = Scalar(1))
      : d_(d), sigma_(sigma), curvature_(curvature) {
    if (d < 1) throw DimensionError("langevin-tanh needs d >= 1");
  }

  std::string name() const override { return "langevin-tanh"; }
  Index state_dim() const override { return d_; }
  Index noise_dim() const override { return d_; }
  Scalar sigma() const { return sigma_; }
  Scalar curvature() const { return curvature_; }

  void drift(Scalar, const ConstVecRef& x, VecRef out) const override {
    using std::tanh;
    for (Index i = 0; i < d_; ++i) out(i) = -curvature_ * x(i) - tanh(x(i));
  }
  void diffusion(Scalar, const ConstVecRef&, MatRef out) const override {
    out.setIdentity();
    out *= sigma_;
  }
  void drift_grad(Scalar, const ConstVecRef& x, MatRef out) const override {
    out.setZero();
    for (Index i = 0; i < d_; ++i) out(i, i) = -curvature_ - sech2(x(i));
  }
  void diffusion_grad(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }
  void drift_hess(Scalar, const ConstVecRef& x, MatRef out) const override {
    using std::tanh;
    out.setZero();
    for (Index i = 0; i < d_; ++i) out(pair_row(i, i, d_), i) = 2 * sech2(x(i)) * tanh(x(i));
  }
  void diffusion_hess(Scalar, const ConstVecRef&, Index, MatRef out) const override {
    out.setZero();
  }

  ModelTraits traits() const override { return {true, false}; }
  ModelMetadata metadata() const override {
    const double s2 = double(sigma_ * sigma_) * double(d_);
    return {"langevin-tanh",
            {{"sigma", double(sigma_)}, {"curvature", double(curvature_)}, {"dim", double(d_)}},
            GrowthParameters{s2, 0, 0, 0, 0, double(curvature_)}};
  }

 private:
  static Scalar sech2(Scalar v) {
    using std::cosh;
    const Scalar c = cosh(v);
    return Scalar(1) / (c * c);
  }

  Index d_;
  Scalar sigma_;
  Scalar curvature_;
};

// b + delta * tanh (componentwise), same diffusion.
template <typename Scalar>
class TanhDriftPerturbation final : public Model<Scalar> {
 public:
  using typename Model<Scalar>::ConstVecRef;
  using typename Model<Scalar>::VecRef;
  using typename Model<Scalar>::MatRef;

  TanhDriftPerturbation(ModelPtr<Scalar> base, Scalar delta)
      : base_(std::move(base)), delta_(delta) {}

  std::string name() const override { return base_->name() + "+tanh"; }
  Index state_dim() const override { return base_->state_dim(); }
  Index noise_dim() const override { return base_->noise_dim(); }

  void drift(Scalar t, const ConstVecRef& x, VecRef out) const override {
    using std::tanh;
    base_->drift(t, x, out);
    for (Index i = 0; i < x.size(); ++i) out(i) += delta_ * tanh(x(i));
  }
  void diffusion(Scalar t, const ConstVecRef& x, MatRef out) const override {
    base_->diffusion(t, x, out);
  }
  void drift_grad(Scalar t, const ConstVecRef& x, MatRef out) const override {
    using std::cosh;
    base_->drift_grad(t, x, out);
    for (Index i = 0; i < x.size(); ++i) out(i, i) += delta_ / (cosh(x(i)) * cosh(x(i)));
  }
  void diffusion_grad(Scalar t, const ConstVecRef& x, Index k, MatRef out) const override {
    base_->diffusion_grad(t, x, k, out);
  }
  void drift_hess(Scalar t, const ConstVecRef& x, MatRef out) const override {
    using std::cosh;
    using std::tanh;
    base_->drift_hess(t, x, out);
    const Index d = x.size();
    for (Index i = 0; i < d; ++i) {
      const Scalar c = cosh(x(i));
      out(pair_row(i, i, d), i) -= 2 * delta_ * tanh(x(i)) / (c * c);
    }
  }
  void diffusion_hess(Scalar t, const ConstVecRef& x, Index k, MatRef out) const override {
    base_->diffusion_hess(t, x, k, out);
  }

  ModelTraits traits() const override {
    return {base_->traits().constant_diffusion, delta_ == Scalar(0) && base_->traits().linear};
  }

 private:
  ModelPtr<Scalar> base_;
  Scalar delta_;
};

// Drift frozen on a mesh of width interval; consumed by integrate_frozen_drift.
template <typename Scalar>
struct FrozenDrift {
  ModelPtr<Scalar> model;
  Scalar interval;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

const std::vector<CatalogEntry>& model_catalog();
const std::vector<CatalogEntry>& experiment_catalog();

using ParamMap = std::map<std::string, double>;

// Builds a catalog model from its table; throws ConfigError naming the missing key.
ModelPtr<double> make_model(const std::string& kind, const ParamMap& params,
                            const std::string& table = "model");

}  // namespace flowlab
