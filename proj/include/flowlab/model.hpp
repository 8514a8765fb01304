#pragma once

#include "flowlab/errors.hpp"
#include "flowlab/tensor.hpp"

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace flowlab {

struct ModelTraits {
  bool constant_diffusion = false;   // grad sigma_k == 0
  bool linear = false;               // all second derivatives vanish
};

// Growth parameters of ||sigma||_F^2 <= a0 + a1 |x| + a2 |x|^2, <x,b> <= b0 + b1 |x| - b2 |x|^2.
struct GrowthParameters {
  double alpha0 = 0, alpha1 = 0, alpha2 = 0;
  double beta0 = 0, beta1 = 0, beta2 = 0;
};

struct ModelMetadata {
  std::string kind;
  std::map<std::string, double> params;
  std::optional<GrowthParameters> growth;
};

// Drift b and diffusion sigma (d x r) with analytic derivatives.
// Gradients use the column convention (grad h)_{i,k} = d_i h^k and Hessians
// are (d*d) x d tensors with row i + d*j.
template <typename Scalar>
class Model {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;
  using ConstVecRef = Eigen::Ref<const Vec>;
  using VecRef = Eigen::Ref<Vec>;
  using MatRef = Eigen::Ref<Mat>;

  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual Index state_dim() const = 0;
  virtual Index noise_dim() const = 0;

  virtual void drift(Scalar t, const ConstVecRef& x, VecRef out) const = 0;
  virtual void diffusion(Scalar t, const ConstVecRef& x, MatRef out) const = 0;
  virtual void drift_grad(Scalar t, const ConstVecRef& x, MatRef out) const = 0;
  virtual void diffusion_grad(Scalar t, const ConstVecRef& x, Index k, MatRef out) const = 0;
  virtual void drift_hess(Scalar t, const ConstVecRef& x, MatRef out) const = 0;
  virtual void diffusion_hess(Scalar t, const ConstVecRef& x, Index k, MatRef out) const = 0;

  virtual ModelTraits traits() const { return {}; }
  virtual ModelMetadata metadata() const { return {name(), {}, std::nullopt}; }
};

template <typename Scalar>
using ModelPtr = std::shared_ptr<const Model<Scalar>>;

template <typename Scalar>
struct DerivativeBundle {
  Vector<Scalar> b;
  Matrix<Scalar> sigma;
  Matrix<Scalar> drift_grad;
  std::vector<Matrix<Scalar>> diffusion_grad;
  Tensor21<Scalar> drift_hess;
  std::vector<Tensor21<Scalar>> diffusion_hess;

  Matrix<Scalar> a() const { return sigma * sigma.transpose(); }
};

template <typename Scalar>
std::string describe_point(Scalar t, const Vector<Scalar>& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(t=" << double(t) << ", x=[";
  for (Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << double(x(i));
  os << "])";
  return os.str();
}

template <typename Scalar>
DerivativeBundle<Scalar> eval_derivatives(const Model<Scalar>& model, Scalar t,
                                          const Vector<Scalar>& x) {
  const Index d = model.state_dim(), r = model.noise_dim();
  if (x.size() != d) throw DimensionError("state has dimension " + std::to_string(x.size()) +
                                          ", model expects " + std::to_string(d));
  if (!x.allFinite() || !(t >= Scalar(0)))
    throw ModelEvaluationError("invalid evaluation point " + describe_point(t, x));
  DerivativeBundle<Scalar> out;
  out.b.resize(d);
  out.sigma.resize(d, r);
  out.drift_grad.resize(d, d);
  out.drift_hess.resize(d * d, d);
  model.drift(t, x, out.b);
  model.diffusion(t, x, out.sigma);
  model.drift_grad(t, x, out.drift_grad);
  model.drift_hess(t, x, out.drift_hess);
  bool finite = out.b.allFinite() && out.sigma.allFinite() && out.drift_grad.allFinite() &&
                out.drift_hess.allFinite();
  out.diffusion_grad.assign(r, Matrix<Scalar>(d, d));
  out.diffusion_hess.assign(r, Tensor21<Scalar>(d * d, d));
  for (Index k = 0; k < r; ++k) {
    model.diffusion_grad(t, x, k, out.diffusion_grad[k]);
    model.diffusion_hess(t, x, k, out.diffusion_hess[k]);
    finite = finite && out.diffusion_grad[k].allFinite() && out.diffusion_hess[k].allFinite();
  }
  if (!finite)
    throw ModelEvaluationError(model.name() + " produced non-finite output at " +
                               describe_point(t, x));
  return out;
}

template <typename Scalar>
class ModelPair {
 public:
  ModelPair(ModelPtr<Scalar> base, ModelPtr<Scalar> perturbed)
      : base_(std::move(base)), perturbed_(std::move(perturbed)) {
    if (!base_ || !perturbed_) throw DimensionError("model pair needs two models");
    if (base_->state_dim() != perturbed_->state_dim() ||
        base_->noise_dim() != perturbed_->noise_dim())
      throw DimensionError("model pair dimensions differ: " + base_->name() + " vs " +
                           perturbed_->name());
  }

  const Model<Scalar>& base() const { return *base_; }
  const Model<Scalar>& perturbed() const { return *perturbed_; }
  const ModelPtr<Scalar>& base_ptr() const { return base_; }
  const ModelPtr<Scalar>& perturbed_ptr() const { return perturbed_; }
  Index state_dim() const { return base_->state_dim(); }
  Index noise_dim() const { return base_->noise_dim(); }

 private:
  ModelPtr<Scalar> base_;
  ModelPtr<Scalar> perturbed_;
};

template <typename Scalar>
struct DeltaValues {
  Vector<Scalar> db;
  Matrix<Scalar> dsigma;
  Matrix<Scalar> da;
};

// Writes into preallocated buffers; sb/ss are scratch for the perturbed model.
template <typename Scalar>
void delta_eval_into(const ModelPair<Scalar>& pair, Scalar t,
                     const Vector<Scalar>& x, DeltaValues<Scalar>& out,
                     Vector<Scalar>& sb, Matrix<Scalar>& ss) {
  const Index d = pair.state_dim(), r = pair.noise_dim();
  out.db.resize(d);
  out.dsigma.resize(d, r);
  out.da.resize(d, d);
  sb.resize(d);
  ss.resize(d, r);
  pair.base().drift(t, x, out.db);
  pair.perturbed().drift(t, x, sb);
  out.db -= sb;
  pair.base().diffusion(t, x, out.dsigma);
  pair.perturbed().diffusion(t, x, ss);
  out.da.noalias() = out.dsigma * out.dsigma.transpose();
  out.da.noalias() -= ss * ss.transpose();
  out.dsigma -= ss;
}

template <typename Scalar>
DeltaValues<Scalar> delta_eval(const ModelPair<Scalar>& pair, Scalar t, const Vector<Scalar>& x) {
  if (x.size() != pair.state_dim()) throw DimensionError("state dimension mismatch in delta_eval");
  DeltaValues<Scalar> out;
  Vector<Scalar> sb;
  Matrix<Scalar> ss;
  delta_eval_into(pair, t, x, out, sb, ss);
  return out;
}

struct FdSample {
  double t;
  VectorXd x;
};

struct FdReport {
  double drift_grad = 0;
  double diffusion_grad = 0;
  double drift_hess = 0;
  double diffusion_hess = 0;
  double max() const {
    return std::max(std::max(drift_grad, diffusion_grad), std::max(drift_hess, diffusion_hess));
  }
  bool passed(double tol) const { return max() <= tol; }
};

namespace detail {
inline double scaled_error(const MatrixXd& analytic, const MatrixXd& numeric) {
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}
}  // namespace detail

inline FdReport finite_difference_check(const Model<double>& model,
                                        const std::vector<FdSample>& samples, double eps) {
  const Index d = model.state_dim(), r = model.noise_dim();
  FdReport rep;
  VectorXd bp(d), bm(d);
  MatrixXd sp(d, r), sm(d, r), gp(d, d), gm(d, d);
  for (const auto& s : samples) {
    const auto bundle = eval_derivatives(model, s.t, s.x);
    MatrixXd fd_b(d, d);
    std::vector<MatrixXd> fd_s(r, MatrixXd(d, d));
    MatrixXd fd_hb(d * d, d);
    std::vector<MatrixXd> fd_hs(r, MatrixXd(d * d, d));
    for (Index i = 0; i < d; ++i) {
      VectorXd xp = s.x, xm = s.x;
      xp(i) += eps;
      xm(i) -= eps;
      model.drift(s.t, xp, bp);
      model.drift(s.t, xm, bm);
      fd_b.row(i) = ((bp - bm) / (2 * eps)).transpose();
      model.diffusion(s.t, xp, sp);
      model.diffusion(s.t, xm, sm);
      for (Index k = 0; k < r; ++k)
        fd_s[k].row(i) = ((sp.col(k) - sm.col(k)) / (2 * eps)).transpose();
      model.drift_grad(s.t, xp, gp);
      model.drift_grad(s.t, xm, gm);
      MatrixXd dg = (gp - gm) / (2 * eps);
      for (Index j = 0; j < d; ++j) fd_hb.row(pair_row(i, j, d)) = dg.row(j);
      for (Index k = 0; k < r; ++k) {
        model.diffusion_grad(s.t, xp, k, gp);
        model.diffusion_grad(s.t, xm, k, gm);
        dg = (gp - gm) / (2 * eps);
        for (Index j = 0; j < d; ++j) fd_hs[k].row(pair_row(i, j, d)) = dg.row(j);
      }
    }
    rep.drift_grad = std::max(rep.drift_grad, detail::scaled_error(bundle.drift_grad, fd_b));
    rep.drift_hess = std::max(rep.drift_hess, detail::scaled_error(bundle.drift_hess, fd_hb));
    for (Index k = 0; k < r; ++k) {
      rep.diffusion_grad =
          std::max(rep.diffusion_grad, detail::scaled_error(bundle.diffusion_grad[k], fd_s[k]));
      rep.diffusion_hess =
          std::max(rep.diffusion_hess, detail::scaled_error(bundle.diffusion_hess[k], fd_hs[k]));
    }
  }
  return rep;
}

}  // namespace flowlab
