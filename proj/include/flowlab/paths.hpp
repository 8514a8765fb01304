#pragma once

#include "flowlab/brownian.hpp"
#include "flowlab/model.hpp"

#include <limits>
#include <vector>

namespace flowlab {

inline constexpr double default_explosion_cap = 1e8;

template <typename Scalar>
struct FlowPath {
  Index first_index = 0;        // grid node of states.row(0)
  Matrix<Scalar> states;        // rows are nodes first_index..n
  bool diverged = false;
  Index divergence_node = -1;

  Index nodes() const { return states.rows(); }
  Vector<Scalar> at(Index node) const { return states.row(node - first_index).transpose(); }
  Vector<Scalar> terminal() const { return states.row(states.rows() - 1).transpose(); }
};

template <typename Scalar>
struct TangentPath {
  std::vector<Matrix<Scalar>> matrices;
};

template <typename Scalar>
struct HessianPath {
  std::vector<Tensor21<Scalar>> tensors;
};

template <typename Scalar>
struct VariationalPaths {
  FlowPath<Scalar> flow;
  TangentPath<Scalar> tangent;   // empty unless requested
  HessianPath<Scalar> hessian;   // empty unless requested
};

enum class Order { flow = 0, tangent = 1, hessian = 2 };

template <typename Scalar>
struct VariationalState {
  Vector<Scalar> x;
  Matrix<Scalar> J;
  Tensor21<Scalar> H;
  bool diverged = false;
  Index divergence_node = -1;

  void reset(const Eigen::Ref<const Vector<Scalar>>& y, Order order) {
    const Index d = y.size();
    x = y;
    if (order >= Order::tangent) J.setIdentity(d, d);
    if (order >= Order::hessian) H.setZero(d * d, d);
    diverged = false;
    divergence_node = -1;
  }
};

// Joint Euler step for (X, grad X, grad^2 X) with all coefficients at the left node.
template <typename Scalar>
class EulerStepper {
 public:
  explicit EulerStepper(const Model<Scalar>& model, Scalar cap = Scalar(default_explosion_cap))
      : model_(model), traits_(model.traits()), cap_(cap) {
    const Index d = model.state_dim(), r = model.noise_dim();
    b_.resize(d);
    sig_.resize(d, r);
    gb_.resize(d, d);
    gs_.assign(r, Matrix<Scalar>::Zero(d, d));
    hb_.resize(d * d, d);
    hs_.assign(r, Tensor21<Scalar>::Zero(d * d, d));
    m_.resize(d, d);
    src_.resize(d * d, d);
    jj_.resize(d * d, d * d);
    tmp_j_.resize(d, d);
    tmp_h_.resize(d * d, d);
    dw_.resize(r);
  }

  const Model<Scalar>& model() const { return model_; }

  void step(Scalar t, Scalar h, const Eigen::Ref<const Eigen::RowVectorXd>& dw,
            VariationalState<Scalar>& s, Order order) {
    const Index d = model_.state_dim(), r = model_.noise_dim();
    for (Index k = 0; k < r; ++k) dw_(k) = Scalar(dw(k));
    model_.drift(t, s.x, b_);
    model_.diffusion(t, s.x, sig_);
    if (order >= Order::tangent) {
      model_.drift_grad(t, s.x, gb_);
      m_.setIdentity();
      m_ += gb_ * h;
      if (!traits_.constant_diffusion)
        for (Index k = 0; k < r; ++k) {
          model_.diffusion_grad(t, s.x, k, gs_[k]);
          m_ += gs_[k] * dw_(k);
        }
      if (order == Order::hessian) {
        tmp_h_.noalias() = s.H * m_;
        if (!traits_.linear) {
          model_.drift_hess(t, s.x, hb_);
          src_ = hb_ * h;
          if (!traits_.constant_diffusion)
            for (Index k = 0; k < r; ++k) {
              model_.diffusion_hess(t, s.x, k, hs_[k]);
              src_ += hs_[k] * dw_(k);
            }
          otimes(s.J, s.J, jj_);
          tmp_h_.noalias() += jj_ * src_;
        }
        s.H.swap(tmp_h_);
      }
      tmp_j_.noalias() = s.J * m_;
      s.J.swap(tmp_j_);
    }
    s.x += b_ * h;
    s.x.noalias() += sig_ * dw_;
    (void)d;
  }

  bool exploded(const VariationalState<Scalar>& s) const {
    using std::abs;
    if (!s.x.allFinite()) return true;
    return s.x.cwiseAbs().maxCoeff() > cap_;
  }

  // Steps nodes [from, to) of the grid; stops on explosion.
  void propagate(const BrownianGrid& grid, Index from, Index to, VariationalState<Scalar>& s,
                 Order order) {
    const Scalar h = Scalar(grid.step());
    for (Index k = from; k < to && !s.diverged; ++k) {
      step(Scalar(grid.time(k)), h, grid.increments.row(k), s, order);
      if (exploded(s)) {
        s.diverged = true;
        s.divergence_node = k + 1;
      }
    }
  }

 private:
  const Model<Scalar>& model_;
  ModelTraits traits_;
  Scalar cap_;
  Vector<Scalar> b_;
  Matrix<Scalar> sig_, gb_, m_, jj_, tmp_j_;
  std::vector<Matrix<Scalar>> gs_;
  Tensor21<Scalar> hb_, src_, tmp_h_;
  std::vector<Tensor21<Scalar>> hs_;
  Vector<Scalar> dw_;
};

template <typename Scalar>
void check_state(const Model<Scalar>& model, const Eigen::Ref<const Vector<Scalar>>& x,
                 const BrownianGrid& grid) {
  if (x.size() != model.state_dim())
    throw DimensionError("initial state has dimension " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.state_dim()));
  if (grid.noise_dim() != model.noise_dim())
    throw DimensionError("grid noise dimension " + std::to_string(grid.noise_dim()) +
                         " differs from model noise dimension " +
                         std::to_string(model.noise_dim()));
}

// Integrates from node k with state y on the same increments.
template <typename Scalar>
VariationalPaths<Scalar> restart_flow(const Model<Scalar>& model, const BrownianGrid& grid,
                                      Index from_index, const Vector<Scalar>& y,
                                      bool want_tangent, bool want_hessian,
                                      Scalar cap = Scalar(default_explosion_cap)) {
  check_state<Scalar>(model, y, grid);
  if (from_index < 0 || from_index > grid.steps)
    throw std::out_of_range("restart index " + std::to_string(from_index) + " outside [0, " +
                            std::to_string(grid.steps) + "]");
  const Order order = want_hessian ? Order::hessian : want_tangent ? Order::tangent : Order::flow;
  const Index d = model.state_dim();
  const Index nodes = grid.steps - from_index + 1;
  VariationalPaths<Scalar> out;
  out.flow.first_index = from_index;
  out.flow.states.resize(nodes, d);
  VariationalState<Scalar> s;
  s.reset(y, order);
  EulerStepper<Scalar> stepper(model, cap);
  out.flow.states.row(0) = s.x.transpose();
  if (order >= Order::tangent) out.tangent.matrices.push_back(s.J);
  if (order >= Order::hessian) out.hessian.tensors.push_back(s.H);
  const Scalar h = Scalar(grid.step());
  for (Index k = from_index; k < grid.steps; ++k) {
    const Index row = k - from_index + 1;
    if (s.diverged) {
      out.flow.states.row(row).setConstant(std::numeric_limits<Scalar>::quiet_NaN());
      continue;
    }
    stepper.step(Scalar(grid.time(k)), h, grid.increments.row(k), s, order);
    out.flow.states.row(row) = s.x.transpose();
    if (order >= Order::tangent) out.tangent.matrices.push_back(s.J);
    if (order >= Order::hessian) out.hessian.tensors.push_back(s.H);
    if (stepper.exploded(s)) {
      s.diverged = true;
      s.divergence_node = k + 1;
    }
  }
  out.flow.diverged = s.diverged;
  out.flow.divergence_node = s.divergence_node;
  return out;
}

template <typename Scalar>
FlowPath<Scalar> integrate_flow(const Model<Scalar>& model, const BrownianGrid& grid,
                                const Vector<Scalar>& x,
                                Scalar cap = Scalar(default_explosion_cap)) {
  return restart_flow(model, grid, 0, x, false, false, cap).flow;
}

template <typename Scalar>
VariationalPaths<Scalar> integrate_tangent(const Model<Scalar>& model, const BrownianGrid& grid,
                                           const Vector<Scalar>& x,
                                           Scalar cap = Scalar(default_explosion_cap)) {
  return restart_flow(model, grid, 0, x, true, false, cap);
}

template <typename Scalar>
VariationalPaths<Scalar> integrate_hessian(const Model<Scalar>& model, const BrownianGrid& grid,
                                           const Vector<Scalar>& x,
                                           Scalar cap = Scalar(default_explosion_cap)) {
  return restart_flow(model, grid, 0, x, true, true, cap);
}

// Drift argument frozen at the last multiple of H; diffusion uses the current state.
template <typename Scalar>
FlowPath<Scalar> integrate_frozen_drift(const Model<Scalar>& model, const BrownianGrid& grid,
                                        const Vector<Scalar>& x, Scalar H,
                                        Scalar cap = Scalar(default_explosion_cap)) {
  check_state<Scalar>(model, x, grid);
  const Index m = mesh_ratio(double(H), grid.step(), "freeze interval");
  const Index d = model.state_dim(), r = model.noise_dim();
  FlowPath<Scalar> out;
  out.states.resize(grid.steps + 1, d);
  Vector<Scalar> cur = x, frozen(d), dw(r);
  Matrix<Scalar> sig(d, r);
  out.states.row(0) = cur.transpose();
  const Scalar h = Scalar(grid.step());
  for (Index k = 0; k < grid.steps; ++k) {
    if (out.diverged) {
      out.states.row(k + 1).setConstant(std::numeric_limits<Scalar>::quiet_NaN());
      continue;
    }
    const Scalar t = Scalar(grid.time(k));
    if (k % m == 0) model.drift(t, cur, frozen);
    model.diffusion(t, cur, sig);
    for (Index j = 0; j < r; ++j) dw(j) = Scalar(grid.increments(k, j));
    cur += frozen * h;
    cur.noalias() += sig * dw;
    out.states.row(k + 1) = cur.transpose();
    using std::abs;
    if (!cur.allFinite() || cur.cwiseAbs().maxCoeff() > cap) {
      out.diverged = true;
      out.divergence_node = k + 1;
    }
  }
  return out;
}

}  // namespace flowlab
