#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace flowlab {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// (2,1)-tensor T_{(i,j),k} stored as a (d*d) x q matrix, row i + d*j.
template <typename Scalar>
using Tensor21 = Matrix<Scalar>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

inline Index pair_row(Index i, Index j, Index d) { return i + d * j; }

// (A (x) B)_{(i,j),(k,l)} = A_{i,k} B_{j,l}
template <typename DerivedA, typename DerivedB, typename DerivedOut>
void otimes(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
            const Eigen::MatrixBase<DerivedOut>& out_) {
  auto& out = const_cast<Eigen::MatrixBase<DerivedOut>&>(out_);
  const Index p = a.rows(), q = a.cols();
  for (Index l = 0; l < q; ++l)
    for (Index k = 0; k < q; ++k)
      for (Index j = 0; j < p; ++j) {
        const auto bjl = b(j, l);
        for (Index i = 0; i < p; ++i) out(i + p * j, k + q * l) = a(i, k) * bjl;
      }
}

template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> otimes(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  Matrix<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  otimes(a, b, out);
  return out;
}

// (T' a)_k = sum_{i,j} T_{(i,j),k} a_{i,j}
template <typename DerivedT, typename DerivedA>
Vector<typename DerivedT::Scalar> contract(const Eigen::MatrixBase<DerivedT>& t,
                                           const Eigen::MatrixBase<DerivedA>& a) {
  using Scalar = typename DerivedT::Scalar;
  Matrix<Scalar> ac = a;
  return t.transpose() * Eigen::Map<const Vector<Scalar>>(ac.data(), ac.size());
}

// Reshape a d*d vector indexed i + d*j into the d x d matrix (i,j).
template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Index d) {
  Vector<typename Derived::Scalar> vc = v;
  return Eigen::Map<const Matrix<typename Derived::Scalar>>(vc.data(), d, d);
}

template <typename Derived>
typename Derived::Scalar frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Matrix<Scalar> g = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g, Eigen::EigenvaluesOnly);
  using std::sqrt;
  return sqrt(std::max(Scalar(0), es.eigenvalues().maxCoeff()));
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetric_part(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

// lambda_max of the symmetric part
template <typename Derived>
typename Derived::Scalar log_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> s = symmetric_part(m);
  if (s.rows() == 1) return s(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar hessian_symmetry_defect(const Eigen::MatrixBase<Derived>& t, Index d) {
  using Scalar = typename Derived::Scalar;
  Scalar worst(0);
  for (Index k = 0; k < t.cols(); ++k)
    for (Index i = 0; i < d; ++i)
      for (Index j = i + 1; j < d; ++j) {
        using std::abs;
        worst = std::max(worst, Scalar(abs(t(pair_row(i, j, d), k) - t(pair_row(j, i, d), k))));
      }
  return worst;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace flowlab
