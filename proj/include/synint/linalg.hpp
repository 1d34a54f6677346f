#pragma once

// SVD-based kernels: minimum-norm least squares, hard singular value
// thresholding, spectral-energy rank and right singular bases. Everything is
// templated on the scalar type of the Eigen expression passed in.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace synint::linalg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultRcond = 1e-10;

/// Thin SVD with a deterministic sign convention: the largest-magnitude entry
/// of every right singular vector is nonnegative.
template <typename Scalar>
struct SvdFactors {
  MatrixX<Scalar> u;
  VectorX<Scalar> s;
  MatrixX<Scalar> vt;

  Eigen::Index size() const { return s.size(); }
  MatrixX<Scalar> reconstruct(Eigen::Index k) const {
    return u.leftCols(k) * s.head(k).asDiagonal() * vt.topRows(k);
  }
};

template <typename Derived>
SvdFactors<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& matrix) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> dense = matrix;
  Eigen::JacobiSVD<MatrixX<Scalar>, Eigen::ColPivHouseholderQRPreconditioner> svd(
      dense, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors<Scalar> out{svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};
  for (Eigen::Index k = 0; k < out.s.size(); ++k) {
    Eigen::Index pivot = 0;
    out.vt.row(k).cwiseAbs().maxCoeff(&pivot);
    if (out.vt(k, pivot) < Scalar(0)) {
      out.vt.row(k) *= Scalar(-1);
      out.u.col(k) *= Scalar(-1);
    }
  }
  return out;
}

/// Number of singular values that are nonzero at working precision.
template <typename Scalar>
Eigen::Index numerical_rank(const VectorX<Scalar>& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.size() == 0 || !(s(0) > Scalar(0))) return 0;
  const Scalar cutoff =
      s(0) * Scalar(std::max(rows, cols)) * std::numeric_limits<Scalar>::epsilon();
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > cutoff) ++k;
  return k;
}

/// Smallest k whose leading squared singular values reach `energy` of the
/// total, capped at the numerical rank. Zero spectrum gives 0.
template <typename Scalar>
Eigen::Index energy_rank(const VectorX<Scalar>& s, double energy, Eigen::Index rows,
                         Eigen::Index cols) {
  const Eigen::Index cap = numerical_rank<Scalar>(s, rows, cols);
  if (cap == 0) return 0;
  const Scalar total = s.squaredNorm();
  // Slack absorbs summation roundoff so that energy = 1 and exact ties
  // resolve to the first index reaching the threshold.
  const Scalar slack = Scalar(8) * Scalar(s.size()) * std::numeric_limits<Scalar>::epsilon() * total;
  const Scalar target = Scalar(energy) * total - slack;
  Scalar running(0);
  for (Eigen::Index k = 0; k < cap; ++k) {
    running += s(k) * s(k);
    if (running >= target) return k + 1;
  }
  return cap;
}

template <typename Derived>
Eigen::Index effective_rank(const Eigen::MatrixBase<Derived>& matrix, double energy) {
  if (matrix.size() == 0) return 0;
  const auto svd = thin_svd(matrix);
  return energy_rank(svd.s, energy, matrix.rows(), matrix.cols());
}

/// Rank-k truncation keeping at least `energy` of the squared Frobenius norm.
template <typename Derived>
MatrixX<typename Derived::Scalar> hsvt(const Eigen::MatrixBase<Derived>& matrix, double energy) {
  using Scalar = typename Derived::Scalar;
  if (matrix.size() == 0) return MatrixX<Scalar>(matrix.rows(), matrix.cols());
  const auto svd = thin_svd(matrix);
  const Eigen::Index k = energy_rank(svd.s, energy, matrix.rows(), matrix.cols());
  if (k == 0) return MatrixX<Scalar>::Zero(matrix.rows(), matrix.cols());
  return svd.reconstruct(k);
}

/// Column-orthonormal n x k basis of the leading right singular vectors,
/// k = effective_rank(matrix, energy).
template <typename Derived>
MatrixX<typename Derived::Scalar> right_singular_basis(const Eigen::MatrixBase<Derived>& matrix,
                                                       double energy) {
  using Scalar = typename Derived::Scalar;
  if (matrix.size() == 0) return MatrixX<Scalar>(matrix.cols(), 0);
  const auto svd = thin_svd(matrix);
  const Eigen::Index k = energy_rank(svd.s, energy, matrix.rows(), matrix.cols());
  return svd.vt.topRows(k).transpose();
}

template <typename Scalar>
struct LeastSquaresSolution {
  VectorX<Scalar> weights;
  Eigen::Index rank = 0;
  bool degenerate = false;  // design was numerically zero
};

/// Minimum-norm least-squares solution design^+ * target. Singular values
/// below rcond * s_max are treated as zero, so the weights lie in the row
/// space of the design.
template <typename DerivedA, typename DerivedB>
LeastSquaresSolution<typename DerivedA::Scalar> pseudoinverse_solve(
    const Eigen::MatrixBase<DerivedA>& design, const Eigen::MatrixBase<DerivedB>& target,
    double rcond = kDefaultRcond) {
  using Scalar = typename DerivedA::Scalar;
  eigen_assert(design.rows() == target.rows());
  LeastSquaresSolution<Scalar> out;
  out.weights = VectorX<Scalar>::Zero(design.cols());
  if (design.size() == 0) {
    out.degenerate = true;
    return out;
  }
  const auto svd = thin_svd(design);
  if (!(svd.s.size() > 0 && svd.s(0) > Scalar(0))) {
    out.degenerate = true;
    return out;
  }
  const Scalar cutoff = Scalar(rcond) * svd.s(0);
  Eigen::Index k = 0;
  while (k < svd.s.size() && svd.s(k) > cutoff) ++k;
  out.rank = k;
  const VectorX<Scalar> projected = svd.u.leftCols(k).transpose() * target;
  out.weights = svd.vt.topRows(k).transpose() *
                (projected.array() / svd.s.head(k).array()).matrix();
  return out;
}

}  // namespace synint::linalg
