#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mub/errors.hpp"

namespace mub {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Solves (A + damping*I) p = b with partial-pivot LU. The damping term is
/// added to the diagonal before factorization.
template <typename DerivedA, typename DerivedB>
DenseVector<typename DerivedA::Scalar> lu_solve(const Eigen::MatrixBase<DerivedA>& A,
                                                const Eigen::MatrixBase<DerivedB>& b,
                                                typename DerivedA::Scalar damping = 0) {
  using Scalar = typename DerivedA::Scalar;
  if (A.rows() != A.cols()) {
    throw ShapeError("lu_solve: matrix is " + std::to_string(A.rows()) + "x" +
                     std::to_string(A.cols()) + ", expected square");
  }
  if (b.size() != A.rows()) {
    throw ShapeError("lu_solve: right side has " + std::to_string(b.size()) +
                     " entries, expected " + std::to_string(A.rows()));
  }
  DenseMatrix<Scalar> M = A;
  M.diagonal().array() += damping;
  Eigen::PartialPivLU<DenseMatrix<Scalar>> lu(M);
  if (M.rows() > 0) {
    const Scalar min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot >= Scalar(1e-30))) {
      throw SingularSystemError("lu_solve: singular pivot in damped system");
    }
  }
  return lu.solve(b);
}

template <typename Scalar>
struct EigenDecomposition {
  DenseVector<Scalar> eigenvalues;   // ascending
  DenseMatrix<Scalar> eigenvectors;  // columns, orthonormal
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
/// symmetrized first; throws NumericalTrouble after max_sweeps sweeps.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& input,
                                                     int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  if (input.rows() != input.cols()) throw ShapeError("sym_eig: matrix must be square");
  const Eigen::Index n = input.rows();
  DenseMatrix<Scalar> a = (input + input.transpose()) / Scalar(2);
  DenseMatrix<Scalar> v = DenseMatrix<Scalar>::Identity(n, n);
  const Scalar scale = a.norm();
  const Scalar target = std::numeric_limits<Scalar>::epsilon() * scale;

  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) s += a(p, q) * a(p, q);
    return std::sqrt(Scalar(2) * s);
  };

  bool converged = off_norm() <= target;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= target;
  }
  if (!converged) {
    throw NumericalTrouble("sym_eig: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  EigenDecomposition<Scalar> out{DenseVector<Scalar>(n), DenseMatrix<Scalar>(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Nearest PSD matrix in Frobenius norm: V max(Lambda, 0) V^T.
/// Backed by Eigen's tridiagonal QR solver, which is the one used in the
/// conic solver's inner loop.
template <typename Scalar>
class PsdProjector {
 public:
  // Projects the symmetric matrix in place; returns the smallest eigenvalue seen.
  Scalar project(DenseMatrix<Scalar>& a) {
    solver_.compute(a, Eigen::ComputeEigenvectors);
    if (solver_.info() != Eigen::Success) {
      throw NumericalTrouble("psd_project: eigensolver failed");
    }
    const auto& values = solver_.eigenvalues();
    const auto& vectors = solver_.eigenvectors();
    const Scalar min_value = values.size() > 0 ? values[0] : Scalar(0);
    Eigen::Index first_positive = 0;
    while (first_positive < values.size() && values[first_positive] <= Scalar(0)) ++first_positive;
    const Eigen::Index k = values.size() - first_positive;
    if (k == 0) {
      a.setZero();
    } else {
      auto basis = vectors.rightCols(k);
      scaled_ = basis * values.tail(k).cwiseSqrt().asDiagonal();
      a.noalias() = scaled_ * scaled_.transpose();
    }
    return min_value;
  }

 private:
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> solver_;
  DenseMatrix<Scalar> scaled_;
};

template <typename Derived>
DenseMatrix<typename Derived::Scalar> psd_project(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  if (input.rows() != input.cols()) throw ShapeError("psd_project: matrix must be square");
  DenseMatrix<Scalar> a = (input + input.transpose()) / Scalar(2);
  PsdProjector<Scalar> projector;
  projector.project(a);
  return a;
}

}  // namespace mub
