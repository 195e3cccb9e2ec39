#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "mhq/error.hpp"

namespace mhq {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

/// Largest |a_ij - a_ji| relative to max(1, max |a_ij|).
inline double relative_asymmetry(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  explicit SymmetricEigen(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw ValidationError("symmetric eigendecomposition failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  }

  template <class F>
  Eigen::MatrixXd apply(F&& f) const {
    const Eigen::VectorXd mapped = values.unaryExpr(std::forward<F>(f));
    return vectors * mapped.asDiagonal() * vectors.transpose();
  }
};

/// Principal matrix logarithm of an SPD matrix, via the symmetric eigendecomposition.
inline Eigen::MatrixXd spd_log_matrix(const Eigen::MatrixXd& x) {
  if (x.rows() != x.cols() || x.size() == 0) throw ValidationError("spd_log_matrix: matrix must be square");
  if (!x.allFinite()) throw ValidationError("spd_log_matrix: non-finite entry");
  if (relative_asymmetry(x) > 1e-10) throw ValidationError("spd_log_matrix: matrix is not symmetric");
  const SymmetricEigen eig(symmetrize(x));
  if (eig.values.minCoeff() <= 0.0) {
    throw ValidationError("spd_log_matrix: eigenvalue " + std::to_string(eig.values.minCoeff()) + " is not positive");
  }
  return symmetrize(eig.apply([](double l) { return std::log(l); }));
}

/// Matrix exponential of a symmetric matrix; the result is SPD.
inline Eigen::MatrixXd spd_exp_matrix(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.size() == 0) throw ValidationError("spd_exp_matrix: matrix must be square");
  if (!s.allFinite()) throw ValidationError("spd_exp_matrix: non-finite entry");
  if (relative_asymmetry(s) > 1e-10) throw ValidationError("spd_exp_matrix: matrix is not symmetric");
  const SymmetricEigen eig(symmetrize(s));
  return symmetrize(eig.apply([](double l) { return std::exp(l); }));
}

/// x^{1/2} and x^{-1/2} of an SPD matrix, sharing one eigendecomposition.
struct SpdRoots {
  Eigen::MatrixXd sqrt;
  Eigen::MatrixXd inv_sqrt;

  explicit SpdRoots(const Eigen::MatrixXd& x) {
    const SymmetricEigen eig(x);
    sqrt = eig.apply([](double l) { return std::sqrt(l); });
    inv_sqrt = eig.apply([](double l) { return 1.0 / std::sqrt(l); });
  }
};

}  // namespace mhq
