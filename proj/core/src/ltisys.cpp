#include "luenid/ltisys.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "luenid/error.hpp"

namespace luenid {

CanonicalTheta::CanonicalTheta(Vector a_coeffs, Vector b_coeffs)
    : a(std::move(a_coeffs)), b(std::move(b_coeffs)) {}

CanonicalTheta CanonicalTheta::from_stacked(const Vector& stacked) {
  if (stacked.size() == 0 || stacked.size() % 2 != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "stacked theta must have even positive length, got " +
                    std::to_string(stacked.size()));
  }
  const Eigen::Index n = stacked.size() / 2;
  return CanonicalTheta(stacked.head(n), stacked.tail(n));
}

Vector CanonicalTheta::stacked() const {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

void CanonicalTheta::validate() const {
  if (a.size() < 1 || a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "theta_a and theta_b must share length n >= 1 (got " +
                    std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "theta has non-finite entries");
  }
}

void StateSpace::validate() const {
  const Eigen::Index n = A.rows();
  if (n < 1 || A.cols() != n || B.size() != n || C.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "inconsistent (A, B, C) dimensions");
  }
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "state-space matrices have non-finite entries");
  }
}

StateSpace canonical_matrices(const CanonicalTheta& theta) {
  theta.validate();
  const Eigen::Index n = theta.order();
  StateSpace sys;
  sys.A = Matrix::Zero(n, n);
  sys.A.col(0) = -theta.a;
  if (n > 1) {
    sys.A.topRightCorner(n - 1, n - 1).setIdentity();
  }
  sys.B = theta.b;
  sys.C = RowVector::Unit(n, 0);
  return sys;
}

Matrix observability_matrix(const StateSpace& sys, Eigen::Index rows) {
  const Eigen::Index n = sys.order();
  Matrix obs(rows, n);
  RowVector row = sys.C;
  for (Eigen::Index i = 0; i < rows; ++i) {
    obs.row(i) = row;
    row = row * sys.A;
  }
  return obs;
}

Matrix observability_matrix(const StateSpace& sys) {
  return observability_matrix(sys, sys.order());
}

Matrix controllability_matrix(const StateSpace& sys) {
  const Eigen::Index n = sys.order();
  Matrix ctrb(n, n);
  Vector col = sys.B;
  for (Eigen::Index j = 0; j < n; ++j) {
    ctrb.col(j) = col;
    col = sys.A * col;
  }
  return ctrb;
}

Eigen::Index numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double threshold = rel_tol * s(0);
  return static_cast<Eigen::Index>((s.array() > threshold).count());
}

CanonicalForm to_canonical(const StateSpace& sys, double rel_tol) {
  sys.validate();
  const Eigen::Index n = sys.order();
  const Matrix obs = observability_matrix(sys, n);
  if (numerical_rank(obs, rel_tol) < n) {
    throw Error(ErrorCode::kNotObservable, "observability matrix is rank deficient");
  }

  // Cayley-Hamilton: C A^n = -(a_n C + a_{n-1} C A + ... + a_1 C A^{n-1}).
  const RowVector ca_n = obs.row(n - 1) * sys.A;
  const Vector reversed = obs.transpose().colPivHouseholderQr().solve(-ca_n.transpose());

  CanonicalForm out;
  out.theta.a = reversed.reverse();

  out.Q.resize(n, n);
  out.Q.row(0) = sys.C;
  for (Eigen::Index i = 1; i < n; ++i) {
    out.Q.row(i) = out.Q.row(i - 1) * sys.A + out.theta.a(i - 1) * sys.C;
  }
  out.theta.b = out.Q * sys.B;
  return out;
}

void sort_spectrum(ComplexList& values) {
  std::sort(values.begin(), values.end(), [](const Complex& l, const Complex& r) {
    if (l.real() != r.real()) return l.real() < r.real();
    return l.imag() < r.imag();
  });
}

ComplexList spectrum(const Vector& theta_a) {
  const Eigen::Index n = theta_a.size();
  ComplexList roots;
  if (n == 0) return roots;
  if (!theta_a.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "theta_a has non-finite entries");
  }

  Matrix companion = Matrix::Zero(n, n);
  companion.col(0) = -theta_a;
  if (n > 1) companion.topRightCorner(n - 1, n - 1).setIdentity();

  Eigen::EigenSolver<Matrix> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  roots.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) roots.push_back(ev(i));
  sort_spectrum(roots);
  return roots;
}

Vector markov_parameters(const StateSpace& sys) {
  sys.validate();
  return observability_matrix(sys) * sys.B;
}

Vector markov_parameters(const CanonicalTheta& theta) {
  return markov_parameters(canonical_matrices(theta));
}

Matrix sylvester_matrix(const CanonicalTheta& theta) {
  theta.validate();
  const Eigen::Index n = theta.order();
  Matrix m = Matrix::Zero(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Column j of each block starts at row j with the highest-index coefficient.
    for (Eigen::Index k = 0; k < n; ++k) {
      m(j + k, j) = theta.b(n - 1 - k);
      m(j + k, n + j) = theta.a(n - 1 - k);
    }
    m(j + n, n + j) = 1.0;
  }
  return m;
}

ControllabilityResult is_controllable(const CanonicalTheta& theta, double tol) {
  Eigen::JacobiSVD<Matrix> svd(sylvester_matrix(theta));
  ControllabilityResult out;
  out.sigma_min = svd.singularValues().minCoeff();
  out.controllable = out.sigma_min > tol;
  return out;
}

}  // namespace luenid
