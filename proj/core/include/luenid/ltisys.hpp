#pragma once

#include "luenid/types.hpp"

namespace luenid {

/// Unknown parameters of the observable canonical realization.
///
/// The realization is
///
///   A(theta) = [ -theta_a | I_{n-1} ; 0 ],  B(theta) = theta_b,  C = e_1^T
///
/// so that det(sI - A) = s^n + a_1 s^{n-1} + ... + a_n.
struct CanonicalTheta {
  Vector a;  // denominator coefficients, length n
  Vector b;  // numerator coefficients, length n

  CanonicalTheta() = default;
  CanonicalTheta(Vector a_coeffs, Vector b_coeffs);

  /// Stacked (theta_a, theta_b), length 2n.
  static CanonicalTheta from_stacked(const Vector& stacked);

  Eigen::Index order() const { return a.size(); }
  Vector stacked() const;

  /// Throws kDimensionMismatch / kInvalidArgument on broken invariants.
  void validate() const;
};

struct StateSpace {
  Matrix A;
  Vector B;
  RowVector C;

  Eigen::Index order() const { return A.rows(); }
  void validate() const;
};

struct CanonicalForm {
  CanonicalTheta theta;
  Matrix Q;  // change of basis: A_c = Q A Q^{-1}
};

struct ControllabilityResult {
  bool controllable = false;
  double sigma_min = 0.0;
};

StateSpace canonical_matrices(const CanonicalTheta& theta);

/// Rows C, CA, ..., CA^{rows-1}.
Matrix observability_matrix(const StateSpace& sys, Eigen::Index rows);
Matrix observability_matrix(const StateSpace& sys);

/// Columns B, AB, ..., A^{n-1}B.
Matrix controllability_matrix(const StateSpace& sys);

/// Numerical rank with threshold rel_tol * sigma_max.
Eigen::Index numerical_rank(const Matrix& m, double rel_tol = 1e-8);

/// Converts an observable realization into canonical form. Throws
/// kNotObservable when the observability matrix is rank deficient.
CanonicalForm to_canonical(const StateSpace& sys, double rel_tol = 1e-8);

/// Roots of s^n + a_1 s^{n-1} + ... + a_n from the companion matrix, sorted by
/// real part then imaginary part.
ComplexList spectrum(const Vector& theta_a);

/// O_n B = [CB, CAB, ..., CA^{n-1}B]^T.
Vector markov_parameters(const StateSpace& sys);
Vector markov_parameters(const CanonicalTheta& theta);

/// 2n x 2n Sylvester (resultant) matrix of the pair (theta_a, theta_b). The
/// left n columns carry theta_b shifted down one row per column, the right n
/// columns carry theta_a followed by a trailing 1.
Matrix sylvester_matrix(const CanonicalTheta& theta);

ControllabilityResult is_controllable(const CanonicalTheta& theta, double tol = 1e-8);

/// Sorts in place by (real, imag).
void sort_spectrum(ComplexList& values);

}  // namespace luenid
