#pragma once

#include <cstdint>
#include <optional>

#include "luenid/ltisys.hpp"
#include "luenid/types.hpp"

namespace luenid {

/// What the explicit inverse returns when P(z, w) is not well conditioned.
enum class InverseFallback {
  kZero,          // (x_hat, theta_hat) = 0
  kHoldPrevious,  // repeat the last valid estimate
};

/// Observer configuration. The effective filter eigenvalues are
/// k * lambda_tilde; r is the number of filters.
struct ObserverSpec {
  Vector lambda_tilde;
  double k = 1.0;
  Eigen::Index n = 1;
  double p_min = 0.0;
  InverseFallback fallback = InverseFallback::kZero;

  Eigen::Index r() const { return lambda_tilde.size(); }
  Vector eigenvalues() const { return k * lambda_tilde; }
  double slowest_eigenvalue() const { return eigenvalues().maxCoeff(); }

  /// Distinct negative lambda_tilde, k > 0, n >= 1, p_min >= 0.
  void validate() const;
};

/// Lambda_tilde = -(step, 2 step, ..., r step) (default).
Vector uniform_lambda_tilde(Eigen::Index r, double step = 0.1);

/// Axis-aligned box [lower, upper] in any dimension.
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  void validate() const;
  bool contains(const Vector& p) const;
};

/// Filter states driven by y (z) and u (w).
struct ObserverState {
  Vector z;
  Vector w;
};

/// Lambda = Diag(k lambda_tilde), L = 1_r.
struct ObserverMatrices {
  Vector lambda;
  Vector L;

  Matrix Lambda() const { return lambda.asDiagonal(); }
};

/// Builds (Lambda, L) and checks that no filter eigenvalue comes within
/// `margin` of the plant spectrum sampled on the corners and a uniform grid of
/// `theta_box`. A negative margin selects 0.05 * k * min|lambda_tilde|.
/// Throws kSpectrumOverlap on a collision.
ObserverMatrices build_observer(const ObserverSpec& spec, const Box& theta_box,
                                int grid_points_per_dim = 3, double margin = -1.0);

/// C (A(theta) - lambda I)^{-1}, by a linear solve. Throws kSingularShift
/// when lambda is (numerically) an eigenvalue of A(theta).
RowVector m_row(const CanonicalTheta& theta, double lambda);

/// Rows m_row(theta, lambda_i); solves M A - Lambda M = L C.
Matrix m_matrix(const CanonicalTheta& theta, const ObserverSpec& spec);

/// T_i(x, theta, w_i) = M_i(theta) (x - theta_b w_i).
Vector t_map(const Vector& x, const CanonicalTheta& theta, const Vector& w,
             const ObserverSpec& spec);

/// V_i = -(1/lambda_i, ..., 1/lambda_i^n).
Vector v_vector(double lambda, Eigen::Index n);

/// Row i = [V_i^T, z_i V_i^T, -w_i V_i^T]; T = P(T, w) (x, theta_a, theta_b).
Matrix p_matrix(const Vector& z, const Vector& w, const ObserverSpec& spec);

struct InverseEstimate {
  Vector x;
  CanonicalTheta theta;
  bool valid = false;
  double sigma_min = 0.0;  // smallest singular value of P(z, w)
};

InverseEstimate zero_estimate(Eigen::Index n);

/// Explicit left inverse: least-squares solution of P(z, w) v = z when
/// sigma_min(P)^2 >= p_min, otherwise the configured fallback. `previous` is
/// used only by InverseFallback::kHoldPrevious.
InverseEstimate t_star_explicit(const Vector& z, const Vector& w, const ObserverSpec& spec,
                                const InverseEstimate* previous = nullptr);

struct McShaneOptions {
  int grid_points_per_dim = 41;
  std::size_t max_grid_points = std::size_t{1} << 24;
};

/// Grid evaluation of the McShane-type inverse
///
///   T*_c(z, w) = inf_{p in box} { p_c + |T(p, w) - z| / L_T }
///
/// for each coordinate c of p = (x, theta_a, theta_b). Throws kBoxTooLarge if
/// the grid exceeds options.max_grid_points.
InverseEstimate mcshane_inverse(const Vector& z, const Vector& w, const Box& box, double lipschitz_t,
                                const ObserverSpec& spec, const McShaneOptions& options = {});

/// Euclidean length of one cell diagonal of the McShane grid.
double grid_cell_diagonal(const Box& box, int grid_points_per_dim);

/// Empirical lower Lipschitz modulus of (x, theta) -> T(x, theta, w) on the
/// box: min over random pairs of |dT| / |d(x, theta)| and over random points of
/// sigma_min of the Jacobian, times `safety`.
double estimate_injectivity_modulus(const Box& box, const Vector& w, const ObserverSpec& spec,
                                    int samples = 2000, std::uint64_t seed = 1,
                                    double safety = 0.5);

/// |z - T(x, theta, w)|.
double lyapunov_v(const Vector& x, const CanonicalTheta& theta, const ObserverState& state,
                  const ObserverSpec& spec);

}  // namespace luenid
