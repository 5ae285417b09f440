#pragma once

#include <vector>

#include "luenid/types.hpp"

namespace luenid {

struct SineTerm {
  double amplitude = 1.0;
  double freq_rad_s = 1.0;
  double phase_rad = 0.0;
};

/// u(t) = sum_i amplitude_i * sin(freq_i * t + phase_i).
///
/// An empty term list is the zero signal. Frequencies must be positive and
/// pairwise distinct, amplitudes nonzero.
class Multisine {
 public:
  Multisine() = default;
  explicit Multisine(std::vector<SineTerm> terms);

  const std::vector<SineTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  double value(double t) const;

 private:
  std::vector<SineTerm> terms_;
};

/// (u(t), u'(t), ..., u^(j)(t)).
struct DerivativeStack {
  Vector values;
  double base_time = 0.0;

  Eigen::Index highest_order() const { return values.size() - 1; }
};

/// Closed form: d^m/dt^m a sin(wt + p) = a w^m sin(wt + p + m pi/2).
DerivativeStack eval_derivatives(const Multisine& signal, double t, int max_order);

/// (r+1) x (r+1) Hankel matrix with entry (i, j) = v(i + j); v has length 2r+1.
Matrix hankel(const Vector& v);

struct ExcitationCheck {
  bool exciting = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Default relative singularity threshold for the derivative Hankel matrix.
inline constexpr double kHankelRelTol = 1e-12;

/// Tests invertibility of the Hankel matrix built from the first 2r
/// derivatives of the signal at time t: exciting iff sigma_min > rel_tol *
/// sigma_max (and sigma_max > 0).
ExcitationCheck diff_exciting_order(const Multisine& signal, double t, int order,
                                    double rel_tol = kHankelRelTol);

struct PersistencyGram {
  Matrix gram;
  double min_eigenvalue = 0.0;
};

/// Integral over [t, t + epsilon] of ubar^(r)(s) ubar^(r)(s)^T by composite
/// Simpson quadrature (3/8 rule on the last panel when the interval count is
/// odd). quad_step must divide epsilon; a non-positive quad_step selects
/// epsilon / 200.
PersistencyGram persistency_gram(const Multisine& signal, double t, double epsilon, int order,
                                 double quad_step = 0.0);

struct FrequencyRule {
  double spacing_rad_s = 0.3;  // omega_i = offset + spacing * i, i = 1..count
  double offset_rad_s = 0.0;
};

struct AmplitudeRule {
  double amplitude = 1.0;
  double phase_rad = 0.0;
};

/// Multisine with `count` terms following the two rules.
Multisine make_multisine(std::size_t count, const FrequencyRule& freq = {},
                         const AmplitudeRule& amp = {});

/// Smallest multisine that is differentially exciting of order r_target:
/// ceil((r_target + 1) / 2) sines. The result is checked at t = 0 and
/// kInvalidArgument is thrown if the check fails.
Multisine generate_exciting_input(int r_target, const FrequencyRule& freq = {},
                                  const AmplitudeRule& amp = {});

}  // namespace luenid
