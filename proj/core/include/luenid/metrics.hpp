#pragma once

#include <optional>

#include "luenid/excitation.hpp"
#include "luenid/ltisys.hpp"
#include "luenid/observer.hpp"
#include "luenid/simulate.hpp"

namespace luenid {

/// |O_n B - O_n(theta_hat) B(theta_hat)| / |O_n B|. Throws
/// kDegenerateReference when the reference Markov parameters vanish.
double markov_error(const CanonicalTheta& theta_hat, const StateSpace& reference);

/// Pairs each eigenvalue of `lhs` with one of `rhs`, repeatedly taking the
/// closest remaining pair.
std::vector<std::pair<Complex, Complex>> pair_spectra(const ComplexList& lhs,
                                                      const ComplexList& rhs);

/// Sum of paired distances between spectrum(theta_hat.a) and spectrum(theta_true.a).
double eigen_error(const CanonicalTheta& theta_hat, const CanonicalTheta& theta_true);

/// Least-squares slope of log V against t over samples with t in [t_begin, t_end].
/// Throws kDegenerateWindow when V is zero on the window or fewer than two
/// samples fall inside it.
double fit_decay_rate(const Trajectory& traj, double t_begin, double t_end);

struct InjectivityDiagnostic {
  double sigma_min = 0.0;
  Vector argmin;  // (x, theta_a, theta_b) where the minimum was found
};

/// Stacked derivative observation H_r(x, theta, v): component i is
/// C A^i x + sum_{j=1}^{i} C A^{i-j} B v_{j-1}. Uses v_0 .. v_{r-2}.
Vector derivative_observation(const Vector& x, const CanonicalTheta& theta, const Vector& v,
                              Eigen::Index r);

/// Minimum over a uniform grid of the (x, theta) box of sigma_min of the
/// central-difference Jacobian of derivative_observation. `theta_box` has
/// dimension 2n, `x_box` dimension n.
InjectivityDiagnostic injectivity_diagnostic(const Box& theta_box, const Box& x_box,
                                             const DerivativeStack& input_derivatives,
                                             Eigen::Index r, int grid_points_per_dim = 3,
                                             double fd_step = 1e-6);

double median(std::vector<double> values);

struct RunReport {
  double final_eigen_error = 0.0;
  double final_markov_error = 0.0;
  std::optional<double> decay_rate;  // empty when V vanishes on the window
  double steady_eigen_error = 0.0;   // median over samples with t >= steady_from
  double steady_markov_error = 0.0;  // median over the same samples
  double steady_state_error = 0.0;   // RMS of |(x_hat, theta_hat) - (x, theta)|
  double validity_fraction = 0.0;
};

struct ReportWindows {
  double decay_from = 0.0;
  double decay_to = 0.0;
  double steady_from = 0.0;
};

/// Scores a trajectory against the true parameters. `reference` supplies the
/// Markov parameters (any realization of the plant).
RunReport summarize_run(const Trajectory& traj, const StateSpace& reference,
                        const ReportWindows& windows);

}  // namespace luenid
