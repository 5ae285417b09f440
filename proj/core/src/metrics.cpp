#include "luenid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "luenid/error.hpp"

namespace luenid {

double markov_error(const CanonicalTheta& theta_hat, const StateSpace& reference) {
  const Vector ref = markov_parameters(reference);
  const double denom = ref.norm();
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kDegenerateReference, "reference Markov parameters are zero");
  }
  return (ref - markov_parameters(theta_hat)).norm() / denom;
}

std::vector<std::pair<Complex, Complex>> pair_spectra(const ComplexList& lhs,
                                                      const ComplexList& rhs) {
  if (lhs.size() != rhs.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "spectra must have equal size");
  }
  const std::size_t n = lhs.size();
  std::vector<bool> used_l(n, false);
  std::vector<bool> used_r(n, false);
  std::vector<std::pair<Complex, Complex>> pairs;
  pairs.reserve(n);
  for (std::size_t round = 0; round < n; ++round) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (used_l[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (used_r[j]) continue;
        const double d = std::abs(lhs[i] - rhs[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    used_l[bi] = true;
    used_r[bj] = true;
    pairs.emplace_back(lhs[bi], rhs[bj]);
  }
  return pairs;
}

double eigen_error(const CanonicalTheta& theta_hat, const CanonicalTheta& theta_true) {
  double total = 0.0;
  for (const auto& [a, b] : pair_spectra(spectrum(theta_hat.a), spectrum(theta_true.a))) {
    total += std::abs(a - b);
  }
  return total;
}

double fit_decay_rate(const Trajectory& traj, double t_begin, double t_end) {
  double sum_t = 0.0;
  double sum_l = 0.0;
  double sum_tt = 0.0;
  double sum_tl = 0.0;
  std::size_t count = 0;
  for (const Sample& s : traj.samples) {
    if (s.t < t_begin || s.t > t_end) continue;
    if (!(s.v > 0.0)) {
      throw Error(ErrorCode::kDegenerateWindow,
                  "V vanishes at t = " + std::to_string(s.t) + " inside the fit window");
    }
    const double l = std::log(s.v);
    sum_t += s.t;
    sum_l += l;
    sum_tt += s.t * s.t;
    sum_tl += s.t * l;
    ++count;
  }
  if (count < 2) {
    throw Error(ErrorCode::kDegenerateWindow, "fewer than two samples in the fit window");
  }
  const double m = static_cast<double>(count);
  const double denom = m * sum_tt - sum_t * sum_t;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kDegenerateWindow, "fit window has no time spread");
  }
  return (m * sum_tl - sum_t * sum_l) / denom;
}

Vector derivative_observation(const Vector& x, const CanonicalTheta& theta, const Vector& v,
                              Eigen::Index r) {
  if (r < 1 || v.size() < r - 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "derivative observation of order r needs r-1 input derivatives");
  }
  const StateSpace sys = canonical_matrices(theta);
  Vector out(r);
  Vector s = x;
  for (Eigen::Index i = 0; i < r; ++i) {
    out(i) = sys.C.dot(s);
    if (i + 1 < r) s = sys.A * s + sys.B * v(i);
  }
  return out;
}

namespace {

double jacobian_sigma_min(const Vector& p, Eigen::Index n, const Vector& v, Eigen::Index r,
                          double fd_step) {
  auto eval = [&](const Vector& q) {
    return derivative_observation(q.head(n), CanonicalTheta::from_stacked(q.tail(2 * n)), v, r);
  };
  Matrix jac(r, 3 * n);
  for (Eigen::Index d = 0; d < 3 * n; ++d) {
    const double h = fd_step * std::max(1.0, std::abs(p(d)));
    Vector plus = p;
    Vector minus = p;
    plus(d) += h;
    minus(d) -= h;
    jac.col(d) = (eval(plus) - eval(minus)) / (2.0 * h);
  }
  Eigen::JacobiSVD<Matrix> svd(jac);
  const Vector& s = svd.singularValues();
  // Fewer rows than unknowns means the map cannot be injective.
  if (r < 3 * n) return 0.0;
  return s(s.size() - 1);
}

}  // namespace

InjectivityDiagnostic injectivity_diagnostic(const Box& theta_box, const Box& x_box,
                                             const DerivativeStack& input_derivatives,
                                             Eigen::Index r, int grid_points_per_dim,
                                             double fd_step) {
  theta_box.validate();
  x_box.validate();
  const Eigen::Index n = x_box.dim();
  if (theta_box.dim() != 2 * n) {
    throw Error(ErrorCode::kDimensionMismatch, "theta box must have dimension 2n");
  }
  if (grid_points_per_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs >= 1 point per dimension");
  }

  Box joint;
  joint.lower.resize(3 * n);
  joint.upper.resize(3 * n);
  joint.lower << x_box.lower, theta_box.lower;
  joint.upper << x_box.upper, theta_box.upper;

  InjectivityDiagnostic out;
  out.sigma_min = std::numeric_limits<double>::infinity();
  const Eigen::Index dim = 3 * n;
  std::vector<int> index(static_cast<std::size_t>(dim), 0);
  const auto total = static_cast<long>(std::pow(grid_points_per_dim, static_cast<double>(dim)));
  Vector node(dim);
  for (long flat = 0; flat < total; ++flat) {
    long rest = flat;
    for (Eigen::Index d = 0; d < dim; ++d) {
      const int i = static_cast<int>(rest % grid_points_per_dim);
      rest /= grid_points_per_dim;
      node(d) = grid_points_per_dim == 1
                    ? 0.5 * (joint.lower(d) + joint.upper(d))
                    : joint.lower(d) + (joint.upper(d) - joint.lower(d)) * i /
                                           static_cast<double>(grid_points_per_dim - 1);
    }
    const double s = jacobian_sigma_min(node, n, input_derivatives.values, r, fd_step);
    if (s < out.sigma_min) {
      out.sigma_min = s;
      out.argmin = node;
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

RunReport summarize_run(const Trajectory& traj, const StateSpace& reference,
                        const ReportWindows& windows) {
  if (traj.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty trajectory");
  }
  RunReport report;
  const Sample& last = traj.back();
  const CanonicalTheta last_hat = CanonicalTheta::from_stacked(last.theta_hat);
  report.final_eigen_error = eigen_error(last_hat, CanonicalTheta::from_stacked(last.theta));
  report.final_markov_error = markov_error(last_hat, reference);

  try {
    report.decay_rate = fit_decay_rate(traj, windows.decay_from, windows.decay_to);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateWindow) throw;
  }

  std::size_t valid = 0;
  std::vector<double> eig_errors;
  std::vector<double> markov_errors;
  double sq_sum = 0.0;
  for (const Sample& s : traj.samples) {
    if (s.valid) ++valid;
    if (s.t < windows.steady_from) continue;
    const CanonicalTheta hat = CanonicalTheta::from_stacked(s.theta_hat);
    eig_errors.push_back(eigen_error(hat, CanonicalTheta::from_stacked(s.theta)));
    markov_errors.push_back(markov_error(hat, reference));
    sq_sum += (s.x_hat - s.x).squaredNorm() + (s.theta_hat - s.theta).squaredNorm();
  }
  report.validity_fraction = static_cast<double>(valid) / static_cast<double>(traj.size());
  if (!eig_errors.empty()) {
    report.steady_eigen_error = median(eig_errors);
    report.steady_markov_error = median(markov_errors);
    report.steady_state_error = std::sqrt(sq_sum / static_cast<double>(eig_errors.size()));
  }
  return report;
}

}  // namespace luenid
