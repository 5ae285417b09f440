#include "luenid/observer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "luenid/error.hpp"

namespace luenid {

namespace {

constexpr double kShiftPivotThreshold = 1e-12;

// Visits every node of a uniform grid with `points` nodes per dimension.
// Nodes are enumerated with the first coordinate varying fastest.
template <typename Visitor>
void for_each_grid_node(const Vector& lower, const Vector& upper, int points, Visitor&& visit) {
  const Eigen::Index dim = lower.size();
  std::vector<int> index(static_cast<std::size_t>(dim), 0);
  Vector node = lower;
  auto coordinate = [&](Eigen::Index d, int i) {
    if (points == 1) return 0.5 * (lower(d) + upper(d));
    const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
    return lower(d) + frac * (upper(d) - lower(d));
  };
  for (Eigen::Index d = 0; d < dim; ++d) node(d) = coordinate(d, 0);
  while (true) {
    visit(node);
    Eigen::Index d = 0;
    for (; d < dim; ++d) {
      auto& i = index[static_cast<std::size_t>(d)];
      if (++i < points) {
        node(d) = coordinate(d, i);
        break;
      }
      i = 0;
      node(d) = coordinate(d, 0);
    }
    if (d == dim) return;
  }
}

}  // namespace

void ObserverSpec::validate() const {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "observer order n must be >= 1");
  if (lambda_tilde.size() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_tilde must be non-empty");
  }
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorCode::kInvalidArgument, "gain k must be positive and finite");
  }
  if (!(p_min >= 0.0) || !std::isfinite(p_min)) {
    throw Error(ErrorCode::kInvalidArgument, "p_min must be finite and >= 0");
  }
  for (Eigen::Index i = 0; i < lambda_tilde.size(); ++i) {
    if (!(lambda_tilde(i) < 0.0) || !std::isfinite(lambda_tilde(i))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "lambda_tilde[" + std::to_string(i) + "] must be finite and negative");
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (lambda_tilde(i) == lambda_tilde(j)) {
        throw Error(ErrorCode::kInvalidArgument, "lambda_tilde entries must be distinct");
      }
    }
  }
}

Vector uniform_lambda_tilde(Eigen::Index r, double step) {
  return -step * Vector::LinSpaced(r, 1.0, static_cast<double>(r));
}

void Box::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "box bounds must have equal nonzero length");
  }
  if (!lower.allFinite() || !upper.allFinite() || (upper.array() < lower.array()).any()) {
    throw Error(ErrorCode::kInvalidArgument, "box bounds must be finite with lower <= upper");
  }
}

bool Box::contains(const Vector& p) const {
  return p.size() == dim() && (p.array() >= lower.array()).all() &&
         (p.array() <= upper.array()).all();
}

ObserverMatrices build_observer(const ObserverSpec& spec, const Box& theta_box,
                                int grid_points_per_dim, double margin) {
  spec.validate();
  theta_box.validate();
  if (theta_box.dim() != 2 * spec.n) {
    throw Error(ErrorCode::kDimensionMismatch, "theta box must have dimension 2n");
  }
  if (grid_points_per_dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs >= 2 points per dimension");
  }
  if (margin < 0.0) margin = 0.05 * spec.k * spec.lambda_tilde.cwiseAbs().minCoeff();

  ObserverMatrices out;
  out.lambda = spec.eigenvalues();
  out.L = Vector::Ones(spec.r());

  // Only theta_a shapes the plant spectrum.
  const Vector lower = theta_box.lower.head(spec.n);
  const Vector upper = theta_box.upper.head(spec.n);
  for_each_grid_node(lower, upper, grid_points_per_dim, [&](const Vector& theta_a) {
    for (const Complex& mu : spectrum(theta_a)) {
      for (Eigen::Index i = 0; i < out.lambda.size(); ++i) {
        const double gap = std::abs(Complex(out.lambda(i), 0.0) - mu);
        if (gap <= margin) {
          throw Error(ErrorCode::kSpectrumOverlap,
                      "filter eigenvalue " + std::to_string(out.lambda(i)) +
                          " is within " + std::to_string(margin) + " of plant eigenvalue (" +
                          std::to_string(mu.real()) + ", " + std::to_string(mu.imag()) +
                          "); increase k");
        }
      }
    }
  });
  return out;
}

RowVector m_row(const CanonicalTheta& theta, double lambda) {
  const StateSpace sys = canonical_matrices(theta);
  const Eigen::Index n = sys.order();
  Matrix shifted = sys.A - lambda * Matrix::Identity(n, n);
  // M (A - lambda I) = C  <=>  (A - lambda I)^T M^T = C^T.
  Eigen::FullPivLU<Matrix> lu(shifted.transpose());
  lu.setThreshold(kShiftPivotThreshold);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingularShift,
                "lambda = " + std::to_string(lambda) + " is an eigenvalue of A(theta)");
  }
  return lu.solve(sys.C.transpose()).transpose();
}

Matrix m_matrix(const CanonicalTheta& theta, const ObserverSpec& spec) {
  const Vector lambda = spec.eigenvalues();
  Matrix m(lambda.size(), theta.order());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) m.row(i) = m_row(theta, lambda(i));
  return m;
}

namespace {

Vector t_map_with(const Matrix& m, const Vector& x, const CanonicalTheta& theta, const Vector& w) {
  // T_i = M_i x - (M_i theta_b) w_i
  return m * x - (m * theta.b).cwiseProduct(w);
}

}  // namespace

Vector t_map(const Vector& x, const CanonicalTheta& theta, const Vector& w,
             const ObserverSpec& spec) {
  if (x.size() != theta.order() || w.size() != spec.r()) {
    throw Error(ErrorCode::kDimensionMismatch, "t_map expects x in R^n and w in R^r");
  }
  return t_map_with(m_matrix(theta, spec), x, theta, w);
}

Vector v_vector(double lambda, Eigen::Index n) {
  Vector v(n);
  double inv_power = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    inv_power /= lambda;
    v(j) = -inv_power;
  }
  return v;
}

Matrix p_matrix(const Vector& z, const Vector& w, const ObserverSpec& spec) {
  const Eigen::Index r = spec.r();
  const Eigen::Index n = spec.n;
  if (z.size() != r || w.size() != r) {
    throw Error(ErrorCode::kDimensionMismatch, "p_matrix expects z, w in R^r");
  }
  const Vector lambda = spec.eigenvalues();
  Matrix p(r, 3 * n);
  for (Eigen::Index i = 0; i < r; ++i) {
    const RowVector v = v_vector(lambda(i), n).transpose();
    p.row(i) << v, z(i) * v, -w(i) * v;
  }
  return p;
}

InverseEstimate zero_estimate(Eigen::Index n) {
  InverseEstimate est;
  est.x = Vector::Zero(n);
  est.theta = CanonicalTheta(Vector::Zero(n), Vector::Zero(n));
  est.valid = false;
  return est;
}

InverseEstimate t_star_explicit(const Vector& z, const Vector& w, const ObserverSpec& spec,
                                const InverseEstimate* previous) {
  const Eigen::Index n = spec.n;
  if (spec.r() < 3 * n) {
    throw Error(ErrorCode::kInvalidArgument, "explicit inverse needs r >= 3n filters");
  }
  const Matrix p = p_matrix(z, w, spec);
  Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double sigma_min = s(s.size() - 1);
  const double rank_floor =
      static_cast<double>(p.rows()) * std::numeric_limits<double>::epsilon() * s(0);

  if (sigma_min > rank_floor && sigma_min * sigma_min >= spec.p_min) {
    const Vector v = svd.solve(z);
    InverseEstimate est;
    est.x = v.head(n);
    est.theta = CanonicalTheta(v.segment(n, n), v.tail(n));
    est.valid = true;
    est.sigma_min = sigma_min;
    return est;
  }

  InverseEstimate fallback = (spec.fallback == InverseFallback::kHoldPrevious && previous)
                                 ? *previous
                                 : zero_estimate(n);
  fallback.valid = false;
  fallback.sigma_min = sigma_min;
  return fallback;
}

double grid_cell_diagonal(const Box& box, int grid_points_per_dim) {
  if (grid_points_per_dim < 2) return (box.upper - box.lower).norm();
  return (box.upper - box.lower).norm() / static_cast<double>(grid_points_per_dim - 1);
}

InverseEstimate mcshane_inverse(const Vector& z, const Vector& w, const Box& box, double lipschitz_t,
                                const ObserverSpec& spec, const McShaneOptions& options) {
  spec.validate();
  box.validate();
  const Eigen::Index n = spec.n;
  if (box.dim() != 3 * n) {
    throw Error(ErrorCode::kDimensionMismatch, "McShane box must have dimension 3n");
  }
  if (!(lipschitz_t > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "L_T must be positive");
  }
  if (options.grid_points_per_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs >= 1 point per dimension");
  }
  double total = 1.0;
  for (Eigen::Index d = 0; d < box.dim(); ++d) total *= options.grid_points_per_dim;
  if (total > static_cast<double>(options.max_grid_points)) {
    throw Error(ErrorCode::kBoxTooLarge, "McShane grid has " + std::to_string(total) +
                                             " nodes, budget is " +
                                             std::to_string(options.max_grid_points));
  }

  Vector best = Vector::Constant(3 * n, std::numeric_limits<double>::infinity());
  // x varies fastest, so M(theta) only changes once per sweep over x.
  Vector cached_theta;
  Matrix cached_m;
  bool cache_ok = false;
  CanonicalTheta theta;
  for_each_grid_node(box.lower, box.upper, options.grid_points_per_dim, [&](const Vector& node) {
    const Vector theta_stacked = node.tail(2 * n);
    if (!cache_ok || theta_stacked != cached_theta) {
      cached_theta = theta_stacked;
      theta = CanonicalTheta::from_stacked(theta_stacked);
      try {
        cached_m = m_matrix(theta, spec);
        cache_ok = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingularShift) throw;
        cache_ok = false;
      }
    }
    // Nodes whose theta collides with a filter eigenvalue lie outside the
    // domain of T and are skipped.
    if (!cache_ok) return;
    const double residual = (t_map_with(cached_m, node.head(n), theta, w) - z).norm();
    best = best.cwiseMin((node.array() + residual / lipschitz_t).matrix());
  });

  InverseEstimate est;
  est.x = best.head(n);
  est.theta = CanonicalTheta(best.segment(n, n), best.tail(n));
  est.valid = best.allFinite();
  return est;
}

double estimate_injectivity_modulus(const Box& box, const Vector& w, const ObserverSpec& spec,
                                    int samples, std::uint64_t seed, double safety) {
  spec.validate();
  box.validate();
  const Eigen::Index n = spec.n;
  if (box.dim() != 3 * n) {
    throw Error(ErrorCode::kDimensionMismatch, "injectivity box must have dimension 3n");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&]() {
    Vector p(box.dim());
    for (Eigen::Index d = 0; d < box.dim(); ++d) {
      p(d) = box.lower(d) + unit(rng) * (box.upper(d) - box.lower(d));
    }
    return p;
  };
  auto t_of = [&](const Vector& p) {
    return t_map(p.head(n), CanonicalTheta::from_stacked(p.tail(2 * n)), w, spec);
  };

  double modulus = std::numeric_limits<double>::infinity();
  const Vector lambda = spec.eigenvalues();
  for (int s = 0; s < samples; ++s) {
    const Vector p = draw();
    const Vector q = draw();
    const double dist = (p - q).norm();
    if (dist > 0.0) modulus = std::min(modulus, (t_of(p) - t_of(q)).norm() / dist);

    // Local modulus: dT/d(x, theta) = Diag(1 / (1 - V_i^T theta_a)) P(T, w).
    const Vector tp = t_of(p);
    Matrix jac = p_matrix(tp, w, spec);
    for (Eigen::Index i = 0; i < spec.r(); ++i) {
      jac.row(i) /= 1.0 - v_vector(lambda(i), n).dot(p.segment(n, n));
    }
    Eigen::JacobiSVD<Matrix> svd(jac);
    const Vector& sv = svd.singularValues();
    modulus = std::min(modulus, sv(sv.size() - 1));
  }
  return safety * modulus;
}

double lyapunov_v(const Vector& x, const CanonicalTheta& theta, const ObserverState& state,
                  const ObserverSpec& spec) {
  return (state.z - t_map(x, theta, state.w, spec)).norm();
}

}  // namespace luenid
