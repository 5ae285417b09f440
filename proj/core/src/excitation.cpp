#include "luenid/excitation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "luenid/error.hpp"

namespace luenid {

Multisine::Multisine(std::vector<SineTerm> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const SineTerm& term = terms_[i];
    if (!std::isfinite(term.amplitude) || term.amplitude == 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "multisine term " + std::to_string(i) + " needs a finite nonzero amplitude");
    }
    if (!std::isfinite(term.freq_rad_s) || term.freq_rad_s <= 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "multisine term " + std::to_string(i) + " needs a positive frequency");
    }
    if (!std::isfinite(term.phase_rad)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "multisine term " + std::to_string(i) + " has a non-finite phase");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (terms_[j].freq_rad_s == term.freq_rad_s) {
        throw Error(ErrorCode::kInvalidArgument,
                    "multisine frequencies must be pairwise distinct (terms " +
                        std::to_string(j) + " and " + std::to_string(i) + ")");
      }
    }
  }
}

double Multisine::value(double t) const {
  double u = 0.0;
  for (const SineTerm& term : terms_) {
    u += term.amplitude * std::sin(term.freq_rad_s * t + term.phase_rad);
  }
  return u;
}

DerivativeStack eval_derivatives(const Multisine& signal, double t, int max_order) {
  if (max_order < 0) {
    throw Error(ErrorCode::kInvalidArgument, "derivative order must be >= 0");
  }
  DerivativeStack out;
  out.base_time = t;
  out.values = Vector::Zero(max_order + 1);
  for (const SineTerm& term : signal.terms()) {
    const double angle = term.freq_rad_s * t + term.phase_rad;
    const double s = std::sin(angle);
    const double c = std::cos(angle);
    // sin(angle + m pi/2) cycles through s, c, -s, -c; evaluating the cycle
    // directly keeps exact zeros at t = 0.
    double scale = term.amplitude;
    for (int m = 0; m <= max_order; ++m) {
      double phase_term = 0.0;
      switch (m % 4) {
        case 0: phase_term = s; break;
        case 1: phase_term = c; break;
        case 2: phase_term = -s; break;
        default: phase_term = -c; break;
      }
      out.values(m) += scale * phase_term;
      scale *= term.freq_rad_s;
    }
  }
  return out;
}

Matrix hankel(const Vector& v) {
  if (v.size() < 1 || v.size() % 2 == 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "Hankel input must have odd length 2r+1, got " + std::to_string(v.size()));
  }
  const Eigen::Index dim = v.size() / 2 + 1;
  Matrix h(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) h(i, j) = v(i + j);
  }
  return h;
}

ExcitationCheck diff_exciting_order(const Multisine& signal, double t, int order,
                                    double rel_tol) {
  if (order < 0) {
    throw Error(ErrorCode::kInvalidArgument, "excitation order must be >= 0");
  }
  const Matrix h = hankel(eval_derivatives(signal, t, 2 * order).values);
  Eigen::JacobiSVD<Matrix> svd(h);
  const Vector& s = svd.singularValues();
  ExcitationCheck out;
  out.sigma_max = s(0);
  out.sigma_min = s(s.size() - 1);
  out.exciting = out.sigma_max > 0.0 && out.sigma_min > rel_tol * out.sigma_max;
  return out;
}

PersistencyGram persistency_gram(const Multisine& signal, double t, double epsilon, int order,
                                 double quad_step) {
  if (order < 0) {
    throw Error(ErrorCode::kInvalidArgument, "excitation order must be >= 0");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidQuadrature, "epsilon must be positive and finite");
  }
  if (quad_step <= 0.0) quad_step = epsilon / 200.0;
  if (quad_step >= epsilon) {
    throw Error(ErrorCode::kInvalidQuadrature, "quad_step must be smaller than epsilon");
  }
  const double ratio = epsilon / quad_step;
  const long intervals = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(intervals)) > 1e-9 * ratio) {
    throw Error(ErrorCode::kInvalidQuadrature, "quad_step must divide epsilon");
  }

  const Eigen::Index dim = order + 1;
  const double h = epsilon / static_cast<double>(intervals);

  // Quadrature weights: composite Simpson over an even number of panels, 3/8
  // rule for a leftover block of three.
  std::vector<double> weights(static_cast<std::size_t>(intervals + 1), 0.0);
  const long simpson_panels = (intervals % 2 == 0) ? intervals : intervals - 3;
  for (long i = 0; i <= simpson_panels && simpson_panels > 0; ++i) {
    const double w = (i == 0 || i == simpson_panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    weights[static_cast<std::size_t>(i)] += w * h / 3.0;
  }
  if (intervals % 2 == 1) {
    static constexpr double kWeights[] = {1.0, 3.0, 3.0, 1.0};
    for (long i = 0; i < 4; ++i) {
      weights[static_cast<std::size_t>(simpson_panels + i)] += kWeights[i] * 3.0 * h / 8.0;
    }
  }

  // Gram = B^T B with row i of B = sqrt(w_i) d(t_i)^T. The smallest eigenvalue
  // is taken as sigma_min(B)^2: eigen-solving B^T B directly loses it to
  // round-off once the derivative scales spread over many decades.
  Matrix b(intervals + 1, dim);
  for (long i = 0; i <= intervals; ++i) {
    const Vector d = eval_derivatives(signal, t + static_cast<double>(i) * h, order).values;
    b.row(i) = std::sqrt(weights[static_cast<std::size_t>(i)]) * d.transpose();
  }
  PersistencyGram out;
  out.gram = b.transpose() * b;
  out.gram = Matrix(out.gram.selfadjointView<Eigen::Lower>());
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(b);
  const double sigma = svd.singularValues()(dim - 1);
  out.min_eigenvalue = sigma * sigma;
  return out;
}

Multisine make_multisine(std::size_t count, const FrequencyRule& freq, const AmplitudeRule& amp) {
  if (!(freq.spacing_rad_s > 0.0) || freq.offset_rad_s < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "frequency rule needs positive spacing");
  }
  std::vector<SineTerm> terms;
  terms.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    terms.push_back(SineTerm{amp.amplitude,
                             freq.offset_rad_s + freq.spacing_rad_s * static_cast<double>(i),
                             amp.phase_rad});
  }
  return Multisine(std::move(terms));
}

Multisine generate_exciting_input(int r_target, const FrequencyRule& freq,
                                  const AmplitudeRule& amp) {
  if (r_target < 1) {
    throw Error(ErrorCode::kInvalidArgument, "r_target must be >= 1");
  }
  const auto count = static_cast<std::size_t>((r_target + 2) / 2);
  Multisine signal = make_multisine(count, freq, amp);
  if (!diff_exciting_order(signal, 0.0, r_target).exciting) {
    throw Error(ErrorCode::kInvalidArgument,
                "generated multisine is not differentially exciting of order " +
                    std::to_string(r_target) + " at t = 0");
  }
  return signal;
}

}  // namespace luenid
