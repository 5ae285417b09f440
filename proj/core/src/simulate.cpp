#include "luenid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "luenid/error.hpp"

namespace luenid {

namespace {

Vector or_zero(const Vector& v, Eigen::Index size) {
  return v.size() == 0 ? Vector::Zero(size) : v;
}

// A(theta) x for the canonical realization without forming A.
Vector canonical_apply(const Vector& theta_a, const Vector& x) {
  const Eigen::Index n = x.size();
  Vector out = -theta_a * x(0);
  out.head(n - 1) += x.tail(n - 1);
  return out;
}

struct CoupledState {
  Vector x;
  Vector theta;  // stacked
  Vector z;
  Vector w;
};

CoupledState axpy(const CoupledState& s, double h, const Derivatives& d) {
  return CoupledState{s.x + h * d.x, s.theta + h * d.theta, s.z + h * d.z, s.w + h * d.w};
}

double max_norm(const CoupledState& s) {
  return std::max({s.x.norm(), s.theta.norm(), s.z.norm(), s.w.norm()});
}

Trajectory run(const SimConfig& config, const ObserverSpec& spec, bool with_noise,
               bool with_estimates) {
  config.validate(spec);
  const Eigen::Index n = config.theta_true.order();
  const Eigen::Index r = spec.r();
  const double h = config.step_s;
  const auto steps = static_cast<long>(std::floor(config.horizon_s / h + 1e-9));

  Trajectory traj;
  std::optional<NoiseStream> noise;
  if (with_noise && config.noise_enabled()) {
    const double reference = config.noise_reference_rms.value_or(clean_output_rms(config, spec));
    if (!(reference > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "noise reference RMS must be positive (is the clean output identically zero?)");
    }
    noise.emplace(output_noise(config.rng_seed, *config.noise_snr_db, reference));
    traj.noise_std = noise->std_dev();
    traj.noise_reference_rms = reference;
  }

  CoupledState state{or_zero(config.x0, n), config.theta_true.stacked(), or_zero(config.z0, r),
                     or_zero(config.w0, r)};
  const Disturbances& dist = config.disturbances;

  auto output_at = [&](double t, const Vector& x, double noise_value) {
    double y = x(0) + noise_value;
    if (dist.output) y += dist.output(t);
    return y;
  };
  auto derivative = [&](double t, const CoupledState& s, double noise_value) {
    const CanonicalTheta theta = CanonicalTheta::from_stacked(s.theta);
    return rhs(t, s.x, s.z, s.w, theta, config.input.value(t), output_at(t, s.x, noise_value),
               spec, dist);
  };

  InverseEstimate previous = zero_estimate(n);
  traj.samples.reserve(static_cast<std::size_t>(steps / config.record_every + 1));
  for (long step = 0; step <= steps; ++step) {
    const double t = static_cast<double>(step) * h;
    const double noise_value = noise ? noise->next() : 0.0;

    if (step % config.record_every == 0 || step == steps) {
      Sample sample;
      sample.t = t;
      sample.u = config.input.value(t);
      sample.y_clean = state.x(0);
      sample.y_meas = output_at(t, state.x, noise_value);
      sample.x = state.x;
      sample.theta = state.theta;
      sample.z = state.z;
      sample.w = state.w;
      if (with_estimates) {
        const InverseEstimate est = t_star_explicit(state.z, state.w, spec, &previous);
        if (est.valid) previous = est;
        sample.x_hat = est.x;
        sample.theta_hat = est.theta.stacked();
        sample.valid = est.valid;
        sample.p_sigma_min = est.sigma_min;
        sample.v = lyapunov_v(state.x, CanonicalTheta::from_stacked(state.theta),
                              ObserverState{state.z, state.w}, spec);
      }
      traj.samples.push_back(std::move(sample));
    }
    if (step == steps) break;

    const Derivatives k1 = derivative(t, state, noise_value);
    const Derivatives k2 = derivative(t + 0.5 * h, axpy(state, 0.5 * h, k1), noise_value);
    const Derivatives k3 = derivative(t + 0.5 * h, axpy(state, 0.5 * h, k2), noise_value);
    const Derivatives k4 = derivative(t + h, axpy(state, h, k3), noise_value);
    state.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    state.theta += h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
    state.z += h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
    state.w += h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);

    const double norm = max_norm(state);
    if (!std::isfinite(norm) || norm > config.unstable_norm) {
      throw Error(ErrorCode::kUnstable,
                  "state norm exceeded " + std::to_string(config.unstable_norm) + " at t = " +
                      std::to_string(t + h));
    }
  }
  return traj;
}

}  // namespace

void SimConfig::validate(const ObserverSpec& spec) const {
  spec.validate();
  theta_true.validate();
  const Eigen::Index n = theta_true.order();
  const Eigen::Index r = spec.r();
  if (spec.n != n) {
    throw Error(ErrorCode::kDimensionMismatch, "observer order differs from plant order");
  }
  if (!is_controllable(theta_true).controllable) {
    throw Error(ErrorCode::kInvalidArgument,
                "theta_true is not controllable (numerator and denominator share a root)");
  }
  if (!(step_s > 0.0) || !std::isfinite(step_s)) {
    throw Error(ErrorCode::kInvalidArgument, "step_s must be positive");
  }
  if (!(horizon_s >= step_s) || !std::isfinite(horizon_s)) {
    throw Error(ErrorCode::kInvalidArgument, "horizon_s must be >= step_s");
  }
  if (record_every < 1) throw Error(ErrorCode::kInvalidArgument, "record_every must be >= 1");
  if ((x0.size() != 0 && x0.size() != n) || (z0.size() != 0 && z0.size() != r) ||
      (w0.size() != 0 && w0.size() != r)) {
    throw Error(ErrorCode::kDimensionMismatch, "initial states must have sizes n, r, r");
  }
  if (noise_snr_db && std::isnan(*noise_snr_db)) {
    throw Error(ErrorCode::kInvalidArgument, "noise SNR must not be NaN");
  }
}

NoiseStream::NoiseStream(std::uint64_t seed, double snr_db, double reference_rms)
    : rng_(seed), normal_(0.0, 1.0), std_dev_(0.0) {
  if (std::isnan(snr_db)) throw Error(ErrorCode::kInvalidArgument, "SNR must not be NaN");
  if (std::isinf(snr_db) && snr_db > 0.0) return;  // noise disabled
  if (!(reference_rms > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "reference RMS must be positive");
  }
  std_dev_ = reference_rms / std::pow(10.0, snr_db / 20.0);
}

double NoiseStream::next() {
  if (std_dev_ == 0.0) return 0.0;
  return std_dev_ * normal_(rng_);
}

NoiseStream output_noise(std::uint64_t seed, double snr_db, double reference_rms) {
  return NoiseStream(seed, snr_db, reference_rms);
}

Derivatives rhs(double t, const Vector& x, const Vector& z, const Vector& w,
                const CanonicalTheta& theta, double u_value, double y_value,
                const ObserverSpec& spec, const Disturbances& disturbances) {
  const Vector lambda = spec.eigenvalues();
  Derivatives d;
  d.x = canonical_apply(theta.a, x) + theta.b * u_value;
  if (disturbances.state) d.x += disturbances.state(t);
  d.theta = disturbances.parameter ? disturbances.parameter(t)
                                   : Vector::Zero(2 * theta.order()).eval();
  d.z = (lambda.cwiseProduct(z).array() + y_value).matrix();
  d.w = (lambda.cwiseProduct(w).array() + u_value).matrix();
  return d;
}

Trajectory integrate(const SimConfig& config, const ObserverSpec& spec) {
  return run(config, spec, /*with_noise=*/true, /*with_estimates=*/true);
}

double default_discard_before(const ObserverSpec& spec) {
  return 5.0 / (spec.k * spec.lambda_tilde.cwiseAbs().minCoeff());
}

double clean_output_rms(const SimConfig& config, const ObserverSpec& spec) {
  const Trajectory pilot = run(config, spec, /*with_noise=*/false, /*with_estimates=*/false);
  double sum = 0.0;
  for (const Sample& s : pilot.samples) sum += s.y_clean * s.y_clean;
  return std::sqrt(sum / static_cast<double>(pilot.size()));
}

double calibrate_p_min(const SimConfig& config, const ObserverSpec& spec, double discard_before_s) {
  SimConfig pilot_config = config;
  pilot_config.noise_snr_db.reset();
  pilot_config.disturbances = {};
  ObserverSpec pilot_spec = spec;
  pilot_spec.p_min = 0.0;
  const Trajectory pilot = run(pilot_config, pilot_spec, false, true);
  double min_sigma = std::numeric_limits<double>::infinity();
  for (const Sample& s : pilot.samples) {
    if (s.t >= discard_before_s) min_sigma = std::min(min_sigma, s.p_sigma_min);
  }
  if (!std::isfinite(min_sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "discard_before_s leaves no pilot samples");
  }
  return 0.5 * min_sigma * min_sigma;
}

}  // namespace luenid
