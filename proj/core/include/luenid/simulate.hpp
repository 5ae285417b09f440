#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "luenid/excitation.hpp"
#include "luenid/ltisys.hpp"
#include "luenid/observer.hpp"

namespace luenid {

/// Bounded disturbance channels: xdot += state(t), thetadot = parameter(t),
/// y_meas += output(t). Empty functions mean "off".
struct Disturbances {
  std::function<Vector(double)> state;
  std::function<Vector(double)> parameter;
  std::function<double(double)> output;

  bool any() const { return state || parameter || output; }
};

struct SimConfig {
  double step_s = 1e-3;
  double horizon_s = 20.0;
  Vector x0;  // empty means zero
  Vector z0;  // empty means zero
  Vector w0;  // empty means zero
  CanonicalTheta theta_true;
  Multisine input;
  std::optional<double> noise_snr_db;          // nullopt or +inf disables noise
  std::optional<double> noise_reference_rms;   // nullopt: RMS of a noise-free pilot run
  Disturbances disturbances;
  std::uint64_t rng_seed = 0;
  int record_every = 1;  // keep every m-th integration step
  double unstable_norm = 1e12;

  bool noise_enabled() const {
    return noise_snr_db.has_value() && std::isfinite(*noise_snr_db);
  }
  void validate(const ObserverSpec& spec) const;
};

struct Sample {
  double t = 0.0;
  double u = 0.0;
  double y_clean = 0.0;
  double y_meas = 0.0;
  Vector x;
  Vector theta;  // true parameters (time varying only under disturbance)
  Vector z;
  Vector w;
  Vector x_hat;
  Vector theta_hat;  // stacked (theta_a, theta_b)
  bool valid = false;
  double v = 0.0;
  double p_sigma_min = 0.0;  // smallest singular value of P(z, w)
};

struct Trajectory {
  std::vector<Sample> samples;
  double noise_std = 0.0;
  double noise_reference_rms = 0.0;

  std::size_t size() const { return samples.size(); }
  const Sample& back() const { return samples.back(); }
};

/// Zero-order-hold Gaussian output noise with std = reference_rms / 10^(snr/20).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double snr_db, double reference_rms);

  double std_dev() const { return std_dev_; }
  double next();

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double std_dev_;
};

NoiseStream output_noise(std::uint64_t seed, double snr_db, double reference_rms);

struct Derivatives {
  Vector x;
  Vector theta;
  Vector z;
  Vector w;
};

/// Right-hand side of the coupled plant + filter system at one instant.
Derivatives rhs(double t, const Vector& x, const Vector& z, const Vector& w,
                const CanonicalTheta& theta, double u_value, double y_value,
                const ObserverSpec& spec, const Disturbances& disturbances = {});

/// Fixed-step RK4. Throws kUnstable when a state norm exceeds
/// config.unstable_norm.
Trajectory integrate(const SimConfig& config, const ObserverSpec& spec);

/// 5 / (k * min|lambda_tilde|): time after which estimates are scored.
double default_discard_before(const ObserverSpec& spec);

/// RMS of the noise-free output over the configured horizon.
double clean_output_rms(const SimConfig& config, const ObserverSpec& spec);

/// 0.5 * min sigma_min(P(z, w))^2 over a noise-free, disturbance-free pilot
/// run, restricted to t >= discard_before_s.
double calibrate_p_min(const SimConfig& config, const ObserverSpec& spec, double discard_before_s);

}  // namespace luenid
