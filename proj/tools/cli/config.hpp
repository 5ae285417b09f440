#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "luenid/excitation.hpp"
#include "luenid/ltisys.hpp"
#include "luenid/observer.hpp"

namespace luenid::cli {

/// A config file that cannot be used. `field()` names the offending entry as
/// a dotted path, e.g. "observer.lambda_tilde[2]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SystemConfig {
  StateSpace reference;     // as given (canonical or general)
  CanonicalForm canonical;  // canonical parameters and change of basis
};

struct ObserverConfig {
  Vector lambda_tilde;
  std::optional<double> p_min;  // empty: calibrate from a noise-free pilot run
  InverseFallback fallback = InverseFallback::kZero;
  std::optional<Box> theta_box;  // empty: the true parameters only
  std::optional<double> overlap_margin;
  int overlap_grid_points = 3;
};

struct SimulationSettings {
  double step_s = 1e-3;
  double horizon_s = 20.0;
  Vector x0;
  Vector z0;
  Vector w0;
  int record_every = 1;
  std::optional<double> discard_before_s;
  std::optional<double> steady_from_s;
};

struct SweepSettings {
  std::vector<double> k;
  std::vector<std::optional<double>> snr_db;  // nullopt: noise off
  std::vector<std::uint64_t> seeds;
};

struct IdentifyConfig {
  SystemConfig system;
  ObserverConfig observer;
  Multisine input;
  SimulationSettings simulation;
  SweepSettings sweep;
  std::filesystem::path output_dir = "luenid_out";
  nlohmann::json source;  // the parsed file, echoed into the manifest
};

struct TimeGrid {
  double start_s = 0.0;
  double end_s = 20.0;
  int points = 500;

  double at(int i) const;
};

struct ExcitationConfig {
  Multisine input;
  int order = 1;
  TimeGrid grid;
  double epsilon_s = 1.0;
  double quad_step_s = 0.0;  // 0: epsilon / 200
  double rel_tol = kHankelRelTol;
  std::filesystem::path output_dir = "luenid_out";
};

struct McShaneSample {
  Vector x;
  CanonicalTheta theta;
  Vector w;
};

struct McShaneConfig {
  ObserverSpec spec;
  Box box;  // (x, theta_a, theta_b)
  int grid_points_per_dim = 41;
  std::optional<double> lipschitz_t;  // empty: estimate per sample
  double lipschitz_scale = 1.0;
  std::size_t max_grid_points = std::size_t{1} << 24;
  std::vector<McShaneSample> samples;
  std::filesystem::path output_dir = "luenid_out";
};

nlohmann::json load_json(const std::filesystem::path& path);

Multisine parse_input(const nlohmann::json& node, const std::string& path);

IdentifyConfig parse_identify(const nlohmann::json& root);
ExcitationConfig parse_excitation(const nlohmann::json& root);
McShaneConfig parse_mcshane(const nlohmann::json& root);

}  // namespace luenid::cli
