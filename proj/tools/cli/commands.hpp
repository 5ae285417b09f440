#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "luenid/metrics.hpp"
#include "luenid/simulate.hpp"

namespace luenid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSpectrumOverlap = 3;
inline constexpr int kExitUnstable = 4;
inline constexpr int kExitBudget = 5;

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;  // overrides output_dir in the file
  std::optional<std::uint64_t> seed;             // overrides the seed list
  std::ostream* log = nullptr;                   // diagnostics; defaults to std::cerr
};

int cmd_identify(const CommandOptions& options);
int cmd_excitation_check(const CommandOptions& options);
int cmd_mcshane_compare(const CommandOptions& options);

/// One point of an identify sweep.
struct RunSpec {
  double k = 1.0;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
};

struct RunOutcome {
  RunSpec spec;
  RunReport report;
  double p_min = 0.0;
  bool p_min_calibrated = false;
  double discard_before_s = 0.0;
  double steady_from_s = 0.0;
  double noise_std = 0.0;
  double noise_reference_rms = 0.0;
  std::string trajectory_file;
};

std::vector<RunSpec> expand_sweep(const SweepSettings& sweep);
std::string trajectory_file_name(const RunSpec& run, bool tag_snr);

/// Observer spec, simulation config and report windows for one sweep point,
/// exactly as cmd_identify uses them.
struct PreparedRun {
  ObserverSpec spec;
  SimConfig sim;
  ReportWindows windows;
  bool p_min_calibrated = false;
};
PreparedRun prepare_run(const IdentifyConfig& config, const RunSpec& run);

/// Runs one sweep point and writes its trajectory CSV into `out_dir`.
RunOutcome execute_run(const IdentifyConfig& config, const RunSpec& run,
                       const std::filesystem::path& out_dir, bool tag_snr);

std::string trajectory_header(Eigen::Index n, Eigen::Index r);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, Eigen::Index n, Eigen::Index r);
/// Inverse of write_trajectory_csv. The CSV does not carry the true
/// parameters, so they are supplied (CLI runs keep them constant).
Trajectory read_trajectory_csv(const std::filesystem::path& path, const CanonicalTheta& theta_true,
                               Eigen::Index r);

/// Parallelism cap from LUENID_THREADS (>= 1), else hardware concurrency.
unsigned sweep_threads();

}  // namespace luenid::cli
