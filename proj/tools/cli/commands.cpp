#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cli/csv.hpp"
#include "luenid/error.hpp"

namespace luenid::cli {

using nlohmann::json;

namespace {

std::ostream& log_of(const CommandOptions& options) {
  return options.log ? *options.log : std::cerr;
}

std::filesystem::path resolve_out_dir(const CommandOptions& options,
                                      const std::filesystem::path& from_config) {
  std::filesystem::path dir = options.out_dir.value_or(from_config);
  std::filesystem::create_directories(dir);
  return dir;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json input_json(const Multisine& input) {
  json out = json::array();
  for (const SineTerm& term : input.terms()) {
    out.push_back({{"amplitude", term.amplitude},
                   {"freq_rad_s", term.freq_rad_s},
                   {"phase_rad", term.phase_rad}});
  }
  return out;
}

std::string snr_label(const std::optional<double>& snr) {
  return snr ? format_number(*snr) : "inf";
}

// Runs fn(i) for i in [0, count) on up to sweep_threads() workers. The first
// exception (by index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned workers = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kSpectrumOverlap: return kExitSpectrumOverlap;
    case ErrorCode::kUnstable: return kExitUnstable;
    case ErrorCode::kBoxTooLarge: return kExitBudget;
    default: return kExitCheckFailed;
  }
}

template <typename Body>
int guarded(const CommandOptions& options, Body&& body) {
  std::ostream& log = log_of(options);
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace

unsigned sweep_threads() {
  if (const char* env = std::getenv("LUENID_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value >= 1) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunSpec> expand_sweep(const SweepSettings& sweep) {
  std::vector<RunSpec> runs;
  for (const auto& snr : sweep.snr_db) {
    for (double k : sweep.k) {
      for (std::uint64_t seed : sweep.seeds) runs.push_back(RunSpec{k, snr, seed});
    }
  }
  return runs;
}

std::string trajectory_file_name(const RunSpec& run, bool tag_snr) {
  std::string name = "trajectory_" + format_number(run.k) + "_" + std::to_string(run.seed);
  if (tag_snr) name += "_snr" + snr_label(run.snr_db);
  return name + ".csv";
}

std::string trajectory_header(Eigen::Index n, Eigen::Index r) {
  std::ostringstream out;
  out << "t,u,y_clean,y_meas";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= r; ++i) out << ",z" << i;
  for (Eigen::Index i = 1; i <= r; ++i) out << ",w" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",xhat" << i;
  for (Eigen::Index i = 1; i <= 2 * n; ++i) out << ",thetahat" << i;
  out << ",valid,V";
  return out.str();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, Eigen::Index n, Eigen::Index r) {
  out << trajectory_header(n, r) << '\n';
  for (const Sample& s : traj.samples) {
    CsvRow row(out);
    row << s.t << s.u << s.y_clean << s.y_meas;
    for (Eigen::Index i = 0; i < n; ++i) row << s.x(i);
    for (Eigen::Index i = 0; i < r; ++i) row << s.z(i);
    for (Eigen::Index i = 0; i < r; ++i) row << s.w(i);
    for (Eigen::Index i = 0; i < n; ++i) row << s.x_hat(i);
    for (Eigen::Index i = 0; i < 2 * n; ++i) row << s.theta_hat(i);
    row << std::string(s.valid ? "1" : "0") << s.v;
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, const CanonicalTheta& theta_true,
                               Eigen::Index r) {
  const Eigen::Index n = theta_true.order();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != trajectory_header(n, r)) {
    throw std::runtime_error("unexpected trajectory header in " + path.string());
  }
  Trajectory traj;
  const Vector theta = theta_true.stacked();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::strtod(cell.c_str(), nullptr));
    const auto expected = static_cast<std::size_t>(4 + n + 2 * r + n + 2 * n + 2);
    if (cells.size() != expected) throw std::runtime_error("ragged trajectory row");
    std::size_t c = 0;
    auto take = [&](Eigen::Index count) {
      Vector v(count);
      for (Eigen::Index i = 0; i < count; ++i) v(i) = cells[c++];
      return v;
    };
    Sample s;
    s.t = cells[c++];
    s.u = cells[c++];
    s.y_clean = cells[c++];
    s.y_meas = cells[c++];
    s.x = take(n);
    s.z = take(r);
    s.w = take(r);
    s.x_hat = take(n);
    s.theta_hat = take(2 * n);
    s.valid = cells[c++] != 0.0;
    s.v = cells[c++];
    s.theta = theta;
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

PreparedRun prepare_run(const IdentifyConfig& config, const RunSpec& run) {
  const CanonicalForm& canonical = config.system.canonical;
  const Eigen::Index n = canonical.theta.order();

  PreparedRun prepared;
  ObserverSpec& spec = prepared.spec;
  spec.lambda_tilde = config.observer.lambda_tilde;
  spec.k = run.k;
  spec.n = n;
  spec.fallback = config.observer.fallback;

  const Box theta_box = config.observer.theta_box.value_or(
      Box{canonical.theta.stacked(), canonical.theta.stacked()});
  build_observer(spec, theta_box, config.observer.overlap_grid_points,
                 config.observer.overlap_margin.value_or(-1.0));

  const SimulationSettings& sim = config.simulation;
  SimConfig& cfg = prepared.sim;
  cfg.step_s = sim.step_s;
  cfg.horizon_s = sim.horizon_s;
  cfg.x0 = sim.x0.size() ? (canonical.Q * sim.x0).eval() : Vector();
  cfg.z0 = sim.z0;
  cfg.w0 = sim.w0;
  cfg.theta_true = canonical.theta;
  cfg.input = config.input;
  cfg.noise_snr_db = run.snr_db;
  cfg.rng_seed = run.seed;
  cfg.record_every = sim.record_every;

  const double discard = sim.discard_before_s.value_or(default_discard_before(spec));
  prepared.windows.decay_from = discard;
  prepared.windows.decay_to = sim.horizon_s;
  prepared.windows.steady_from = sim.steady_from_s.value_or(std::max(discard, 0.5 * sim.horizon_s));

  if (config.observer.p_min) {
    spec.p_min = *config.observer.p_min;
  } else {
    spec.p_min = calibrate_p_min(cfg, spec, discard);
    prepared.p_min_calibrated = true;
  }
  return prepared;
}

RunOutcome execute_run(const IdentifyConfig& config, const RunSpec& run,
                       const std::filesystem::path& out_dir, bool tag_snr) {
  const PreparedRun prepared = prepare_run(config, run);
  const Trajectory traj = integrate(prepared.sim, prepared.spec);

  RunOutcome outcome;
  outcome.spec = run;
  outcome.p_min = prepared.spec.p_min;
  outcome.p_min_calibrated = prepared.p_min_calibrated;
  outcome.discard_before_s = prepared.windows.decay_from;
  outcome.steady_from_s = prepared.windows.steady_from;
  outcome.noise_std = traj.noise_std;
  outcome.noise_reference_rms = traj.noise_reference_rms;
  outcome.report = summarize_run(traj, config.system.reference, prepared.windows);
  outcome.trajectory_file = trajectory_file_name(run, tag_snr);

  std::ofstream out = open_output(out_dir / outcome.trajectory_file);
  write_trajectory_csv(out, traj, prepared.spec.n, prepared.spec.r());
  return outcome;
}

int cmd_identify(const CommandOptions& options) {
  return guarded(options, [&]() {
    IdentifyConfig config = parse_identify(load_json(options.config));
    if (options.seed) config.sweep.seeds = {*options.seed};
    const std::filesystem::path out_dir = resolve_out_dir(options, config.output_dir);

    const std::vector<RunSpec> runs = expand_sweep(config.sweep);
    const bool tag_snr = config.sweep.snr_db.size() > 1;
    std::vector<RunOutcome> outcomes(runs.size());
    parallel_for(runs.size(), [&](std::size_t i) {
      outcomes[i] = execute_run(config, runs[i], out_dir, tag_snr);
    });

    {
      std::ofstream report = open_output(out_dir / "report.csv");
      report << "k,seed,snr_db,final_eigen_error,final_markov_error,decay_rate,validity_fraction,"
                "steady_eigen_error,steady_markov_error,steady_state_error,p_min\n";
      for (const RunOutcome& o : outcomes) {
        CsvRow row(report);
        row << o.spec.k << std::to_string(o.spec.seed) << snr_label(o.spec.snr_db)
            << o.report.final_eigen_error << o.report.final_markov_error
            << o.report.decay_rate.value_or(std::numeric_limits<double>::quiet_NaN())
            << o.report.validity_fraction << o.report.steady_eigen_error
            << o.report.steady_markov_error << o.report.steady_state_error << o.p_min;
      }
    }

    json manifest;
    manifest["command"] = "identify";
    manifest["config"] = config.source;
    manifest["canonical_theta"] = vector_json(config.system.canonical.theta.stacked());
    manifest["integrator"] = {{"method", "rk4-fixed-step"},
                              {"step_s", config.simulation.step_s},
                              {"horizon_s", config.simulation.horizon_s},
                              {"record_every", config.simulation.record_every}};
    manifest["input"] = input_json(config.input);
    manifest["lambda_tilde"] = vector_json(config.observer.lambda_tilde);
    manifest["fallback"] =
        config.observer.fallback == InverseFallback::kZero ? "zero" : "hold_previous";
    manifest["noise_model"] =
        "i.i.d. zero-mean Gaussian, std = rms(noise-free y over the horizon) / 10^(snr_db/20), "
        "one draw per integration step held over the step, added to the y that drives z";
    manifest["p_min_rule"] = "0.5 * min sigma_min(P)^2 over a noise-free pilot run, t >= discard_before_s";
    manifest["metrics"] = {{"eigen_pairing", "greedy minimal distance"},
                           {"steady_statistic", "median over t >= steady_from_s"},
                           {"decay_window", "[discard_before_s, horizon_s]"}};
    json run_list = json::array();
    for (const RunOutcome& o : outcomes) {
      run_list.push_back({{"k", o.spec.k},
                          {"seed", o.spec.seed},
                          {"snr_db", o.spec.snr_db ? json(*o.spec.snr_db) : json(nullptr)},
                          {"p_min", o.p_min},
                          {"p_min_calibrated", o.p_min_calibrated},
                          {"discard_before_s", o.discard_before_s},
                          {"steady_from_s", o.steady_from_s},
                          {"noise_std", o.noise_std},
                          {"noise_reference_rms", o.noise_reference_rms},
                          {"trajectory", o.trajectory_file}});
    }
    manifest["runs"] = run_list;
    std::ofstream out = open_output(out_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_excitation_check(const CommandOptions& options) {
  return guarded(options, [&]() {
    const ExcitationConfig config = parse_excitation(load_json(options.config));
    const std::filesystem::path out_dir = resolve_out_dir(options, config.output_dir);
    std::ofstream out = open_output(out_dir / "excitation.csv");
    out << "t,sigma_min_hankel,rho_gram\n";
    bool all_exciting = true;
    for (int i = 0; i < config.grid.points; ++i) {
      const double t = config.grid.at(i);
      const ExcitationCheck check = diff_exciting_order(config.input, t, config.order, config.rel_tol);
      const PersistencyGram gram =
          persistency_gram(config.input, t, config.epsilon_s, config.order, config.quad_step_s);
      all_exciting = all_exciting && check.exciting;
      CsvRow(out) << t << check.sigma_min << gram.min_eigenvalue;
    }
    if (!all_exciting) {
      log_of(options) << "input is not differentially exciting of order " << config.order
                      << " on the whole grid\n";
    }
    return all_exciting ? kExitOk : kExitCheckFailed;
  });
}

int cmd_mcshane_compare(const CommandOptions& options) {
  return guarded(options, [&]() {
    const McShaneConfig config = parse_mcshane(load_json(options.config));
    const std::filesystem::path out_dir = resolve_out_dir(options, config.output_dir);
    McShaneOptions grid;
    grid.grid_points_per_dim = config.grid_points_per_dim;
    grid.max_grid_points = config.max_grid_points;
    const double diagonal = grid_cell_diagonal(config.box, config.grid_points_per_dim);

    std::ofstream out = open_output(out_dir / "mcshane_compare.csv");
    out << "sample,x,theta_a,theta_b,explicit_x,explicit_theta_a,explicit_theta_b,explicit_valid,"
           "mcshane_x,mcshane_theta_a,mcshane_theta_b,lipschitz_t,discrepancy,grid_diagonal\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < config.samples.size(); ++i) {
      const McShaneSample& s = config.samples[i];
      const Vector z = t_map(s.x, s.theta, s.w, config.spec);
      const InverseEstimate exact = t_star_explicit(z, s.w, config.spec);
      const double lipschitz =
          config.lipschitz_scale *
          config.lipschitz_t.value_or(estimate_injectivity_modulus(config.box, s.w, config.spec));
      const InverseEstimate grid_est = mcshane_inverse(z, s.w, config.box, lipschitz, config.spec, grid);

      Vector lhs(3);
      Vector rhs(3);
      lhs << exact.x, exact.theta.stacked();
      rhs << grid_est.x, grid_est.theta.stacked();
      const double discrepancy = exact.valid ? (lhs - rhs).norm() : std::numeric_limits<double>::infinity();
      worst = std::max(worst, discrepancy);

      CsvRow row(out);
      row << std::to_string(i) << s.x(0) << s.theta.a(0) << s.theta.b(0) << lhs(0) << lhs(1) << lhs(2)
          << std::string(exact.valid ? "1" : "0") << rhs(0) << rhs(1) << rhs(2) << lipschitz
          << discrepancy << diagonal;
    }
    if (worst > diagonal) {
      log_of(options) << "max discrepancy " << format_number(worst) << " exceeds grid diagonal "
                      << format_number(diagonal) << '\n';
      return kExitCheckFailed;
    }
    return kExitOk;
  });
}

}  // namespace luenid::cli
