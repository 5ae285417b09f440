#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "cli/config.hpp"

using namespace luenid;
using namespace luenid::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("luenid_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int run(int (*cmd)(const CommandOptions&), const fs::path& config, const fs::path& out,
        std::string* log_text = nullptr) {
  std::ostringstream log;
  CommandOptions opts;
  opts.config = config;
  opts.out_dir = out;
  opts.log = &log;
  const int code = cmd(opts);
  if (log_text) *log_text = log.str();
  return code;
}

const char* kSmallIdentify = R"({
  "system": { "theta_a": [3.59, 3.1675, 0.574814], "theta_b": [-0.6864, -1.974368, -0.5479232] },
  "observer": { "r": 11, "lambda_tilde_step": 0.1, "overlap_margin": 0.001 },
  "input": { "count": 11, "freq_spacing_rad_s": 0.3 },
  "simulation": { "step_s": 0.001, "horizon_s": 12.0, "record_every": 50, "z0": [1,0,0,0,0,0,0,0,0,0,0] },
  "sweep": { "k": [5, 10], "snr_db": [40], "seeds": [3] }
})";

}  // namespace

TEST_CASE("identify: malformed configs name the field") {
  const fs::path dir = scratch_dir("malformed");
  struct Case {
    const char* text;
    const char* field;
  };
  const Case cases[] = {
      {R"({"observer": {}, "input": {}, "simulation": {}, "sweep": {}})", "system"},
      {R"({"system": {"theta_a": [1], "theta_b": [1]}, "observer": {"lambda_tilde": [-1, -2, -3]},
          "input": {"count": 2}, "simulation": {"step_s": -1}, "sweep": {"k": [1]}})",
       "simulation.step_s"},
      {R"({"system": {"theta_a": [1], "theta_b": [1, 2]}, "observer": {"lambda_tilde": [-1, -2, -3]},
          "input": {"count": 2}, "simulation": {}, "sweep": {"k": [1]}})",
       "system"},
      {R"({"system": {"theta_a": [1], "theta_b": [1]}, "observer": {"lambda_tilde": [-1, -2, -3]},
          "input": {"count": 2}, "simulation": {"horizon_s": 1}, "sweep": {"k": ["fast"]}})",
       "sweep.k"},
      {"{ not json", "<file>"},
  };
  for (const Case& c : cases) {
    CAPTURE(c.text);
    std::string log;
    CHECK(run(cmd_identify, write_file(dir, "bad.json", c.text), dir / "out", &log) == kExitConfig);
    CHECK(log.find(c.field) != std::string::npos);
  }
  std::string log;
  CHECK(run(cmd_identify, dir / "missing.json", dir / "out", &log) == kExitConfig);
}

TEST_CASE("identify: spectrum overlap and instability exit codes") {
  const fs::path dir = scratch_dir("codes");
  // plant pole at -2 sits on the second filter eigenvalue
  const fs::path overlap = write_file(dir, "overlap.json", R"({
    "system": {"theta_a": [2], "theta_b": [1]},
    "observer": {"lambda_tilde": [-1, -2, -3]},
    "input": {"count": 2}, "simulation": {"horizon_s": 1}, "sweep": {"k": [1]}})");
  CHECK(run(cmd_identify, overlap, dir / "a") == kExitSpectrumOverlap);
  const fs::path unstable = write_file(dir, "unstable.json", R"({
    "system": {"theta_a": [-5], "theta_b": [1]},
    "observer": {"lambda_tilde": [-1, -2, -3], "p_min": 0},
    "input": {"count": 2}, "simulation": {"horizon_s": 20}, "sweep": {"k": [1]}})");
  CHECK(run(cmd_identify, unstable, dir / "b") == kExitUnstable);
}

TEST_CASE("identify: outputs and determinism") {
  const fs::path dir = scratch_dir("determinism");
  const fs::path config = write_file(dir, "small.json", kSmallIdentify);
  REQUIRE(run(cmd_identify, config, dir / "first") == kExitOk);
  REQUIRE(run(cmd_identify, config, dir / "second") == kExitOk);

  for (const char* name : {"trajectory_5_3.csv", "trajectory_10_3.csv", "report.csv", "manifest.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / "first" / name));
    CHECK(slurp(dir / "first" / name) == slurp(dir / "second" / name));
  }
  const auto header = read_csv(dir / "first" / "trajectory_5_3.csv").front();
  CHECK(header.size() == 4 + 3 + 11 + 11 + 3 + 6 + 2);
  CHECK(header.front() == "t");
  CHECK(header.back() == "V");
  CHECK(read_csv(dir / "first" / "report.csv").size() == 3);
}

TEST_CASE("identify: report is recomputable from the trajectory") {
  const fs::path dir = scratch_dir("recompute");
  const fs::path config_path = write_file(dir, "small.json", kSmallIdentify);
  REQUIRE(run(cmd_identify, config_path, dir / "out") == kExitOk);

  const IdentifyConfig config = parse_identify(load_json(config_path));
  const auto report = read_csv(dir / "out" / "report.csv");
  const std::vector<RunSpec> runs = expand_sweep(config.sweep);
  REQUIRE(report.size() == runs.size() + 1);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& row = report[i + 1];
    const PreparedRun prepared = prepare_run(config, runs[i]);
    const Trajectory traj = read_trajectory_csv(dir / "out" / trajectory_file_name(runs[i], false),
                                                prepared.sim.theta_true, prepared.spec.r());
    const RunReport again = summarize_run(traj, config.system.reference, prepared.windows);
    auto cell = [&](std::size_t c) { return std::strtod(row[c].c_str(), nullptr); };
    CHECK(cell(0) == runs[i].k);
    CHECK(cell(3) == again.final_eigen_error);
    CHECK(cell(4) == again.final_markov_error);
    REQUIRE(again.decay_rate.has_value());
    CHECK(cell(5) == *again.decay_rate);
    CHECK(cell(6) == again.validity_fraction);
    CHECK(cell(7) == again.steady_eigen_error);
    CHECK(cell(8) == again.steady_markov_error);
    CHECK(cell(9) == again.steady_state_error);
  }
}

TEST_CASE("excitation-check") {
  const fs::path dir = scratch_dir("excitation");
  CHECK(run(cmd_excitation_check, LUENID_CONFIG_DIR "/excitation_6sine.json", dir / "six") == kExitOk);
  CHECK(run(cmd_excitation_check, LUENID_CONFIG_DIR "/excitation_single_sine.json", dir / "one") ==
        kExitCheckFailed);

  const fs::path zero = write_file(dir, "zero.json", R"({
    "input": {"terms": []}, "order": 1,
    "time_grid": {"start_s": 0, "end_s": 1, "points": 5}, "epsilon_s": 1})");
  CHECK(run(cmd_excitation_check, zero, dir / "zero") == kExitCheckFailed);
  const auto rows = read_csv(dir / "zero" / "excitation.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"t", "sigma_min_hankel", "rho_gram"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::strtod(rows[i][1].c_str(), nullptr) == 0.0);
    CHECK(std::strtod(rows[i][2].c_str(), nullptr) == 0.0);
  }

  const auto six = read_csv(dir / "six" / "excitation.csv");
  CHECK(six.size() == 501);
  for (std::size_t i = 1; i < six.size(); ++i) CHECK(std::strtod(six[i][2].c_str(), nullptr) > 0.0);

  const fs::path bad = write_file(dir, "bad.json", R"({"input": {"count": 2}, "order": -1})");
  std::string log;
  CHECK(run(cmd_excitation_check, bad, dir / "bad", &log) == kExitConfig);
  CHECK(log.find("order") != std::string::npos);
}

TEST_CASE("mcshane-compare") {
  const fs::path dir = scratch_dir("mcshane");
  CHECK(run(cmd_mcshane_compare, LUENID_CONFIG_DIR "/mcshane_n1.json", dir / "ok") == kExitOk);
  CHECK(read_csv(dir / "ok" / "mcshane_compare.csv").size() == 22);

  const std::string base = R"("observer": {"lambda_tilde": [-2, -3, -4]},
    "box": {"lower": [0, 0.5, 0.5], "upper": [1, 1.5, 1.5]}, "grid_points_per_dim": 41)";
  const fs::path oversized = write_file(dir, "big_lt.json", "{" + base + R"(,
    "lipschitz_scale": 10,
    "random_samples": {"count": 20, "seed": 7}})");
  CHECK(run(cmd_mcshane_compare, oversized, dir / "big") != kExitOk);

  const fs::path empty = write_file(dir, "empty.json", "{" + base + R"(, "samples": []})");
  CHECK(run(cmd_mcshane_compare, empty, dir / "empty") == kExitConfig);

  const fs::path budget = write_file(dir, "budget.json", "{" + base + R"(,
    "max_grid_points": 1000, "random_samples": {"count": 1}})");
  CHECK(run(cmd_mcshane_compare, budget, dir / "budget") == kExitBudget);

  const fs::path second_order = write_file(dir, "n2.json", R"({
    "observer": {"lambda_tilde": [-1, -2, -3, -4, -5, -6, -7]},
    "box": {"lower": [0, 0, 0, 0, 0, 0], "upper": [1, 1, 1, 1, 1, 1]},
    "random_samples": {"count": 1}})");
  CHECK(run(cmd_mcshane_compare, second_order, dir / "n2") == kExitConfig);
}

TEST_CASE("executable: flags and exit codes") {
  const fs::path dir = scratch_dir("binary");
  const std::string exe = LUENID_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " excitation-check --config " LUENID_CONFIG_DIR "/excitation_6sine.json --out " +
               (dir / "x").string()) == 0);
  CHECK(fs::exists(dir / "x" / "excitation.csv"));
  CHECK(status(exe + " excitation-check") == kExitConfig);
  CHECK(status(exe + " no-such-command") == kExitConfig);

  const fs::path config = write_file(dir, "small.json", kSmallIdentify);
  CHECK(status(exe + " identify --config " + config.string() + " --seed 11 --out " +
               (dir / "seeded").string()) == 0);
  CHECK(fs::exists(dir / "seeded" / "trajectory_5_11.csv"));
  CHECK_FALSE(fs::exists(dir / "seeded" / "trajectory_5_3.csv"));
}
