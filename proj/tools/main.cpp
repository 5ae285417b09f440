#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"luenid: joint state and parameter estimation for SISO LTI systems"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out;
    std::int64_t seed = -1;
  };
  Args identify_args;
  Args excitation_args;
  Args mcshane_args;

  auto add_common = [](CLI::App* cmd, Args& args) {
    cmd->add_option("--config", args.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", args.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", args.seed, "RNG seed (overrides the config seed list)")
        ->check(CLI::NonNegativeNumber);
  };
  CLI::App* identify = app.add_subcommand("identify", "run the observer on a configured sweep");
  add_common(identify, identify_args);
  CLI::App* excitation =
      app.add_subcommand("excitation-check", "check differential excitation of an input");
  add_common(excitation, excitation_args);
  CLI::App* mcshane =
      app.add_subcommand("mcshane-compare", "compare the explicit and grid (McShane) inverses, n = 1");
  add_common(mcshane, mcshane_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : luenid::cli::kExitConfig;
  }

  auto options_of = [](const Args& args) {
    luenid::cli::CommandOptions options;
    options.config = args.config;
    if (!args.out.empty()) options.out_dir = std::filesystem::path(args.out);
    if (args.seed >= 0) options.seed = static_cast<std::uint64_t>(args.seed);
    return options;
  };

  if (identify->parsed()) return luenid::cli::cmd_identify(options_of(identify_args));
  if (excitation->parsed()) return luenid::cli::cmd_excitation_check(options_of(excitation_args));
  return luenid::cli::cmd_mcshane_compare(options_of(mcshane_args));
}
