// modnls run <config> --out <dir> [--seed <u64>] [--threads <k>]
#include "modnls/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Modulation-space NLS laboratory: scale sweeps, exponent fits and solver runs"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiment described by an INI config");
  std::string config, out;
  std::uint64_t seed = 0;
  int threads = 0;
  run->add_option("config", config, "experiment config (INI)")->required();
  run->add_option("--out", out, "output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override [experiment] seed");
  auto* threads_opt = run->add_option("--threads", threads, "worker threads (overrides MODNLS_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : modnls::cli::kParseError;
  }

  modnls::cli::Overrides ov;
  if (*seed_opt) ov.seed = seed;
  if (*threads_opt) {
    if (threads < 1) {
      std::cerr << "modnls: --threads must be >= 1\n";
      return modnls::cli::kInvalidParameters;
    }
    ov.threads = threads;
  }
  return modnls::cli::run(config, out, ov);
}
