#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace cmt::cli;
  CLI::App app{"Computerized mastery testing: item pools, threshold calibration and simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  Overrides overrides;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (0: available parallelism)");
  auto* out_opt = app.add_option("--out", out, "output file");
  app.add_option("--config", config, "run configuration file");

  auto* pool = app.add_subcommand("pool", "generate or validate an item pool CSV");
  pool->require_subcommand(1);
  auto* generate = pool->add_subcommand("generate", "write a synthetic 3-PL item pool");
  std::size_t size = 0;
  int categories = 0;
  generate->add_option("--size", size, "number of items")->required()->check(CLI::PositiveNumber);
  generate->add_option("--categories", categories, "content categories (0: none)")->check(CLI::NonNegativeNumber);
  auto* validate = pool->add_subcommand("validate", "check a pool CSV and print parameter summaries");
  std::string pool_file;
  validate->add_option("file", pool_file, "pool CSV")->required();

  auto* calibrate = app.add_subcommand("calibrate", "calibrate the implied alternative and thresholds");
  auto* simulate = app.add_subcommand("simulate", "simulate operating characteristics of the configured rules");

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) overrides.seed = seed;
  if (*workers_opt) overrides.workers = workers;
  if (*out_opt) overrides.out = out;

  try {
    if (generate->parsed()) {
      if (!*seed_opt || !*out_opt) throw ConfigError("pool generate requires --seed and --out");
      cmd_pool_generate(size, seed, categories, out);
    } else if (validate->parsed()) {
      cmd_pool_validate(pool_file, std::cout);
    } else {
      if (config.empty()) throw ConfigError("--config is required");
      if (calibrate->parsed())
        cmd_calibrate(config, overrides, std::cout);
      else if (simulate->parsed())
        cmd_simulate(config, overrides, std::cout);
    }
  } catch (const cmt::BracketError& e) {
    std::cerr << "error: " << e.what() << '\n' << "probe trace (x, value):\n";
    for (const auto& p : e.trace()) std::cerr << "  " << p.x << ' ' << p.value << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
