#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "rabi/run.hpp"
#include "rabi/serialize.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "rabi-flow: certificates, constant ledgers, trajectory solves and "
      "a-priori bound audits for Rabinowitz-type gradient flows on R^2n"};

  std::string command;
  app.add_option("command", command,
                 "one of certify | ledger | orbits | flow | audit | report")
      ->required();
  std::string config_path;
  app.add_option("--config", config_path, "experiment configuration file")
      ->required();
  std::string out_dir;
  app.add_option("--out", out_dir, "output directory")->required();
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "override config entries, key.path=value");
  std::uint64_t seed = 0;
  const auto* seed_opt =
      app.add_option("--seed", seed, "override the master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    rabi::ExperimentConfig cfg = rabi::ExperimentConfig::from_file(config_path);
    for (const auto& o : overrides) cfg.set_override(o);
    if (seed_opt->count() > 0) cfg.set_seed(seed);
    return rabi::run_subcommand(command, cfg, out_dir);
  } catch (const rabi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    try {
      rabi::write_json_file(std::filesystem::path(out_dir) / "error.json",
                            {{"type", "config"}, {"error", e.what()}});
    } catch (...) {
    }
    return rabi::kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    try {
      rabi::write_json_file(std::filesystem::path(out_dir) / "error.json",
                            {{"type", "crash"}, {"error", e.what()}});
    } catch (...) {
    }
    return rabi::kCrash;
  }
}
