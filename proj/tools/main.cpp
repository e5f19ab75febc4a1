#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "eiklab/harness.hpp"

namespace {

// Exit codes: 0 = all checks passed, 1 = some check failed, 2 = config or
// usage error (bad file, bad key, broken precondition, missing bundle).

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers, bool dump) {
  eiklab::ExperimentConfig cfg;
  try {
    cfg = eiklab::load_config(config_path);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (workers >= 0) cfg.workers = workers;
    if (dump) cfg.dump_fields = true;
    eiklab::validate_config(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  try {
    const auto bundle = eiklab::run_experiment(cfg);
    for (const auto& check : bundle.checks)
      std::printf("%-12s %s\n", check.id.c_str(), check.pass ? "pass" : "FAIL");
    if (!cfg.output.empty()) std::printf("summary: %s/summary.json\n", cfg.output.c_str());
    return bundle.all_pass ? 0 : 1;
  } catch (const eiklab::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cmd_validate(const std::string& config_path) {
  try {
    const auto cfg = eiklab::load_config(config_path);
    eiklab::validate_config(cfg);
    const auto checks = eiklab::effective_checks(cfg);
    std::printf("ok: %s (grid %d^3, spacing %g", cfg.name.c_str(), cfg.cells + 1,
                cfg.grid().h);
    std::printf(", checks:");
    if (checks.empty()) std::printf(" none");
    for (const auto& c : checks) std::printf(" %s", c.c_str());
    std::printf(")\n");
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

int cmd_plots(const std::string& bundle_dir, const std::string& which) {
  try {
    const auto summary_path = std::filesystem::path(bundle_dir) / "summary.json";
    if (!std::filesystem::exists(summary_path))
      throw eiklab::ConfigError("plots: no summary.json under " + bundle_dir);
    const auto summary = eiklab::io::read_json(summary_path);
    const auto written = eiklab::emit_plots(summary, bundle_dir, which);
    for (const auto& name : written) std::printf("wrote %s/%s\n", bundle_dir.c_str(), name.c_str());
    if (written.empty()) std::printf("no curves in this bundle\n");
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eikonal-geometry numerical laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, bundle_dir, which = "all";
  int workers = -1;
  bool dump = false;

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--workers", workers, "worker threads for the (lambda, epsilon) sweep");
  run->add_flag("--dump", dump, "dump solution fields next to the summary");

  auto* validate = app.add_subcommand("validate", "check a config file without computing");
  validate->add_option("--config", config_path, "experiment config file")->required();

  auto* plots = app.add_subcommand("plots", "emit plot CSVs from a finished bundle");
  plots->add_option("--bundle", bundle_dir, "bundle directory holding summary.json")->required();
  plots->add_option("--which", which, "all | ratio | decay | eps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems share the config-error exit code
  }

  if (run->parsed()) return cmd_run(config_path, out_dir, workers, dump);
  if (validate->parsed()) return cmd_validate(config_path);
  return cmd_plots(bundle_dir, which);
}
