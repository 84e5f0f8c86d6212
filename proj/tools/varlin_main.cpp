#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "varlin/config.hpp"
#include "varlin/errors.hpp"
#include "varlin/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"block-partitioned variance analysis for non-stationary finite-state models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string tolerance = "";
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int threads_override = 0;

  app.add_option("--config", config_path, "experiment configuration file")->required();
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--seed", seed_override, "master seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--threads", threads_override, "worker thread count override");
  app.add_option("--tolerance-profile", tolerance, "strict or default");

  auto add_stage = [&](const char* name, const char* desc) { return app.add_subcommand(name, desc); };
  CLI::App* sc_validate = add_stage("validate", "validate the configuration and models");
  CLI::App* sc_constants = add_stage("constants", "compute mixing profiles and growth constants");
  CLI::App* sc_blocks = add_stage("blocks", "construct and certify the block partitions");
  CLI::App* sc_decompose = add_stage("decompose", "run the martingale decomposition checks");
  CLI::App* sc_diagnose = add_stage("diagnose", "run the selected diagnostics");
  CLI::App* sc_report = add_stage("report", "full pipeline plus manifest");
  CLI::App* sc_plot = add_stage("plot", "emit plot series from a report bundle");
  std::string plot_id, plot_out = "plot.csv";
  sc_plot->add_option("--plot-id", plot_id, "dk_vs_sigma | mdp_curve | block_variances")
      ->required();
  sc_plot->add_option("--plot-out", plot_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    varlin::ExperimentConfig cfg = varlin::load_config(config_path);
    if (!out_override.empty()) cfg.out = out_override;
    if (seed_set) cfg.seed = seed_override;
    if (threads_override > 0) cfg.threads = threads_override;
    if (!tolerance.empty()) cfg.tolerance_profile = tolerance;
    cfg.validate();

    if (sc_plot->parsed()) {
      varlin::emit_plot_data(cfg.out, plot_id, plot_out);
      return 0;
    }
    varlin::Stage stage = varlin::Stage::Report;
    if (sc_validate->parsed()) stage = varlin::Stage::Validate;
    if (sc_constants->parsed()) stage = varlin::Stage::Constants;
    if (sc_blocks->parsed()) stage = varlin::Stage::Blocks;
    if (sc_decompose->parsed()) stage = varlin::Stage::Decompose;
    if (sc_diagnose->parsed()) stage = varlin::Stage::Diagnose;
    if (sc_report->parsed()) stage = varlin::Stage::Report;
    varlin::run_experiment(cfg, stage);
    std::cout << "ok\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return varlin::exit_code_for(e);
  }
}
