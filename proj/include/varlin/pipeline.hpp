#ifndef VARLIN_PIPELINE_HPP
#define VARLIN_PIPELINE_HPP

#include <string>

#include "varlin/config.hpp"

namespace varlin {

enum class Stage { Validate, Constants, Blocks, Decompose, Diagnose, Report };

Stage stage_from_name(const std::string& s);

// Runs the pipeline up to the requested stage, writing CSVs and the manifest
// into cfg.out.  Throws on config/precondition/invariant/resource failures;
// the CLI maps exception types to exit codes.
void run_experiment(const ExperimentConfig& cfg, Stage upto);

// Reshapes a report bundle into long-format plot series (series,x,y,y_err).
void emit_plot_data(const std::string& bundle_dir, const std::string& plot_id,
                    const std::string& out_path);

}  // namespace varlin

#endif
