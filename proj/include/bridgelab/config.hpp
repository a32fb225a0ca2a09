#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridgelab/engine.hpp"
#include "bridgelab/inversion.hpp"
#include "bridgelab/metrics.hpp"
#include "bridgelab/mixture.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

// Grids to cross. An empty axis means "use the base value from edit".
struct SweepAxes {
    std::vector<double> w_edit;
    std::vector<double> w_hat_orig;
    std::vector<int> K;
    std::vector<double> rho;
};

// Everything one experiment needs, parsed out of a single JSON file. The
// schedule and per-cell EditConfigs are materialized later so that sweep
// overrides and subsequencing happen in one place.
struct ExperimentConfig {
    // schedule section
    std::string schedule_recipe;  // linear_beta | cosine | explicit
    int T = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<double> alpha_bar;  // explicit recipe only
    double lambda = 1.0;
    int num_steps = 0;  // 0 keeps the full grid, else subsample to this many

    MixtureModel model;

    InversionMode inversion = InversionMode::random;

    // base edit settings; recon_lambda is stored as a scalar and expanded to
    // a per-level vector once the final schedule length is known
    EditConfig edit;
    double recon_lambda_scalar = 0.0;

    int task_edit_label = 0;
    int task_from_label = 0;

    std::vector<std::uint64_t> seeds;
    SweepAxes sweep;
    std::string output_dir = "out";
};

// Parse and validate. Errors are ConfigError with the offending JSON path
// (or the parser's line/column for syntax problems).
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Canonical re-serialization. parse_config(to_json(c)) reproduces c, which
// is what lets a manifest's embedded config rerun the experiment.
nlohmann::json to_json(const ExperimentConfig& c);

// Build the sampling grid the experiment actually runs on (recipe, then
// optional subsampling).
Schedule make_schedule(const ExperimentConfig& c);

// Task for the metrics module: swap from task_from_label toward
// task_edit_label, reward mirrored from the first reward expert if any.
EditTask make_task(const ExperimentConfig& c);

// FNV-1a over the canonical dump; stable fingerprint for manifests.
std::string config_fingerprint(const nlohmann::json& j);

}  // namespace bridgelab
