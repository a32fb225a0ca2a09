#pragma once

#include <string>
#include <vector>

#include "bridgelab/config.hpp"
#include "bridgelab/engine.hpp"
#include "bridgelab/metrics.hpp"

namespace bridgelab {

// One point of the sweep grid: the base edit settings with this cell's
// overrides already applied, plus the override values for reporting.
struct SweepCell {
    int index = 0;
    double w_edit = 0.0;
    double w_hat_orig = 0.0;
    int K = 1;
    double rho = 0.0;
    EditConfig cfg;
};

// Cross product of the non-empty sweep axes in a fixed order (w_edit
// outermost, then w_hat_orig, K, rho). An empty axis contributes the base
// value. The schedule is needed to size recon_lambda.
std::vector<SweepCell> expand_sweep(const ExperimentConfig& c, const Schedule& sched);

struct CellResult {
    EditReport report;
    std::vector<EditTrace> traces;  // one per seed, in seed order
    std::vector<std::string> warnings;
};

// All seeds of one cell: sample, invert, edit, score. Seeds are the rng
// roots, so two cells with the same seed list edit the same originals.
CellResult run_cell(const ExperimentConfig& c, const SweepCell& cell,
                    const Schedule& sched);

// Text builders, deterministic byte-for-byte. Kept separate from file I/O
// so formats are testable in memory.
std::string trace_csv(const EditTrace& trace);
std::string report_csv(const std::vector<SweepCell>& cells,
                       const std::vector<CellResult>& results);
std::string seeds_csv(const ExperimentConfig& c, const SweepCell& cell,
                      const CellResult& result);
std::string cell_svg(const MixtureModel& model, const std::vector<EditTrace>& traces);
std::string trace_svg_from_csv(const std::string& csv_text);

struct RunResult {
    std::vector<std::string> artifacts;  // paths relative to the output dir, sorted
    std::vector<std::string> warnings;
};

// Full experiment: expand the sweep, run cells on a small worker pool,
// write report/seed/trace CSVs, one SVG per cell, and a manifest whose
// embedded config reruns the experiment. workers <= 0 picks a default.
RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir,
                         int workers = 0);

}  // namespace bridgelab
