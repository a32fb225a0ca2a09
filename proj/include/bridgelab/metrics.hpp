#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bridgelab/engine.hpp"
#include "bridgelab/hfunc.hpp"
#include "bridgelab/mixture.hpp"
#include "bridgelab/vec.hpp"

namespace bridgelab {

// What an editing experiment is trying to achieve, stated in model space:
// push samples toward edit_label along edit_direction. The direction defines
// the faithfulness split: displacement along it is the edit doing its job,
// displacement orthogonal to it is collateral drift.
struct EditTask {
    int edit_label = 0;
    Vec edit_direction;
    std::optional<RewardSpec> reward;
};

// Projection of x onto the complement of direction: x - v (v.x)/(v.v).
Vec project_off(const Vec& x, const Vec& direction);

// Mixture mean restricted to components carrying the given label, weights
// renormalized within the label.
Vec class_mean(const MixtureModel& model, int label);

// Standard swap task: direction runs from the source class mean to the
// target class mean, no reward term.
EditTask make_swap_task(const MixtureModel& model, int from_label, int to_label);

// Per-seed scores plus their aggregates. The arrays are the ground truth;
// the mean/std fields are derived and must stay recomputable from them.
struct EditReport {
    std::vector<double> target_posterior;
    std::vector<double> faithfulness;
    std::vector<double> reward_value;
    double posterior_mean = 0.0;
    double posterior_std = 0.0;
    double faithfulness_mean = 0.0;
    double faithfulness_std = 0.0;
    double reward_mean = 0.0;
    double reward_std = 0.0;
    std::size_t seeds() const { return target_posterior.size(); }
};

// Left-fold mean and sample standard deviation (n-1 denominator, 0 when
// n < 2). Exposed so reports stay bit-reproducible from their arrays.
double mean_of(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);

// Score a batch of completed edits against the task. Posterior is evaluated
// at the data level (t = 0); faithfulness is the orthogonal displacement
// between edited and original endpoints; reward defaults to 0 when the task
// carries no reward spec.
EditReport evaluate(const MixtureModel& model, const std::vector<EditTrace>& traces,
                    const EditTask& task, const Schedule& sched);

// CSV fragment for one report, matching the runner's table layout.
std::string report_csv_columns();
std::string report_csv_values(const EditReport& report);

}  // namespace bridgelab
