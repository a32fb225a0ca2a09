#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bridgelab/hfunc.hpp"
#include "bridgelab/inversion.hpp"

namespace bridgelab {

// How the correction term is evaluated. The explicit update takes the
// direction field at the current state and level t; the implicit update
// takes it at the step's own output point and level t-1, refined by a small
// fixed-point loop.
enum class EngineMode { explicit_update, implicit_update };

// Extra experts applied on top of the text-style edit. Reconstruction
// tethering is not a stack entry; it is the improve_recon loop below,
// which shrinks the running iterate toward its replay point.
struct StackEntry {
    enum class Kind { reward, classifier };
    Kind kind = Kind::reward;
    RewardSpec reward;         // kind == reward
    int classifier_label = 0;  // kind == classifier
    double classifier_scale = 1.0;
};

struct EditConfig {
    EngineMode mode = EngineMode::explicit_update;
    int K = 1;               // refinement iterations, implicit mode
    bool text_edit = true;   // apply the edit_direction_f term
    EditWeights weights;
    std::vector<StackEntry> stack;
    bool improve_recon = false;
    std::vector<double> recon_lambda;  // per level, size T + 1, implicit mode
    int skip_initial_steps = 0;        // pure reconstruction for the first steps
    std::uint64_t seed = 0;  // consumed by the experiment driver, not the engine
};

// One backward step of the trace. x_next is exactly x_base plus the terms
// accumulated in order; audit_decomposition recomputes that sum and any
// nonzero gap is an engine bug.
struct TraceStep {
    int t = 0;  // transition t -> t-1
    Vec x_t;
    Vec x_base;
    std::vector<std::pair<std::string, Vec>> terms;
    Vec x_next;
};

struct EditTrace {
    Vec x0_orig;
    std::vector<TraceStep> steps;  // T entries, t = T down to 1
    std::vector<std::string> warnings;

    const Vec& x0_edit() const { return steps.back().x_next; }
};

// Replay half of a step: backward mean under the original condition plus
// the recorded residual. Feeding x_traj[t] returns x_traj[t-1] up to one
// rounding per coordinate.
Vec base_step(const MixtureModel& model, const InversionRecord& record,
              const Vec& x_t_edit, int t, const Condition& cond_orig, double w_orig,
              const Schedule& sched);

struct StepResult {
    Vec x_base;
    std::vector<std::pair<std::string, Vec>> terms;
    Vec x_next;
};

// Direction field at (x_t, t), correction coef * f added after the replay,
// reward experts evaluated at x_t against the frozen edit-branch noise
// estimate.
StepResult explicit_step(const MixtureModel& model, const InversionRecord& record,
                         const Vec& x_t_edit, int t, const EditConfig& cfg,
                         const Schedule& sched);

// Direction field at the step output and level t-1, iterated K times from
// x_base. K = 0 is legal here (returns the bare replay) so tests can pin
// the collapse; run_edit requires K >= 1.
StepResult implicit_step(const MixtureModel& model, const InversionRecord& record,
                         const Vec& x_t_edit, int t, const EditConfig& cfg,
                         const Schedule& sched);

// Comparison baseline: single backward mean under the edit condition plus
// residual, reward gradients added at (x_t, t). No correction of the mean
// toward the original condition.
StepResult ef_combined_step(const MixtureModel& model, const InversionRecord& record,
                            const Vec& x_t_edit, int t, const EditConfig& cfg,
                            const Schedule& sched);

// Throws on inconsistent configuration; returns human-readable warnings
// (weight guideline violations) without failing.
std::vector<std::string> validate_edit_config(const MixtureModel& model,
                                              const InversionRecord& record,
                                              const EditConfig& cfg,
                                              const Schedule& sched);

// Full backward pass from x_T^edit = x_T^orig, dispatching on cfg.mode.
EditTrace run_edit(const MixtureModel& model, const InversionRecord& record,
                   const EditConfig& cfg, const Schedule& sched);

// Same loop driven by ef_combined_step.
EditTrace run_ef_baseline(const MixtureModel& model, const InversionRecord& record,
                          const EditConfig& cfg, const Schedule& sched);

// Max absolute gap, over all steps and coordinates, between x_next and
// x_base plus the logged terms re-accumulated in order. Exactly zero for
// any trace the engine emits.
double audit_decomposition(const EditTrace& trace);

}  // namespace bridgelab
