#pragma once

#include <string>
#include <vector>

#include "bridgelab/mixture.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

enum class InversionMode { deterministic, random };

// A noisy trajectory x_0..x_T for one data point together with the
// per-step residuals
//
//     u_t = x_{t-1} - mean_step(x_t, cond_orig, w_orig),
//
// the quantities a later edit replays in place of fresh noise. Replaying
// mean_step + u_t from x_T under the original condition reproduces x_traj;
// that telescope is the reconstruction guarantee everything else leans on.
struct InversionRecord {
    InversionMode mode = InversionMode::deterministic;
    Condition cond_orig;
    double w_orig = 1.0;
    double lambda = 0.0;  // schedule lambda the residuals were computed under
    std::vector<Vec> x_traj;  // size T + 1, index 0 is the data point
    std::vector<Vec> u_res;   // size T + 1, u_res[0] stays zero

    int T() const { return static_cast<int>(x_traj.size()) - 1; }
    const Vec& x0() const { return x_traj.front(); }
};

// Backward mean for one step t -> t-1:
//     (a_{t-1} / a_t) x_t + coef * guided_noise(x_t, t, cond, w).
Vec mean_step(const MixtureModel& model, const Vec& x_t, int t,
              const Condition& cond, double w, const Schedule& sched);

// Deterministic inversion: runs the backward-mean recursion in reverse,
//     x_t = (a_t / a_{t-1}) x_{t-1}
//           + (sigma_t - sigma_{t-1} a_t / a_{t-1}) * guided_noise(x_{t-1}, t-1),
// then records the replay mismatch as u_t. Only meaningful without
// transition noise; throws ModeMismatchError unless sched.lambda == 0.
InversionRecord ddim_invert(const MixtureModel& model, const Vec& x0,
                            const Condition& cond, double w, const Schedule& sched);

// Stochastic inversion: draws x_t from the forward marginal p(x_t | x_0)
// independently at every level and keeps the resulting residuals. Works for
// any lambda.
InversionRecord ef_invert(const MixtureModel& model, const Vec& x0,
                          const Condition& cond, double w, const Schedule& sched,
                          Rng& rng);

// Flat text dump, one row per level, full precision. load_record parses the
// dump back bit-exactly.
void dump_record(const InversionRecord& record, const std::string& path);
InversionRecord load_record(const std::string& path);

}  // namespace bridgelab
