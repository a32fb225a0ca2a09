#pragma once

#include <cmath>
#include <vector>

#include "bridgelab/errors.hpp"

namespace bridgelab {

// Discrete noise schedule for a variance-preserving forward process
//
//     x_t = a_t * x_0 + sigma_t * eps,   eps ~ N(0, I),
//
// with a_t = sqrt(alpha_bar[t]) and sigma_t = sqrt(1 - alpha_bar[t]).
// Index 0 is the data end: alpha_bar[0] = 1 exactly, so a_0 = 1 and
// sigma_0 = 0. alpha_bar is strictly decreasing and stays positive at T.
//
// lambda in [0, 1] interpolates the backward transition noise between the
// deterministic (lambda = 0) and ancestral (lambda = 1) extremes.
struct Schedule {
    int T = 0;
    std::vector<double> alpha_bar;  // size T + 1
    double lambda = 0.0;

    double a(int t) const { return std::sqrt(alpha_bar.at(t)); }
    double sigma(int t) const { return std::sqrt(1.0 - alpha_bar.at(t)); }
};

// Everything one backward step t -> t-1 needs, derived once from the
// schedule so the samplers cannot disagree about coefficients.
//
//   omega  transition noise scale:
//          lambda * sigma_{t-1} * sqrt(1 - a_t^2 sigma_{t-1}^2 / (a_{t-1}^2 sigma_t^2))
//   coef   weight on the predicted noise in the backward mean:
//          sqrt(sigma_{t-1}^2 - omega^2) - sigma_t * a_{t-1} / a_t
//   eta    = -coef * sigma_t      step size paired with a score at level t
//   gamma  = -coef * sigma_{t-1}  step size paired with a score at level t-1
//
// coef is strictly negative for every valid schedule, so eta > 0 always and
// gamma > 0 for t >= 2. At t = 1 the data end has sigma_0 = 0, which forces
// gamma = 0 there; callers that divide by gamma must treat t = 1 specially.
struct StepParams {
    int t = 0;
    double a_t = 0.0;
    double a_prev = 0.0;
    double sigma_t = 0.0;
    double sigma_prev = 0.0;
    double omega = 0.0;
    double coef = 0.0;
    double eta = 0.0;
    double gamma = 0.0;
};

// Throws InvalidScheduleError unless alpha_bar has size T+1, starts at
// exactly 1, decreases strictly, and remains positive.
void validate_schedule(const Schedule& sched);

// Recipes. Each returns a validated schedule.
Schedule build_linear_beta(int T, double beta_min, double beta_max, double lambda);
Schedule build_cosine(int T, double lambda);
Schedule build_explicit(std::vector<double> alpha_bar, double lambda);

// Keeps num_steps of the original T levels (plus the data end), evenly
// spaced, always retaining level T. This is how a long training schedule is
// run with a short sampling budget.
Schedule subsequence(const Schedule& sched, int num_steps);

// Backward step coefficients for t in [1, T]. Throws std::out_of_range for
// t outside that range and InvalidScheduleError if sigma_t degenerates.
StepParams step_params(const Schedule& sched, int t);

}  // namespace bridgelab
