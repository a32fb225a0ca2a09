#include "bridgelab/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bridgelab {

namespace {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidScheduleError("lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
}

}  // namespace

void validate_schedule(const Schedule& sched) {
    if (sched.T < 1) {
        throw InvalidScheduleError("schedule needs T >= 1");
    }
    if (static_cast<int>(sched.alpha_bar.size()) != sched.T + 1) {
        throw InvalidScheduleError("alpha_bar must have T + 1 entries");
    }
    if (sched.alpha_bar[0] != 1.0) {
        throw InvalidScheduleError("alpha_bar[0] must be exactly 1");
    }
    for (int t = 1; t <= sched.T; ++t) {
        if (!(sched.alpha_bar[t] > 0.0)) {
            throw InvalidScheduleError("alpha_bar must stay positive, fails at t=" + std::to_string(t));
        }
        if (!(sched.alpha_bar[t] < sched.alpha_bar[t - 1])) {
            throw InvalidScheduleError("alpha_bar must be strictly decreasing, fails at t=" + std::to_string(t));
        }
    }
    check_lambda(sched.lambda);
}

Schedule build_linear_beta(int T, double beta_min, double beta_max, double lambda) {
    if (T < 1) throw InvalidScheduleError("linear-beta recipe needs T >= 1");
    if (!(beta_min > 0.0 && beta_max < 1.0 && beta_min <= beta_max)) {
        throw InvalidScheduleError("linear-beta recipe needs 0 < beta_min <= beta_max < 1");
    }
    Schedule s;
    s.T = T;
    s.lambda = lambda;
    s.alpha_bar.resize(T + 1);
    s.alpha_bar[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        const double beta = beta_min + (beta_max - beta_min) * frac;
        prod *= 1.0 - beta;
        s.alpha_bar[t] = prod;
    }
    validate_schedule(s);
    return s;
}

Schedule build_cosine(int T, double lambda) {
    if (T < 1) throw InvalidScheduleError("cosine recipe needs T >= 1");
    // Squared-cosine profile with the usual small offset; per-step factors
    // are clipped away from 0 so alpha_bar[T] stays positive.
    const double s_off = 0.008;
    auto f = [&](double t) {
        const double u = (t / T + s_off) / (1.0 + s_off) * (M_PI / 2.0);
        const double c = std::cos(u);
        return c * c;
    };
    Schedule s;
    s.T = T;
    s.lambda = lambda;
    s.alpha_bar.resize(T + 1);
    s.alpha_bar[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        double ratio = f(static_cast<double>(t)) / f(static_cast<double>(t - 1));
        if (ratio < 0.001) ratio = 0.001;
        prod *= ratio;
        s.alpha_bar[t] = prod;
    }
    validate_schedule(s);
    return s;
}

Schedule build_explicit(std::vector<double> alpha_bar, double lambda) {
    Schedule s;
    s.T = static_cast<int>(alpha_bar.size()) - 1;
    s.alpha_bar = std::move(alpha_bar);
    s.lambda = lambda;
    validate_schedule(s);
    return s;
}

Schedule subsequence(const Schedule& sched, int num_steps) {
    validate_schedule(sched);
    if (num_steps < 1 || num_steps > sched.T) {
        throw InvalidScheduleError("subsequence needs 1 <= num_steps <= T");
    }
    Schedule s;
    s.T = num_steps;
    s.lambda = sched.lambda;
    s.alpha_bar.resize(num_steps + 1);
    s.alpha_bar[0] = 1.0;
    for (int j = 1; j <= num_steps; ++j) {
        // Even spacing that always lands on the noisy end at j = num_steps.
        const int t = static_cast<int>(std::llround(
            static_cast<double>(j) * sched.T / num_steps));
        s.alpha_bar[j] = sched.alpha_bar[t];
    }
    validate_schedule(s);
    return s;
}

StepParams step_params(const Schedule& sched, int t) {
    if (t < 1 || t > sched.T) {
        throw std::out_of_range("step_params: t must lie in [1, T], got " + std::to_string(t));
    }
    StepParams p;
    p.t = t;
    p.a_t = sched.a(t);
    p.a_prev = sched.a(t - 1);
    p.sigma_t = sched.sigma(t);
    p.sigma_prev = sched.sigma(t - 1);
    if (!(p.sigma_t > 0.0)) {
        throw InvalidScheduleError("degenerate schedule: sigma_t = 0 at t=" + std::to_string(t));
    }

    // The argument of the square root is 1 - alpha_bar ratio, nonnegative
    // for any strictly decreasing schedule; rounding can push it a hair
    // below zero, so clamp.
    double arg = 1.0 - (p.a_t * p.a_t * p.sigma_prev * p.sigma_prev) /
                           (p.a_prev * p.a_prev * p.sigma_t * p.sigma_t);
    if (arg < 0.0) arg = 0.0;
    p.omega = sched.lambda * p.sigma_prev * std::sqrt(arg);

    double residual_var = p.sigma_prev * p.sigma_prev - p.omega * p.omega;
    if (residual_var < 0.0) residual_var = 0.0;
    p.coef = std::sqrt(residual_var) - p.sigma_t * p.a_prev / p.a_t;

    p.eta = -p.coef * p.sigma_t;
    p.gamma = -p.coef * p.sigma_prev;
    return p;
}

}  // namespace bridgelab
