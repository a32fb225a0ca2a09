#include "bridgelab/hfunc.hpp"

#include <algorithm>
#include <cmath>

#include "bridgelab/errors.hpp"

namespace bridgelab {

std::optional<std::string> weight_guideline_warning(const EditWeights& w) {
    if (!(w.w_orig > 0.0) || !(w.w_orig <= w.w_hat_orig) || !(w.w_hat_orig < w.w_edit)) {
        return "guidance weights outside the 0 < w_orig <= w_hat_orig < w_edit guideline";
    }
    return std::nullopt;
}

Vec edit_direction_f(const MixtureModel& model, const Vec& x, int t,
                     const EditWeights& w, const Schedule& sched) {
    Vec f = scale(w.w_edit, noise_pred(model, x, t, w.cond_edit, sched));
    axpy(-w.w_hat_orig, noise_pred(model, x, t, w.cond_orig, sched), f);
    axpy(w.w_hat_orig - w.w_edit,
         noise_pred(model, x, t, Condition::unconditional(), sched), f);
    return f;
}

Vec classifier_h_score(const MixtureModel& model, const Vec& x, int t, int label,
                       const Schedule& sched) {
    const Condition cond = Condition::of({label});
    validate_condition(model, cond);
    Vec s = score(model, x, t, cond, sched);
    axpy(-1.0, score(model, x, t, Condition::unconditional(), sched), s);
    return s;
}

namespace {

Vec feature(const FeatureMap map, const Vec& x) {
    switch (map) {
        case FeatureMap::identity:
            return x;
        case FeatureMap::second_moments: {
            Vec g(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] * x[i];
            return g;
        }
    }
    throw ConfigError("unknown feature map");
}

void check_reference(const RewardSpec& spec, const Vec& x0) {
    if (spec.reference.size() != x0.size()) {
        throw ConfigError("reward reference has wrong dimension");
    }
}

}  // namespace

double reward_value(const RewardSpec& spec, const Vec& x0) {
    check_reference(spec, x0);
    const Vec diff = sub(feature(spec.feature, x0), feature(spec.feature, spec.reference));
    return -dot(diff, diff);
}

Vec reward_grad_x0(const RewardSpec& spec, const Vec& x0) {
    check_reference(spec, x0);
    const Vec diff = sub(feature(spec.feature, x0), feature(spec.feature, spec.reference));
    switch (spec.feature) {
        case FeatureMap::identity:
            return scale(-2.0, diff);
        case FeatureMap::second_moments: {
            // d/dx_i of -(x_i^2 - ref_i^2)^2 is -4 x_i (x_i^2 - ref_i^2).
            Vec g(x0.size());
            for (std::size_t i = 0; i < x0.size(); ++i) g[i] = -4.0 * x0[i] * diff[i];
            return g;
        }
    }
    throw ConfigError("unknown feature map");
}

Vec reward_pullback(const RewardSpec& spec, const Vec& x, int t, const Vec& eps_hat,
                    const Schedule& sched) {
    const double a = sched.a(t);
    const double sig = sched.sigma(t);
    Vec x0 = sub(x, scale(sig, eps_hat));
    x0 = scale(1.0 / a, x0);
    // With eps_hat frozen, x -> x0 is x/a plus a constant, so the chain
    // rule is a bare 1/a factor.
    return scale(1.0 / a, reward_grad_x0(spec, x0));
}

Vec reward_full_gradient(const MixtureModel& model, const RewardSpec& spec,
                         const Vec& x, int t, const Condition& cond, double w,
                         const Schedule& sched) {
    const double a = sched.a(t);
    const double sig = sched.sigma(t);
    const Vec eps = guided_noise(model, x, t, cond, w, sched);
    Vec x0 = sub(x, scale(sig, eps));
    x0 = scale(1.0 / a, x0);
    const Vec gr = reward_grad_x0(spec, x0);

    // Jacobian of x0(x) = (x - sigma * eps(x)) / a where eps = -sigma *
    // (w * score_c + (1 - w) * score_u):
    //   J = (I + sigma^2 (w H_c + (1 - w) H_u)) / a,
    // symmetric, so J^T g = J g.
    Mat H = score_jacobian(model, x, t, Condition::unconditional(), sched);
    if (!cond.is_unconditional()) {
        const Mat Hc = score_jacobian(model, x, t, cond, sched);
        for (std::size_t i = 0; i < H.m.size(); ++i) {
            H.m[i] = w * Hc.m[i] + (1.0 - w) * H.m[i];
        }
    }
    Vec out = matvec(H, gr);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (gr[i] + sig * sig * out[i]) / a;
    }
    return out;
}

double rho_factor(const RewardSpec& spec, int t, const Schedule& sched) {
    switch (spec.rho_schedule) {
        case RhoSchedule::constant:
            return spec.rho;
        case RhoSchedule::sqrt_alpha_bar:
            return spec.rho * std::sqrt(sched.alpha_bar.at(t));
        case RhoSchedule::norm_matched:
            throw ConfigError("norm-matched rho has no scalar factor; use norm_match");
    }
    throw ConfigError("unknown rho schedule");
}

Vec norm_match(const Vec& g, const Vec& reference, double rho) {
    const double gn = norm(g);
    if (gn == 0.0) return zeros(g.size());
    return scale(rho * norm(reference) / gn, g);
}

Vec reward_h_score(const MixtureModel& model, const RewardSpec& spec, const Vec& x,
                   int t, const Condition& cond, double w, const Schedule& sched,
                   const Vec* norm_reference) {
    const Vec g = spec.full_gradient
                      ? reward_full_gradient(model, spec, x, t, cond, w, sched)
                      : reward_pullback(spec, x, t, guided_noise(model, x, t, cond, w, sched),
                                        sched);
    if (spec.rho_schedule == RhoSchedule::norm_matched) {
        if (norm_reference == nullptr) {
            throw ConfigError("norm-matched rho schedule needs a reference vector");
        }
        return norm_match(g, *norm_reference, spec.rho);
    }
    return scale(rho_factor(spec, t, sched), g);
}

double recon_log_h(const ReconSpec& spec, const Vec& x, int t) {
    const Vec diff = sub(x, spec.anchor);
    return -spec.lambda.at(t) * dot(diff, diff);
}

Vec recon_h_score(const ReconSpec& spec, const Vec& x, int t) {
    return scale(-2.0 * spec.lambda.at(t), sub(x, spec.anchor));
}

double ClassifierExpert::log_h(const Vec& x, int t) const {
    return std::log(class_posterior(model_, x, t, sched_, label_));
}

Vec ClassifierExpert::score(const Vec& x, int t) const {
    return classifier_h_score(model_, x, t, label_, sched_);
}

double RewardExpert::log_h(const Vec& x, int t) const {
    const double a = sched_.a(t);
    const double sig = sched_.sigma(t);
    const Vec eps = guided_noise(model_, x, t, cond_, w_, sched_);
    Vec x0 = sub(x, scale(sig, eps));
    x0 = scale(1.0 / a, x0);
    return reward_value(spec_, x0);
}

Vec RewardExpert::score(const Vec& x, int t) const {
    if (spec_.full_gradient) {
        return reward_full_gradient(model_, spec_, x, t, cond_, w_, sched_);
    }
    return reward_pullback(spec_, x, t, guided_noise(model_, x, t, cond_, w_, sched_),
                           sched_);
}

Vec product_score(const std::vector<const HExpert*>& stack, const Vec& x, int t) {
    std::vector<Vec> scores;
    scores.reserve(stack.size());
    for (const HExpert* e : stack) scores.push_back(e->score(x, t));
    Vec out = zeros(x.size());
    std::vector<double> column(stack.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t e = 0; e < scores.size(); ++e) column[e] = scores[e][i];
        // Value-sorted accumulation makes the sum independent of stack
        // order, so reordering experts cannot change the result by an ulp.
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (double v : column) s += v;
        out[i] = s;
    }
    return out;
}

double product_log_h(const std::vector<const HExpert*>& stack, const Vec& x, int t) {
    std::vector<double> vals;
    vals.reserve(stack.size());
    for (const HExpert* e : stack) vals.push_back(e->log_h(x, t));
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (double v : vals) s += v;
    return s;
}

}  // namespace bridgelab
