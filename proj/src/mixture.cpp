#include "bridgelab/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bridgelab/errors.hpp"

namespace bridgelab {

namespace {

constexpr double kWeightTol = 1e-12;

// Indices of the components selected by cond (all of them when
// unconditional).
std::vector<std::size_t> selected(const MixtureModel& model, const Condition& cond) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < model.components.size(); ++k) {
        const auto& comp = model.components[k];
        if (cond.is_unconditional() ||
            std::find(cond.labels.begin(), cond.labels.end(), comp.label) != cond.labels.end()) {
            idx.push_back(k);
        }
    }
    return idx;
}

struct LogResp {
    std::vector<std::size_t> idx;   // which components
    std::vector<double> log_resp;   // normalized log responsibilities
    std::vector<Vec> means;         // time-t means a_t mu_k
    std::vector<double> vars;       // time-t variances
    double log_norm = 0.0;          // log of the (conditioned) density at x
};

double log_gauss_iso(const Vec& x, const Vec& mean, double var, int d) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
        const double r = x[i] - mean[i];
        q += r * r;
    }
    return -0.5 * d * std::log(2.0 * M_PI * var) - 0.5 * q / var;
}

// Responsibilities of the selected components at (x, t), in log space with
// the usual max subtraction so tails far from every component stay finite.
LogResp responsibilities(const MixtureModel& model, const Vec& x, int t,
                         const Condition& cond, const Schedule& sched) {
    if (static_cast<int>(x.size()) != model.d) {
        throw ValidationError("responsibilities: point has wrong dimension");
    }
    validate_condition(model, cond);
    const double a = sched.a(t);
    const double sig = sched.sigma(t);

    LogResp out;
    out.idx = selected(model, cond);
    double wsum = 0.0;
    for (std::size_t k : out.idx) wsum += model.components[k].weight;

    std::vector<double> logs;
    for (std::size_t k : out.idx) {
        const auto& comp = model.components[k];
        const double var = a * a * comp.stdev * comp.stdev + sig * sig;
        if (!(var > 0.0)) {
            throw ValidationError(
                "density is singular: zero-stdev component at t=" + std::to_string(t));
        }
        Vec mean = scale(a, comp.mean);
        logs.push_back(std::log(comp.weight / wsum) + log_gauss_iso(x, mean, var, model.d));
        out.means.push_back(std::move(mean));
        out.vars.push_back(var);
    }

    const double m = *std::max_element(logs.begin(), logs.end());
    double total = 0.0;
    for (double l : logs) total += std::exp(l - m);
    const double log_total = m + std::log(total);
    out.log_resp.resize(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) out.log_resp[i] = logs[i] - log_total;
    out.log_norm = log_total;
    return out;
}

}  // namespace

Condition Condition::of(std::vector<int> labels) {
    if (labels.empty()) {
        throw InvalidConditionError("conditional label set must be nonempty");
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    Condition c;
    c.labels = std::move(labels);
    return c;
}

void validate_model(const MixtureModel& model) {
    if (model.d < 1) throw ValidationError("mixture needs d >= 1");
    if (model.components.empty()) throw ValidationError("mixture needs at least one component");
    double total = 0.0;
    for (const auto& comp : model.components) {
        if (!(comp.weight > 0.0)) throw ValidationError("component weights must be positive");
        if (static_cast<int>(comp.mean.size()) != model.d) {
            throw ValidationError("component mean has wrong dimension");
        }
        if (comp.stdev < 0.0) throw ValidationError("component stdev must be nonnegative");
        total += comp.weight;
    }
    if (std::abs(total - 1.0) > kWeightTol) {
        throw ValidationError("component weights must sum to 1, got " + std::to_string(total));
    }
}

void validate_condition(const MixtureModel& model, const Condition& cond) {
    if (cond.is_unconditional()) return;
    for (int label : cond.labels) {
        bool found = false;
        for (const auto& comp : model.components) {
            if (comp.label == label) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw InvalidConditionError("condition references unknown label " + std::to_string(label));
        }
    }
}

std::vector<TimeMarginal> marginal_params(const MixtureModel& model, int t,
                                          const Schedule& sched) {
    validate_model(model);
    const double a = sched.a(t);
    const double sig = sched.sigma(t);
    std::vector<TimeMarginal> out;
    out.reserve(model.components.size());
    for (const auto& comp : model.components) {
        TimeMarginal tm;
        tm.weight = comp.weight;
        tm.mean = scale(a, comp.mean);
        tm.var = a * a * comp.stdev * comp.stdev + sig * sig;
        tm.label = comp.label;
        out.push_back(std::move(tm));
    }
    return out;
}

double log_density(const MixtureModel& model, const Vec& x, int t,
                   const Condition& cond, const Schedule& sched) {
    return responsibilities(model, x, t, cond, sched).log_norm;
}

Vec score(const MixtureModel& model, const Vec& x, int t, const Condition& cond,
          const Schedule& sched) {
    const LogResp r = responsibilities(model, x, t, cond, sched);
    Vec s = zeros(x.size());
    for (std::size_t i = 0; i < r.idx.size(); ++i) {
        const double resp = std::exp(r.log_resp[i]);
        // Per-component score of an isotropic Gaussian: (mean - x) / var.
        axpy(resp / r.vars[i], sub(r.means[i], x), s);
    }
    return s;
}

Mat score_jacobian(const MixtureModel& model, const Vec& x, int t,
                   const Condition& cond, const Schedule& sched) {
    const LogResp r = responsibilities(model, x, t, cond, sched);
    const std::size_t d = x.size();
    Mat H(d);
    Vec s = zeros(d);
    std::vector<Vec> gs;
    std::vector<double> resps;
    for (std::size_t i = 0; i < r.idx.size(); ++i) {
        const double resp = std::exp(r.log_resp[i]);
        Vec g = scale(1.0 / r.vars[i], sub(r.means[i], x));
        axpy(resp, g, s);
        gs.push_back(std::move(g));
        resps.push_back(resp);
    }
    // H = sum_k r_k (g_k g_k^T - I / v_k) - s s^T.
    for (std::size_t i = 0; i < gs.size(); ++i) {
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q < d; ++q) {
                H.at(p, q) += resps[i] * gs[i][p] * gs[i][q];
            }
            H.at(p, p) -= resps[i] / r.vars[i];
        }
    }
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < d; ++q) {
            H.at(p, q) -= s[p] * s[q];
        }
    }
    return H;
}

Vec noise_pred(const MixtureModel& model, const Vec& x, int t,
               const Condition& cond, const Schedule& sched) {
    const double sig = sched.sigma(t);
    if (sig == 0.0) {
        // No noise at this level, so the exact noise estimate vanishes.
        // Skipping the score call keeps point-mass components legal here.
        return zeros(x.size());
    }
    return scale(-sig, score(model, x, t, cond, sched));
}

Vec guided_noise(const MixtureModel& model, const Vec& x, int t,
                 const Condition& cond, double w, const Schedule& sched) {
    Vec eps_u = noise_pred(model, x, t, Condition::unconditional(), sched);
    if (cond.is_unconditional()) return eps_u;
    Vec eps_c = noise_pred(model, x, t, cond, sched);
    Vec out = scale(w, eps_c);
    axpy(1.0 - w, eps_u, out);
    return out;
}

std::map<int, double> class_posterior(const MixtureModel& model, const Vec& x,
                                      int t, const Schedule& sched) {
    const LogResp r = responsibilities(model, x, t, Condition::unconditional(), sched);
    std::map<int, double> post;
    for (std::size_t i = 0; i < r.idx.size(); ++i) {
        post[model.components[r.idx[i]].label] += std::exp(r.log_resp[i]);
    }
    return post;
}

double class_posterior(const MixtureModel& model, const Vec& x, int t,
                       const Schedule& sched, int label) {
    validate_condition(model, Condition::of({label}));
    const auto post = class_posterior(model, x, t, sched);
    const auto it = post.find(label);
    return it == post.end() ? 0.0 : it->second;
}

Vec x0_posterior_mean(const MixtureModel& model, const Vec& x, int t,
                      const Condition& cond, const Schedule& sched) {
    const LogResp r = responsibilities(model, x, t, cond, sched);
    const double a = sched.a(t);
    Vec out = zeros(x.size());
    for (std::size_t i = 0; i < r.idx.size(); ++i) {
        const auto& comp = model.components[r.idx[i]];
        const double resp = std::exp(r.log_resp[i]);
        // Conjugate posterior mean of x_0 under component k:
        //   mu_k + (a s_k^2 / (a^2 s_k^2 + sigma^2)) (x - a mu_k).
        const double gain = a * comp.stdev * comp.stdev / r.vars[i];
        Vec b = comp.mean;
        axpy(gain, sub(x, r.means[i]), b);
        axpy(resp, b, out);
    }
    return out;
}

Vec sample_data(const MixtureModel& model, Rng& rng, const Condition& cond) {
    validate_model(model);
    validate_condition(model, cond);
    const auto idx = selected(model, cond);
    std::vector<double> weights;
    weights.reserve(idx.size());
    for (std::size_t k : idx) weights.push_back(model.components[k].weight);
    const auto& comp = model.components[idx[rng.categorical(weights)]];
    Vec x = comp.mean;
    if (comp.stdev > 0.0) axpy(comp.stdev, rng.normal_vec(x.size()), x);
    return x;
}

Vec forward_sample(const Vec& x0, int t, const Schedule& sched, Rng& rng) {
    const double a = sched.a(t);
    const double sig = sched.sigma(t);
    Vec x = scale(a, x0);
    if (sig > 0.0) axpy(sig, rng.normal_vec(x.size()), x);
    return x;
}

}  // namespace bridgelab
