#include "bridgelab/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "bridgelab/discrete.hpp"
#include "bridgelab/engine.hpp"
#include "bridgelab/errors.hpp"
#include "bridgelab/hfunc.hpp"
#include "bridgelab/inversion.hpp"
#include "bridgelab/mixture.hpp"
#include "bridgelab/rng.hpp"
#include "bridgelab/schedule.hpp"

namespace bridgelab {

namespace {

VerifyRow row(std::string name, double max_err, double tolerance) {
    VerifyRow r;
    r.name = std::move(name);
    r.max_err = max_err;
    r.tolerance = tolerance;
    r.pass = max_err <= tolerance;
    return r;
}

MixtureModel random_model(Rng& rng, int d, int n_comps) {
    MixtureModel m;
    m.d = d;
    double total = 0.0;
    for (int k = 0; k < n_comps; ++k) {
        MixtureComponent comp;
        comp.weight = 0.2 + rng.uniform();
        comp.mean = rng.normal_vec(d);
        comp.stdev = 0.3 + 0.7 * rng.uniform();
        comp.label = k % 2;
        total += comp.weight;
        m.components.push_back(std::move(comp));
    }
    for (auto& comp : m.components) comp.weight /= total;
    // Renormalization leaves a last-ulp defect; pin the sum exactly.
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < m.components.size(); ++k) {
        acc += m.components[k].weight;
    }
    m.components.back().weight = 1.0 - acc;
    return m;
}

Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& x) {
    const double h0 = 1e-5;
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = h0 * std::max(1.0, std::abs(x[i]));
        Vec hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

double rel_gap(const Vec& got, const Vec& want) {
    return norm(sub(got, want)) / std::max(1e-6, norm(want));
}

// --- oracle suite ----------------------------------------------------------

std::vector<VerifyRow> oracle_rows() {
    std::vector<VerifyRow> rows;
    Rng rng(101);

    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const int S = 2 + static_cast<int>(rng.raw() % 5);
        const int T = 1 + static_cast<int>(rng.raw() % 8);
        const DiscreteChain chain = random_chain(S, T, rng);
        Dist h0(S);
        for (auto& v : h0) v = 0.1 + rng.uniform();
        worst = std::max(worst, verify_marginal_identity(chain, h0));
    }
    rows.push_back(row("doob/marginal-identity", worst, 1e-12));

    worst = 0.0;
    for (int S = 2; S <= 4; ++S) {
        for (int T = 1; T <= 6; ++T) {
            const DiscreteChain chain = random_chain(S, T, rng);
            Dist h0(S);
            for (auto& v : h0) v = 0.1 + rng.uniform();
            const auto h = h_recursion(chain, h0);
            for (int t = 0; t <= T; ++t) {
                for (int i = 0; i < S; ++i) {
                    worst = std::max(worst,
                                     std::abs(h[t][i] - enumerate_h(chain, h0, t, i)));
                }
            }
        }
    }
    rows.push_back(row("doob/h-recursion-vs-enumeration", worst, 1e-12));

    worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const int S = 2 + static_cast<int>(rng.raw() % 4);
        const int T = 1 + static_cast<int>(rng.raw() % 6);
        const DiscreteChain chain = random_chain(S, T, rng);
        Dist h0(S);
        for (auto& v : h0) v = 0.1 + rng.uniform();
        const auto ph = doob_kernel(chain, h_recursion(chain, h0));
        for (int t = 1; t <= T; ++t) {
            for (int i = 0; i < S; ++i) {
                double sum = 0.0;
                for (int j = 0; j < S; ++j) sum += ph[t][i][j];
                worst = std::max(worst, std::abs(sum - 1.0));
            }
        }
    }
    rows.push_back(row("doob/row-normalization", worst, 1e-12));
    return rows;
}

// --- gradients suite -------------------------------------------------------

std::vector<VerifyRow> gradient_rows() {
    std::vector<VerifyRow> rows;
    Rng rng(202);
    const Schedule sched = build_linear_beta(60, 1e-3, 0.03, 1.0);

    double worst = 0.0;
    for (int probe = 0; probe < 120; ++probe) {
        const MixtureModel m = random_model(rng, 2 + probe % 2, 2 + probe % 3);
        const int t = 1 + static_cast<int>(rng.raw() % sched.T);
        const Vec x = scale(2.0, rng.normal_vec(m.d));
        const Vec got = score(m, x, t, Condition::unconditional(), sched);
        const Vec want = fd_grad(
            [&](const Vec& p) {
                return log_density(m, p, t, Condition::unconditional(), sched);
            },
            x);
        worst = std::max(worst, rel_gap(got, want));
    }
    rows.push_back(row("gradients/mixture-score", worst, 1e-6));

    worst = 0.0;
    int accepted = 0;
    for (int attempt = 0; attempt < 4000 && accepted < 100; ++attempt) {
        const MixtureModel m = random_model(rng, 2, 3);
        // Noisy half of the chain, and away from saturated posteriors,
        // where the log-posterior actually has curvature to difference.
        const int t = sched.T / 2 + static_cast<int>(rng.raw() % (sched.T / 2 + 1));
        const Vec x = scale(1.5, rng.normal_vec(m.d));
        const double post = class_posterior(m, x, t, sched, 0);
        if (post < 0.05 || post > 0.95) continue;
        ++accepted;
        const Vec got = classifier_h_score(m, x, t, 0, sched);
        const Vec want = fd_grad(
            [&](const Vec& p) {
                return std::log(class_posterior(m, p, t, sched, 0));
            },
            x);
        worst = std::max(worst, rel_gap(got, want));
    }
    if (accepted < 100) {
        // Not enough well-conditioned probes is itself a failure.
        worst = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row("gradients/classifier-score", worst, 1e-6));

    worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        ReconSpec spec;
        spec.lambda.assign(sched.T + 1, 0.1 + 0.5 * rng.uniform());
        spec.anchor = rng.normal_vec(3);
        const int t = static_cast<int>(rng.raw() % (sched.T + 1));
        const Vec x = rng.normal_vec(3);
        const Vec got = recon_h_score(spec, x, t);
        const Vec want =
            fd_grad([&](const Vec& p) { return recon_log_h(spec, p, t); }, x);
        worst = std::max(worst, rel_gap(got, want));
    }
    rows.push_back(row("gradients/recon-score", worst, 1e-6));

    worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        const MixtureModel m = random_model(rng, 2, 2);
        RewardSpec spec;
        spec.feature = probe % 2 ? FeatureMap::second_moments : FeatureMap::identity;
        spec.reference = rng.normal_vec(2);
        const int t = 1 + static_cast<int>(rng.raw() % sched.T);
        const Vec x = rng.normal_vec(2);
        const Vec eps_hat = guided_noise(m, x, t, Condition::unconditional(), 1.0, sched);
        const Vec got = reward_pullback(spec, x, t, eps_hat, sched);
        const Vec want = fd_grad(
            [&](const Vec& p) {
                const StepParams sp = step_params(sched, t);
                Vec x0 = sub(p, scale(sp.sigma_t, eps_hat));
                for (auto& v : x0) v /= sp.a_t;
                return reward_value(spec, x0);
            },
            x);
        worst = std::max(worst, rel_gap(got, want));
    }
    rows.push_back(row("gradients/reward-pullback", worst, 1e-6));
    return rows;
}

// --- reconstruction suite ---------------------------------------------------

std::vector<VerifyRow> reconstruction_rows() {
    std::vector<VerifyRow> rows;
    MixtureModel m;
    m.d = 2;
    m.components = {{0.5, {-2.0, 0.0}, 0.5, 0}, {0.5, {2.0, 0.0}, 0.5, 1}};

    double worst = 0.0;
    for (const double lambda : {0.0, 1.0}) {
        const Schedule sched = build_linear_beta(40, 1e-3, 0.05, lambda);
        for (int seed = 0; seed < 8; ++seed) {
            Rng rng(500 + seed);
            const Vec x0 = sample_data(m, rng, Condition::of({0}));
            const InversionRecord rec =
                lambda == 0.0 ? ddim_invert(m, x0, Condition::of({0}), 1.0, sched)
                              : ef_invert(m, x0, Condition::of({0}), 1.0, sched, rng);
            Vec x = rec.x_traj[sched.T];
            for (int t = sched.T; t >= 1; --t) {
                x = add(mean_step(m, x, t, rec.cond_orig, rec.w_orig, sched),
                        rec.u_res[t]);
            }
            worst = std::max(worst, norm(sub(x, x0)));
        }
    }
    rows.push_back(row("reconstruction/residual-replay", worst, 1e-9));

    worst = 0.0;
    for (const double lambda : {0.0, 1.0}) {
        const Schedule sched = build_linear_beta(40, 1e-3, 0.05, lambda);
        for (const auto mode : {EngineMode::explicit_update, EngineMode::implicit_update}) {
            for (int seed = 0; seed < 4; ++seed) {
                Rng rng(700 + seed);
                const Vec x0 = sample_data(m, rng, Condition::of({0}));
                const InversionRecord rec =
                    lambda == 0.0 ? ddim_invert(m, x0, Condition::of({0}), 1.0, sched)
                                  : ef_invert(m, x0, Condition::of({0}), 1.0, sched, rng);
                EditConfig cfg;
                cfg.mode = mode;
                cfg.weights.cond_orig = Condition::of({0});
                cfg.weights.cond_edit = Condition::of({0});
                cfg.weights.w_orig = 1.0;
                cfg.weights.w_edit = 5.0;
                cfg.weights.w_hat_orig = 5.0;
                const EditTrace trace = run_edit(m, rec, cfg, sched);
                worst = std::max(worst, norm(sub(trace.x0_edit(), x0)));
            }
        }
    }
    rows.push_back(row("reconstruction/no-op-edit-collapse", worst, 1e-9));

    // Deterministic round trip x0 -> x_T -> x0 tightens as the grid refines;
    // report the worst shrink ratio between consecutive grids.
    const Schedule base = build_linear_beta(1000, 1e-4, 2e-2, 0.0);
    double worst_ratio = 0.0;
    for (int seed = 0; seed < 3; ++seed) {
        Rng rng(900 + seed);
        const Vec x0 = sample_data(m, rng, Condition::of({0}));
        double prev = -1.0;
        for (const int steps : {10, 50}) {
            const Schedule sched = subsequence(base, steps);
            const InversionRecord rec = ddim_invert(m, x0, Condition::of({0}), 1.0, sched);
            Vec x = rec.x_traj[sched.T];
            for (int t = sched.T; t >= 1; --t) {
                x = mean_step(m, x, t, rec.cond_orig, rec.w_orig, sched);
            }
            const double err = norm(sub(x, x0));
            if (prev > 0.0) worst_ratio = std::max(worst_ratio, err / prev);
            prev = err;
        }
    }
    rows.push_back(row("reconstruction/round-trip-shrink-ratio", worst_ratio, 0.6));
    return rows;
}

}  // namespace

std::vector<VerifyRow> verify_suite(const std::string& suite) {
    if (suite == "oracle") return oracle_rows();
    if (suite == "gradients") return gradient_rows();
    if (suite == "reconstruction") return reconstruction_rows();
    if (suite == "all") {
        auto rows = oracle_rows();
        for (auto& r : gradient_rows()) rows.push_back(std::move(r));
        for (auto& r : reconstruction_rows()) rows.push_back(std::move(r));
        return rows;
    }
    throw ConfigError("unknown verify suite '" + suite +
                      "' (expected oracle, gradients, reconstruction, or all)");
}

bool all_pass(const std::vector<VerifyRow>& rows) {
    for (const auto& r : rows) {
        if (!r.pass) return false;
    }
    return true;
}

std::string verify_table(const std::vector<VerifyRow>& rows) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-42s %12s %12s  %s\n", "check", "max_err",
                  "tolerance", "status");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-42s %12.3e %12.1e  %s\n", r.name.c_str(),
                      r.max_err, r.tolerance, r.pass ? "pass" : "FAIL");
        out += line;
    }
    return out;
}

}  // namespace bridgelab
