#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bridgelab/errors.hpp"
#include "bridgelab/hfunc.hpp"
#include "testutil.hpp"

using namespace bridgelab;
using testutil::finite_diff_grad;
using testutil::rel_err;

namespace {

Schedule test_schedule() { return build_linear_beta(16, 1e-3, 0.08, 0.0); }

}  // namespace

TEST_CASE("edit direction is the documented three-term combination") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    const EditWeights w{Condition::of({0}), Condition::of({1}), 1.0, 7.5, 5.0};
    Rng rng(37);
    for (int rep = 0; rep < 20; ++rep) {
        const Vec x = {4.0 * (rng.uniform() - 0.5), 4.0 * (rng.uniform() - 0.5)};
        const int t = 1 + static_cast<int>(rng.raw() % s.T);
        const Vec f = edit_direction_f(m, x, t, w, s);

        const Vec e_edit = noise_pred(m, x, t, w.cond_edit, s);
        const Vec e_orig = noise_pred(m, x, t, w.cond_orig, s);
        const Vec e_unc = noise_pred(m, x, t, Condition::unconditional(), s);
        for (int i = 0; i < 2; ++i) {
            const double want =
                w.w_edit * e_edit[i] - w.w_hat_orig * e_orig[i] +
                (w.w_hat_orig - w.w_edit) * e_unc[i];
            CHECK(f[i] == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("edit direction vanishes exactly when nothing is edited") {
    const auto m = testutil::two_blob_model();
    const Schedule s = test_schedule();
    const EditWeights w{Condition::of({1}), Condition::of({1}), 1.0, 5.0, 5.0};
    const Vec f = edit_direction_f(m, {0.3, -0.8}, 3, w, s);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
}

// With an unconditional original, the three terms collapse to
// w_edit * (eps(cond) - eps(unc)), which is -sigma_t w_edit times the
// classifier h-score. Two ops, one identity.
TEST_CASE("edit direction reduces to classifier guidance against unconditional") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    const EditWeights w{Condition::unconditional(), Condition::of({1}), 1.0, 7.5, 3.0};
    Rng rng(73);
    for (int rep = 0; rep < 10; ++rep) {
        const Vec x = {3.0 * (rng.uniform() - 0.5), 3.0 * (rng.uniform() - 0.5)};
        const int t = 1 + static_cast<int>(rng.raw() % s.T);
        const Vec f = edit_direction_f(m, x, t, w, s);
        const Vec cls = classifier_h_score(m, x, t, 1, s);
        for (int i = 0; i < 2; ++i) {
            CHECK(f[i] == doctest::Approx(-s.sigma(t) * w.w_edit * cls[i]).epsilon(1e-11));
        }
    }
}

TEST_CASE("classifier h-score matches finite differences of the log posterior") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    Rng rng(1001);
    int probes = 0;
    for (int rep = 0; rep < 2000 && probes < 30; ++rep) {
        // Bias toward the noisy end where the classes overlap; the early
        // levels are nearly separable and rarely yield usable probes.
        const int t = s.T / 2 + static_cast<int>(rng.raw() % (s.T / 2 + 1));
        const int label = static_cast<int>(rng.raw() % 2);
        const Vec x0 = sample_data(m, rng, Condition::unconditional());
        const Vec x = forward_sample(x0, t, s, rng);
        // Keep probes where the posterior is not saturated. Where it sits
        // at 1 - 1e-12 the log is flat to rounding, the true gradient is
        // near zero, and central differences measure noise rather than the
        // gradient; such points cannot validate anything.
        const double p = class_posterior(m, x, t, s, label);
        if (p < 0.05 || p > 0.95) continue;
        const Vec got = classifier_h_score(m, x, t, label, s);
        const Vec want = finite_diff_grad(
            [&](const Vec& q) { return std::log(class_posterior(m, q, t, s, label)); }, x);
        CHECK(rel_err(got, want) <= 1e-6);
        ++probes;
    }
    CHECK(probes == 30);
    CHECK_THROWS_AS(classifier_h_score(m, {0.0, 0.0}, 1, 9, s), InvalidConditionError);
}

TEST_CASE("reconstruction expert has the exact linear score") {
    ReconSpec spec;
    spec.lambda = {0.0, 0.4, 0.9};
    spec.anchor = {1.0, -2.0};
    const Vec x = {0.25, 0.5};
    for (int t = 0; t <= 2; ++t) {
        const Vec sc = recon_h_score(spec, x, t);
        for (int i = 0; i < 2; ++i) {
            CHECK(sc[i] == -2.0 * spec.lambda[t] * (x[i] - spec.anchor[i]));
        }
        const Vec fd = finite_diff_grad(
            [&](const Vec& p) { return recon_log_h(spec, p, t); }, x);
        CHECK(rel_err(sc, fd) <= 1e-6);
    }
}

TEST_CASE("reward pullback matches finite differences with frozen noise") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    Rng rng(55);
    for (const auto fmap : {FeatureMap::identity, FeatureMap::second_moments}) {
        RewardSpec spec;
        spec.feature = fmap;
        spec.reference = {1.2, -0.4};
        for (int rep = 0; rep < 15; ++rep) {
            const int t = 1 + static_cast<int>(rng.raw() % s.T);
            const Vec x = forward_sample(sample_data(m, rng, Condition::unconditional()), t, s, rng);
            // Freeze the noise estimate at the probe point; the pullback
            // must be the gradient of the frozen map.
            const Vec eps_hat = guided_noise(m, x, t, Condition::of({1}), 7.5, s);
            const Vec got = reward_pullback(spec, x, t, eps_hat, s);
            const Vec want = finite_diff_grad(
                [&](const Vec& p) {
                    Vec x0 = sub(p, scale(s.sigma(t), eps_hat));
                    x0 = scale(1.0 / s.a(t), x0);
                    return reward_value(spec, x0);
                },
                x);
            CHECK(rel_err(got, want) <= 1e-6);
        }
    }
}

TEST_CASE("full reward gradient differs from the frozen one and matches its own map") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    RewardSpec spec;
    spec.reference = {2.0, -0.5};
    const Condition cond = Condition::of({1});
    const double w = 3.0;
    Rng rng(616);
    double max_gap = 0.0;
    for (int rep = 0; rep < 15; ++rep) {
        const int t = 2 + static_cast<int>(rng.raw() % (s.T - 1));
        const Vec x = forward_sample(sample_data(m, rng, Condition::unconditional()), t, s, rng);
        const Vec full = reward_full_gradient(m, spec, x, t, cond, w, s);
        const Vec want = finite_diff_grad(
            [&](const Vec& p) {
                const Vec eps = guided_noise(m, p, t, cond, w, s);
                Vec x0 = sub(p, scale(s.sigma(t), eps));
                x0 = scale(1.0 / s.a(t), x0);
                return reward_value(spec, x0);
            },
            x);
        CHECK(rel_err(full, want) <= 1e-6);

        const Vec frozen =
            reward_pullback(spec, x, t, guided_noise(m, x, t, cond, w, s), s);
        max_gap = std::max(max_gap, norm(sub(full, frozen)) / std::max(1.0, norm(full)));
    }
    // On a mixture the denoiser is genuinely curved, so the two gradients
    // cannot agree everywhere.
    CHECK(max_gap > 1e-3);
}

TEST_CASE("rho factors follow their schedules") {
    const Schedule s = test_schedule();
    RewardSpec spec;
    spec.reference = {0.0, 0.0};
    spec.rho = 2.5;

    spec.rho_schedule = RhoSchedule::constant;
    CHECK(rho_factor(spec, 7, s) == 2.5);

    spec.rho_schedule = RhoSchedule::sqrt_alpha_bar;
    CHECK(rho_factor(spec, 7, s) == doctest::Approx(2.5 * std::sqrt(s.alpha_bar[7])).epsilon(1e-15));
    CHECK(rho_factor(spec, 0, s) == doctest::Approx(2.5).epsilon(1e-15));

    spec.rho_schedule = RhoSchedule::norm_matched;
    CHECK_THROWS_AS(rho_factor(spec, 7, s), ConfigError);
}

TEST_CASE("norm matching rescales without turning") {
    const Vec g = {3.0, -4.0};
    const Vec ref = {1.0, 1.0};
    const Vec out = norm_match(g, ref, 2.0);
    CHECK(norm(out) == doctest::Approx(2.0 * norm(ref)).epsilon(1e-12));
    // Same direction: cross product vanishes and the sign is preserved.
    CHECK(out[0] * g[1] == doctest::Approx(out[1] * g[0]).epsilon(1e-12));
    CHECK(out[0] * g[0] + out[1] * g[1] > 0.0);

    const Vec zero = norm_match({0.0, 0.0}, ref, 2.0);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
}

TEST_CASE("complete reward h-score composes pullback and rho") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();
    RewardSpec spec;
    spec.reference = {1.0, 1.0};
    spec.rho = 0.7;
    spec.rho_schedule = RhoSchedule::sqrt_alpha_bar;
    const Condition cond = Condition::of({1});
    const Vec x = {0.4, 0.6};
    const int t = 5;

    const Vec got = reward_h_score(m, spec, x, t, cond, 7.5, s);
    const Vec raw = reward_pullback(spec, x, t, guided_noise(m, x, t, cond, 7.5, s), s);
    const Vec want = scale(rho_factor(spec, t, s), raw);
    for (int i = 0; i < 2; ++i) CHECK(got[i] == want[i]);

    spec.rho_schedule = RhoSchedule::norm_matched;
    CHECK_THROWS_AS(reward_h_score(m, spec, x, t, cond, 7.5, s), ConfigError);
    const Vec ref = {0.5, 0.5};
    const Vec matched = reward_h_score(m, spec, x, t, cond, 7.5, s, &ref);
    CHECK(norm(matched) == doctest::Approx(spec.rho * norm(ref)).epsilon(1e-12));
}

TEST_CASE("product of experts adds scores, independent of stack order") {
    const auto m = testutil::three_blob_model();
    const Schedule s = test_schedule();

    ReconSpec r1{std::vector<double>(s.T + 1, 0.3), {1.0, 0.0}};
    ReconSpec r2{std::vector<double>(s.T + 1, 0.3), {-0.5, 2.0}};
    ReconExpert e1(r1), e2(r2);
    ClassifierExpert e3(m, s, 1);
    RewardExpert e4(m, s, RewardSpec{FeatureMap::identity, {2.0, 0.0}, 1.0,
                                     RhoSchedule::constant, false},
                    Condition::of({1}), 7.5);

    const Vec x = {0.7, -0.2};
    const int t = 4;

    SUBCASE("permutations are bit-identical") {
        const Vec base = product_score({&e1, &e2, &e3, &e4}, x, t);
        for (const auto& perm : std::vector<std::vector<const HExpert*>>{
                 {&e4, &e3, &e2, &e1}, {&e2, &e4, &e1, &e3}, {&e3, &e1, &e4, &e2}}) {
            const Vec p = product_score(perm, x, t);
            for (int i = 0; i < 2; ++i) CHECK(p[i] == base[i]);
        }
    }

    SUBCASE("doubling an expert doubles its contribution") {
        const Vec once = product_score({&e3}, x, t);
        const Vec twice = product_score({&e3, &e3}, x, t);
        for (int i = 0; i < 2; ++i) CHECK(twice[i] == 2.0 * once[i]);
    }

    SUBCASE("two tethers merge into one closed form") {
        // Sum of -2 lambda (x - a_1) and -2 lambda (x - a_2) is
        // -2 lambda (2x - a_1 - a_2).
        const Vec got = product_score({&e1, &e2}, x, t);
        for (int i = 0; i < 2; ++i) {
            const double want = -2.0 * 0.3 * (2.0 * x[i] - r1.anchor[i] - r2.anchor[i]);
            CHECK(got[i] == doctest::Approx(want).epsilon(1e-12));
        }
    }

    SUBCASE("log h adds too") {
        const double both = product_log_h({&e1, &e2}, x, t);
        const double sep = recon_log_h(r1, x, t) + recon_log_h(r2, x, t);
        CHECK(both == doctest::Approx(sep).epsilon(1e-14));
    }
}

TEST_CASE("weight guideline flags inverted weights only") {
    CHECK(!weight_guideline_warning({Condition::of({0}), Condition::of({1}), 1.0, 7.5, 5.0}));
    CHECK(!weight_guideline_warning({Condition::of({0}), Condition::of({1}), 1.0, 10.0, 9.0}));
    CHECK(weight_guideline_warning({Condition::of({0}), Condition::of({1}), 1.0, 5.0, 7.5}));
    CHECK(weight_guideline_warning({Condition::of({0}), Condition::of({1}), 0.0, 7.5, 5.0}));
    CHECK(weight_guideline_warning({Condition::of({0}), Condition::of({1}), 6.0, 7.5, 5.0}));
}
