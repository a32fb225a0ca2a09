#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bridgelab/engine.hpp"
#include "bridgelab/errors.hpp"
#include "bridgelab/metrics.hpp"
#include "testutil.hpp"

using namespace bridgelab;

namespace {

// Minimal trace carrying just the endpoints; enough for evaluate().
EditTrace endpoints_only(Vec x0, Vec x_edit) {
    EditTrace t;
    t.x0_orig = std::move(x0);
    TraceStep s;
    s.t = 1;
    s.x_next = std::move(x_edit);
    t.steps.push_back(std::move(s));
    return t;
}

MixtureModel separated_pair(double separation) {
    MixtureModel m;
    m.d = 2;
    m.components = {{0.5, {-separation / 2.0, 0.0}, 0.5, 0},
                    {0.5, {separation / 2.0, 0.0}, 0.5, 1}};
    return m;
}

}  // namespace

TEST_CASE("projector drops the direction and keeps its complement") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec v = rng.normal_vec(5);
        const Vec x = rng.normal_vec(5);
        const Vec px = project_off(x, v);
        // Idempotent and orthogonal to v.
        CHECK(norm(sub(project_off(px, v), px)) <= 1e-12 * std::max(1.0, norm(x)));
        CHECK(std::abs(dot(px, v)) <= 1e-12 * norm(x) * norm(v));
    }
    // The direction itself projects to exactly zero (coefficient is vv/vv = 1).
    const Vec v = {0.3, -1.7, 2.2};
    for (double c : project_off(v, v)) CHECK(c == 0.0);
    // A vector built orthogonal to v passes through untouched: the two
    // products in the dot cancel exactly.
    const Vec w = {2.5, 0.7};
    const Vec perp = {-0.7, 2.5};
    const Vec kept = project_off(perp, w);
    CHECK(kept[0] == perp[0]);
    CHECK(kept[1] == perp[1]);
}

TEST_CASE("class mean averages the label's components") {
    const auto two = testutil::two_blob_model();
    const Vec m0 = class_mean(two, 0);
    CHECK(m0[0] == -2.0);
    CHECK(m0[1] == 0.0);

    const auto three = testutil::three_blob_model();
    const Vec m1 = class_mean(three, 1);
    CHECK(m1[0] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(m1[1] == doctest::Approx(0.5).epsilon(1e-15));

    const EditTask task = make_swap_task(two, 0, 1);
    CHECK(task.edit_label == 1);
    CHECK(task.edit_direction[0] == 4.0);
    CHECK(task.edit_direction[1] == 0.0);
}

TEST_CASE("hand-built traces give hand-computed aggregates") {
    const auto m = separated_pair(4.0);
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    EditTask task = make_swap_task(m, 0, 1);

    // Displacements with dyadic coordinates so the orthogonal norms are
    // exact: (0.5, -0.75) leaves 0.75 after dropping the x-axis, (1.25, 0.5)
    // leaves 0.5.
    const std::vector<EditTrace> traces = {
        endpoints_only({0.0, 0.0}, {0.5, -0.75}),
        endpoints_only({1.0, 1.0}, {2.25, 1.5}),
    };
    const EditReport r = evaluate(m, traces, task, s);

    REQUIRE(r.seeds() == 2);
    CHECK(r.faithfulness[0] == 0.75);
    CHECK(r.faithfulness[1] == 0.5);
    CHECK(r.faithfulness_mean == 0.625);
    CHECK(r.faithfulness_std == std::sqrt(0.03125));

    // Aggregates are pure functions of the arrays.
    CHECK(r.posterior_mean == mean_of(r.target_posterior));
    CHECK(r.posterior_std == sample_stddev(r.target_posterior));
    CHECK(r.faithfulness_mean == mean_of(r.faithfulness));
    CHECK(r.reward_mean == mean_of(r.reward_value));
    CHECK(r.reward_std == sample_stddev(r.reward_value));
}

TEST_CASE("identical endpoints score zero faithfulness") {
    const auto m = separated_pair(4.0);
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    const Vec p = {0.25, -1.5};
    const EditReport r = evaluate(m, {endpoints_only(p, p)}, make_swap_task(m, 0, 1), s);
    CHECK(r.faithfulness[0] == 0.0);
    CHECK(r.faithfulness_mean == 0.0);
    CHECK(r.faithfulness_std == 0.0);
}

TEST_CASE("posterior at the target mean approaches one with separation") {
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    double prev = 0.0;
    for (double sep : {2.0, 4.0, 8.0}) {
        const auto m = separated_pair(sep);
        const EditTask task = make_swap_task(m, 0, 1);
        const Vec target = class_mean(m, 1);
        const EditReport r =
            evaluate(m, {endpoints_only(scale(-1.0, target), target)}, task, s);
        CHECK(r.target_posterior[0] > prev);
        prev = r.target_posterior[0];
    }
    CHECK(prev > 0.999);
}

TEST_CASE("reward column tracks the task's reward spec") {
    const auto m = separated_pair(4.0);
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    EditTask task = make_swap_task(m, 0, 1);
    RewardSpec spec;
    spec.reference = {2.0, 0.0};
    task.reward = spec;
    const Vec x_edit = {1.0, -0.5};
    const EditReport r = evaluate(m, {endpoints_only({0.0, 0.0}, x_edit)}, task, s);
    CHECK(r.reward_value[0] == reward_value(spec, x_edit));
    CHECK(r.reward_value[0] < 0.0);

    // Without a reward spec the column pads with zeros.
    task.reward.reset();
    const EditReport r2 = evaluate(m, {endpoints_only({0.0, 0.0}, x_edit)}, task, s);
    CHECK(r2.reward_value[0] == 0.0);
}

TEST_CASE("a faithful reconstruction run reports near-zero drift") {
    const auto m = testutil::two_blob_model();
    const Schedule s = build_linear_beta(25, 1e-3, 0.05, 1.0);
    EditConfig cfg;
    cfg.weights.cond_orig = Condition::of({0});
    cfg.weights.cond_edit = Condition::of({0});
    cfg.weights.w_orig = 1.0;
    cfg.weights.w_edit = 5.0;
    cfg.weights.w_hat_orig = 5.0;

    std::vector<EditTrace> traces;
    for (int seed = 0; seed < 4; ++seed) {
        Rng rng(300 + seed);
        const Vec x0 = sample_data(m, rng, Condition::of({0}));
        const auto rec = ef_invert(m, x0, Condition::of({0}), 1.0, s, rng);
        traces.push_back(run_edit(m, rec, cfg, s));
    }
    const EditReport r = evaluate(m, traces, make_swap_task(m, 0, 1), s);
    CHECK(r.faithfulness_mean <= 1e-9);
    // Reconstructed class-0 samples should still look like class 0.
    CHECK(r.posterior_mean < 0.5);
}

TEST_CASE("evaluate rejects malformed tasks") {
    const auto m = separated_pair(4.0);
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    const auto trace = endpoints_only({0.0, 0.0}, {1.0, 0.0});

    EditTask no_direction;
    no_direction.edit_label = 1;
    no_direction.edit_direction = {};
    CHECK_THROWS_AS(evaluate(m, {trace}, no_direction, s), ConfigError);

    EditTask zero_direction = make_swap_task(m, 0, 1);
    zero_direction.edit_direction = {0.0, 0.0};
    CHECK_THROWS_AS(evaluate(m, {trace}, zero_direction, s), ConfigError);

    EditTask bad_reward = make_swap_task(m, 0, 1);
    RewardSpec spec;
    spec.reference = {1.0};
    bad_reward.reward = spec;
    CHECK_THROWS_AS(evaluate(m, {trace}, bad_reward, s), ConfigError);

    CHECK_THROWS_AS(evaluate(m, {}, make_swap_task(m, 0, 1), s), ConfigError);
}

TEST_CASE("csv fragment lines up with its column list") {
    const auto m = separated_pair(4.0);
    const Schedule s = build_linear_beta(10, 1e-3, 0.05, 1.0);
    const EditReport r =
        evaluate(m, {endpoints_only({0.0, 0.0}, {0.5, -0.75})}, make_swap_task(m, 0, 1), s);
    const std::string cols = report_csv_columns();
    const std::string vals = report_csv_values(r);
    const auto commas = [](const std::string& str) {
        std::size_t n = 0;
        for (char c : str) n += (c == ',');
        return n;
    };
    CHECK(commas(cols) == commas(vals));
    CHECK(vals.substr(0, 2) == "1,");
}
