#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bridgelab/errors.hpp"
#include "bridgelab/runner.hpp"
#include "testutil.hpp"

using namespace bridgelab;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

// Small but complete experiment: 2-blob swap, short chain, few seeds.
ExperimentConfig small_experiment() {
    return parse_config(json::parse(R"({
        "schedule": {"recipe": "linear_beta", "T": 12, "beta_min": 1e-3,
                     "beta_max": 0.05, "lambda": 1.0},
        "model": {"d": 2, "components": [
            {"weight": 0.5, "mean": [-2.0, 0.0], "stdev": 0.5, "label": 0},
            {"weight": 0.5, "mean": [2.0, 0.0], "stdev": 0.5, "label": 1}
        ]},
        "inversion": {"mode": "random", "w_orig": 1.0, "cond_orig": [0]},
        "edit": {"mode": "explicit", "w_edit": 7.5, "w_hat_orig": 5.0,
                 "cond_edit": [1]},
        "task": {"edit_label": 1, "from_label": 0},
        "seeds": [11, 12, 13]
    })"));
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::vector<double> row_values(const std::string& line) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= line.size()) {
        const std::size_t pos = line.find(',', start);
        const std::string cell =
            line.substr(start, pos == std::string::npos ? pos : pos - start);
        vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return vals;
}

}  // namespace

TEST_CASE("sweep expansion crosses the axes in a fixed order") {
    ExperimentConfig c = small_experiment();
    const Schedule s = make_schedule(c);

    CHECK(expand_sweep(c, s).size() == 1);

    c.sweep.w_edit = {2.5, 5.0};
    c.sweep.K = {1, 3};
    const auto cells = expand_sweep(c, s);
    REQUIRE(cells.size() == 4);
    // w_edit is the outer axis.
    CHECK(cells[0].w_edit == 2.5);
    CHECK(cells[0].K == 1);
    CHECK(cells[1].w_edit == 2.5);
    CHECK(cells[1].K == 3);
    CHECK(cells[3].w_edit == 5.0);
    CHECK(cells[3].cfg.weights.w_edit == 5.0);
    CHECK(cells[3].cfg.K == 3);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].index == static_cast<int>(i));
    }
}

TEST_CASE("rho sweep needs a reward expert and overrides all of them") {
    ExperimentConfig c = small_experiment();
    const Schedule s = make_schedule(c);
    c.sweep.rho = {0.1, 0.2};
    CHECK_THROWS_AS(expand_sweep(c, s), ConfigError);

    StackEntry e;
    e.kind = StackEntry::Kind::reward;
    e.reward.reference = {2.0, 0.0};
    e.reward.rho = 1.0;
    c.edit.stack = {e, e};
    const auto cells = expand_sweep(c, s);
    REQUIRE(cells.size() == 2);
    CHECK(cells[1].cfg.stack[0].reward.rho == 0.2);
    CHECK(cells[1].cfg.stack[1].reward.rho == 0.2);
}

TEST_CASE("recon tether vector is sized to the materialized schedule") {
    ExperimentConfig c = small_experiment();
    c.edit.mode = EngineMode::implicit_update;
    c.edit.improve_recon = true;
    c.recon_lambda_scalar = 0.25;
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].cfg.recon_lambda.size() == static_cast<std::size_t>(s.T + 1));
    CHECK(cells[0].cfg.recon_lambda[3] == 0.25);
}

TEST_CASE("cells with equal seeds edit the same originals") {
    ExperimentConfig c = small_experiment();
    c.sweep.w_edit = {2.5, 10.0};
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    const CellResult a = run_cell(c, cells[0], s);
    const CellResult b = run_cell(c, cells[1], s);
    REQUIRE(a.traces.size() == 3);
    REQUIRE(b.traces.size() == 3);
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        CHECK(norm(sub(a.traces[i].x0_orig, b.traces[i].x0_orig)) == 0.0);
    }
    CHECK(a.report.seeds() == 3);
}

TEST_CASE("trace csv rows preserve the step decomposition") {
    ExperimentConfig c = small_experiment();
    c.edit.skip_initial_steps = 4;  // ragged terms exercise the zero fill
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    const CellResult r = run_cell(c, cells[0], s);
    const std::string csv = trace_csv(r.traces[0]);

    const auto lines = split_lines(csv);
    REQUIRE(lines.size() == static_cast<std::size_t>(s.T) + 2);
    CHECK(lines[0] == "# bridgelab-trace v1");
    CHECK(lines[1].rfind("t,x_t:0,x_t:1,x_base:0,x_base:1,", 0) == 0);
    CHECK(lines[1].find("x_next:0") != std::string::npos);

    // Every row: x_base + sum(term columns) == x_next, after the %.17g
    // round-trip, up to re-parse rounding.
    const std::size_t cols = row_values(lines[1]).size();
    for (std::size_t li = 2; li < lines.size(); ++li) {
        const auto vals = row_values(lines[li]);
        REQUIRE(vals.size() == cols);
        for (int dim = 0; dim < 2; ++dim) {
            double sum = vals[1 + 2 + dim];  // x_base
            for (std::size_t col = 5 + dim; col + 2 < vals.size(); col += 2) {
                sum += vals[col];
            }
            CHECK(sum == doctest::Approx(vals[vals.size() - 2 + dim]).epsilon(1e-12));
        }
    }
}

TEST_CASE("report and seed tables carry version headers and line up") {
    ExperimentConfig c = small_experiment();
    c.sweep.w_edit = {2.5, 7.5};
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    std::vector<CellResult> results;
    for (const auto& cell : cells) results.push_back(run_cell(c, cell, s));

    const auto report_lines = split_lines(report_csv(cells, results));
    REQUIRE(report_lines.size() == 2 + cells.size());
    CHECK(report_lines[0] == "# bridgelab-report v1");
    CHECK(report_lines[1].rfind("cell,w_edit,w_hat_orig,K,rho,seeds,", 0) == 0);
    CHECK(report_lines[2].rfind("0,2.5,5,1,0,3,", 0) == 0);

    const auto seed_lines = split_lines(seeds_csv(c, cells[0], results[0]));
    REQUIRE(seed_lines.size() == 2 + c.seeds.size());
    CHECK(seed_lines[0] == "# bridgelab-seeds v1");
    CHECK(seed_lines[2].rfind("0,11,", 0) == 0);

    // Per-seed faithfulness values feed the report mean.
    const auto row = row_values(report_lines[2]);
    double mean = 0.0;
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        mean += row_values(seed_lines[2 + i])[3];
    }
    mean /= static_cast<double>(c.seeds.size());
    CHECK(mean == doctest::Approx(row[8]).epsilon(1e-12));
}

TEST_CASE("svg emission is deterministic and well formed") {
    ExperimentConfig c = small_experiment();
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    const CellResult r = run_cell(c, cells[0], s);

    const std::string svg1 = cell_svg(c.model, r.traces);
    const std::string svg2 = cell_svg(c.model, r.traces);
    CHECK(svg1 == svg2);
    CHECK(svg1.rfind("<svg ", 0) == 0);
    CHECK(svg1.find("<polyline") != std::string::npos);
    CHECK(svg1.find("</svg>") != std::string::npos);

    const std::string replot = trace_svg_from_csv(trace_csv(r.traces[0]));
    CHECK(replot.find("<polyline") != std::string::npos);

    CHECK_THROWS_AS(trace_svg_from_csv("t,x\n1,2\n"), ValidationError);
    CHECK_THROWS_AS(trace_svg_from_csv("# bridgelab-trace v1\nt,a\n"),
                    ValidationError);
}

TEST_CASE("experiment writes a reproducible artifact tree") {
    ExperimentConfig c = small_experiment();
    c.sweep.w_edit = {5.0, 7.5};
    const fs::path base = fs::temp_directory_path() / "bridgelab_runner_test";
    fs::remove_all(base);

    const RunResult r1 = run_experiment(c, (base / "a").string(), 2);
    const RunResult r2 = run_experiment(c, (base / "b").string(), 1);
    REQUIRE(r1.artifacts == r2.artifacts);
    // 2 cells * (seeds + plot + 3 traces) + report + manifest
    CHECK(r1.artifacts.size() == 2 * 5 + 2);

    for (const auto& rel : r1.artifacts) {
        CHECK(fs::exists(base / "a" / rel));
        // Worker count must not leak into any artifact byte.
        CHECK(slurp(base / "a" / rel) == slurp(base / "b" / rel));
    }

    // The manifest's embedded config reruns the experiment identically.
    const json manifest = json::parse(slurp(base / "a" / "manifest.json"));
    CHECK(manifest["version"] == 1);
    CHECK(manifest["config_hash"] == config_fingerprint(manifest["config"]));
    const ExperimentConfig c2 = parse_config(manifest["config"]);
    run_experiment(c2, (base / "c").string(), 2);
    CHECK(slurp(base / "a" / "report.csv") == slurp(base / "c" / "report.csv"));

    fs::remove_all(base);
}

TEST_CASE("reconstruction-only experiment reports zero drift") {
    ExperimentConfig c = small_experiment();
    c.edit.weights.cond_edit = Condition::of({0});
    c.edit.weights.w_edit = 5.0;  // equal to w_hat_orig: the correction vanishes
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    const CellResult r = run_cell(c, cells[0], s);
    for (double f : r.report.faithfulness) CHECK(f <= 1e-9);
    CHECK(r.report.posterior_mean < 0.5);
}

TEST_CASE("a diverging cell names itself in the error") {
    ExperimentConfig c = small_experiment();
    // Each step multiplies the state by roughly w_edit, so this crosses the
    // double range inside a dozen steps.
    c.edit.weights.w_edit = 1e60;
    const Schedule s = make_schedule(c);
    const auto cells = expand_sweep(c, s);
    CHECK_THROWS_WITH_AS(run_cell(c, cells[0], s), doctest::Contains("cell 0"),
                         NumericalError);
}
