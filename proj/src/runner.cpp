#include "bridgelab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "bridgelab/errors.hpp"
#include "bridgelab/format.hpp"
#include "bridgelab/rng.hpp"

namespace bridgelab {

namespace fs = std::filesystem;

namespace {

template <typename T>
std::vector<T> axis_or(const std::vector<T>& axis, T base) {
    if (axis.empty()) return {base};
    return axis;
}

bool has_reward_expert(const EditConfig& cfg) {
    for (const auto& e : cfg.stack) {
        if (e.kind == StackEntry::Kind::reward) return true;
    }
    return false;
}

double base_rho(const EditConfig& cfg) {
    for (const auto& e : cfg.stack) {
        if (e.kind == StackEntry::Kind::reward) return e.reward.rho;
    }
    return 0.0;
}

}  // namespace

std::vector<SweepCell> expand_sweep(const ExperimentConfig& c, const Schedule& sched) {
    if (!c.sweep.rho.empty() && !has_reward_expert(c.edit)) {
        throw ConfigError("sweep.rho: no reward expert to apply the grid to");
    }
    const auto w_edits = axis_or(c.sweep.w_edit, c.edit.weights.w_edit);
    const auto w_hats = axis_or(c.sweep.w_hat_orig, c.edit.weights.w_hat_orig);
    const auto ks = axis_or(c.sweep.K, c.edit.K);
    const auto rhos = axis_or(c.sweep.rho, base_rho(c.edit));

    std::vector<SweepCell> cells;
    for (double we : w_edits) {
        for (double wh : w_hats) {
            for (int k : ks) {
                for (double rho : rhos) {
                    SweepCell cell;
                    cell.index = static_cast<int>(cells.size());
                    cell.w_edit = we;
                    cell.w_hat_orig = wh;
                    cell.K = k;
                    cell.rho = rho;
                    cell.cfg = c.edit;
                    cell.cfg.weights.w_edit = we;
                    cell.cfg.weights.w_hat_orig = wh;
                    cell.cfg.K = k;
                    if (!c.sweep.rho.empty()) {
                        for (auto& e : cell.cfg.stack) {
                            if (e.kind == StackEntry::Kind::reward) e.reward.rho = rho;
                        }
                    }
                    if (cell.cfg.improve_recon) {
                        cell.cfg.recon_lambda.assign(sched.T + 1, c.recon_lambda_scalar);
                    }
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

CellResult run_cell(const ExperimentConfig& c, const SweepCell& cell,
                    const Schedule& sched) {
    CellResult out;
    for (std::uint64_t seed : c.seeds) {
        try {
            Rng rng(seed);
            const Vec x0 = sample_data(c.model, rng, c.edit.weights.cond_orig);
            const InversionRecord rec =
                c.inversion == InversionMode::deterministic
                    ? ddim_invert(c.model, x0, c.edit.weights.cond_orig,
                                  c.edit.weights.w_orig, sched)
                    : ef_invert(c.model, x0, c.edit.weights.cond_orig,
                                c.edit.weights.w_orig, sched, rng);
            EditConfig cfg = cell.cfg;
            cfg.seed = seed;
            out.traces.push_back(run_edit(c.model, rec, cfg, sched));
        } catch (const NumericalError& e) {
            throw NumericalError("cell " + std::to_string(cell.index) + " seed " +
                                 std::to_string(seed) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ConfigError("cell " + std::to_string(cell.index) + " seed " +
                              std::to_string(seed) + ": " + e.what());
        }
    }
    for (const auto& w : out.traces.front().warnings) out.warnings.push_back(w);
    out.report = evaluate(c.model, out.traces, make_task(c), sched);
    return out;
}

std::string trace_csv(const EditTrace& trace) {
    const std::size_t d = trace.x0_orig.size();
    // Column order: fixed prefix, then term names by first appearance over
    // the whole trace (skipped steps have none), fixed suffix.
    std::vector<std::string> term_names;
    for (const auto& step : trace.steps) {
        for (const auto& [name, term] : step.terms) {
            if (std::find(term_names.begin(), term_names.end(), name) ==
                term_names.end()) {
                term_names.push_back(name);
            }
        }
    }

    std::string out = "# bridgelab-trace v1\n";
    const auto emit_cols = [&](const std::string& base) {
        for (std::size_t i = 0; i < d; ++i) {
            out += ',';
            out += base + ':' + std::to_string(i);
        }
    };
    out += 't';
    emit_cols("x_t");
    emit_cols("x_base");
    for (const auto& name : term_names) emit_cols(name);
    emit_cols("x_next");
    out += '\n';

    for (const auto& step : trace.steps) {
        out += std::to_string(step.t);
        const auto emit_vec = [&](const Vec& v) {
            for (double x : v) {
                out += ',';
                out += fmt_double(x);
            }
        };
        emit_vec(step.x_t);
        emit_vec(step.x_base);
        for (const auto& name : term_names) {
            const Vec* found = nullptr;
            for (const auto& [n, term] : step.terms) {
                if (n == name) {
                    found = &term;
                    break;
                }
            }
            // A column absent from this step (replay steps, mostly)
            // contributes nothing; zero keeps the row sum exact.
            if (found) {
                emit_vec(*found);
            } else {
                emit_vec(zeros(d));
            }
        }
        emit_vec(step.x_next);
        out += '\n';
    }
    return out;
}

std::string report_csv(const std::vector<SweepCell>& cells,
                       const std::vector<CellResult>& results) {
    std::string out = "# bridgelab-report v1\n";
    out += "cell,w_edit,w_hat_orig,K,rho," + report_csv_columns() + '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out += std::to_string(cells[i].index);
        out += ',';
        out += fmt_double(cells[i].w_edit);
        out += ',';
        out += fmt_double(cells[i].w_hat_orig);
        out += ',';
        out += std::to_string(cells[i].K);
        out += ',';
        out += fmt_double(cells[i].rho);
        out += ',';
        out += report_csv_values(results[i].report);
        out += '\n';
    }
    return out;
}

std::string seeds_csv(const ExperimentConfig& c, const SweepCell& cell,
                      const CellResult& result) {
    std::string out = "# bridgelab-seeds v1\n";
    out += "cell,seed,target_posterior,faithfulness,reward_value\n";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        out += std::to_string(cell.index);
        out += ',';
        out += std::to_string(c.seeds[i]);
        out += ',';
        out += fmt_double(result.report.target_posterior[i]);
        out += ',';
        out += fmt_double(result.report.faithfulness[i]);
        out += ',';
        out += fmt_double(result.report.reward_value[i]);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG emission. Everything funnels through one coordinate mapper so plots
// from different runs of the same data are byte-identical.

namespace {

constexpr double kSvgW = 640.0;
constexpr double kSvgH = 480.0;

const char* label_color(int label) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const int n = static_cast<int>(sizeof(palette) / sizeof(palette[0]));
    int i = label % n;
    if (i < 0) i += n;
    return palette[i];
}

struct SvgFrame {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0, s = 1.0;

    static SvgFrame fit(const std::vector<std::pair<double, double>>& pts) {
        SvgFrame f;
        if (pts.empty()) return f;
        f.xmin = f.xmax = pts[0].first;
        f.ymin = f.ymax = pts[0].second;
        for (const auto& [x, y] : pts) {
            f.xmin = std::min(f.xmin, x);
            f.xmax = std::max(f.xmax, x);
            f.ymin = std::min(f.ymin, y);
            f.ymax = std::max(f.ymax, y);
        }
        const double rx = std::max(f.xmax - f.xmin, 1e-9);
        const double ry = std::max(f.ymax - f.ymin, 1e-9);
        // Uniform scale with a margin so geometry is not distorted.
        f.s = std::min((kSvgW * 0.9) / rx, (kSvgH * 0.9) / ry);
        return f;
    }

    double px(double x) const {
        return kSvgW / 2.0 + (x - (xmin + xmax) / 2.0) * s;
    }
    double py(double y) const {
        return kSvgH / 2.0 - (y - (ymin + ymax) / 2.0) * s;
    }
};

std::pair<double, double> plane_point(const Vec& v) {
    const double x = v.empty() ? 0.0 : v[0];
    const double y = v.size() > 1 ? v[1] : 0.0;
    return {x, y};
}

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n"
           "<rect width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
}

void svg_circle(std::string& out, const SvgFrame& f, double x, double y, double r,
                const std::string& style) {
    out += "<circle cx=\"" + fmt_double(f.px(x)) + "\" cy=\"" + fmt_double(f.py(y)) +
           "\" r=\"" + fmt_double(r) + "\" " + style + "/>\n";
}

void svg_polyline(std::string& out, const SvgFrame& f,
                  const std::vector<std::pair<double, double>>& pts,
                  const std::string& style) {
    out += "<polyline points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) out += ' ';
        out += fmt_double(f.px(pts[i].first)) + ',' + fmt_double(f.py(pts[i].second));
    }
    out += "\" " + style + "/>\n";
}

std::vector<std::pair<double, double>> trajectory_points(const EditTrace& trace) {
    std::vector<std::pair<double, double>> pts;
    if (trace.steps.empty()) return pts;
    pts.push_back(plane_point(trace.steps.front().x_t));
    for (const auto& step : trace.steps) pts.push_back(plane_point(step.x_next));
    return pts;
}

}  // namespace

std::string cell_svg(const MixtureModel& model, const std::vector<EditTrace>& traces) {
    // A fresh model-distributed cloud for context, drawn under everything.
    struct CloudPoint {
        double x, y;
        int label;
    };
    std::vector<CloudPoint> cloud;
    Rng rng(9001);
    for (const auto& comp : model.components) {
        const int n = std::max(1, static_cast<int>(std::lround(180.0 * comp.weight)));
        for (int i = 0; i < n; ++i) {
            Vec p = comp.mean;
            for (auto& coord : p) coord += comp.stdev * rng.normal();
            const auto [x, y] = plane_point(p);
            cloud.push_back({x, y, comp.label});
        }
    }

    std::vector<std::pair<double, double>> extent;
    for (const auto& cp : cloud) extent.emplace_back(cp.x, cp.y);
    for (const auto& trace : traces) {
        for (const auto& p : trajectory_points(trace)) extent.push_back(p);
        extent.push_back(plane_point(trace.x0_orig));
    }
    const SvgFrame f = SvgFrame::fit(extent);

    std::string out = svg_open();
    for (const auto& cp : cloud) {
        svg_circle(out, f, cp.x, cp.y, 2.0,
                   "fill=\"" + std::string(label_color(cp.label)) +
                       "\" fill-opacity=\"0.35\"");
    }
    const std::size_t shown = std::min<std::size_t>(traces.size(), 3);
    for (std::size_t i = 0; i < shown; ++i) {
        svg_polyline(out, f, trajectory_points(traces[i]),
                     "fill=\"none\" stroke=\"#999999\" stroke-width=\"1\" "
                     "stroke-opacity=\"0.7\"");
    }
    for (const auto& trace : traces) {
        const auto [ox, oy] = plane_point(trace.x0_orig);
        svg_circle(out, f, ox, oy, 4.0,
                   "fill=\"none\" stroke=\"#444444\" stroke-width=\"1.5\"");
        const auto [ex, ey] = plane_point(trace.x0_edit());
        svg_circle(out, f, ex, ey, 3.5, "fill=\"#000000\"");
    }
    out += "</svg>\n";
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::string trace_svg_from_csv(const std::string& csv_text) {
    const auto lines = split(csv_text, '\n');
    if (lines.size() < 3 || lines[0].rfind("# bridgelab-trace", 0) != 0) {
        throw ValidationError("input is not a bridgelab trace CSV");
    }
    const auto header = split(lines[1], ',');
    int ix0 = -1, ix1 = -1, in0 = -1, in1 = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "x_t:0") ix0 = static_cast<int>(i);
        if (header[i] == "x_t:1") ix1 = static_cast<int>(i);
        if (header[i] == "x_next:0") in0 = static_cast<int>(i);
        if (header[i] == "x_next:1") in1 = static_cast<int>(i);
    }
    if (ix0 < 0 || in0 < 0) {
        throw ValidationError("trace CSV header lacks x_t/x_next columns");
    }

    std::vector<std::pair<double, double>> pts;
    std::pair<double, double> endpoint{0.0, 0.0};
    for (std::size_t li = 2; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto cells = split(lines[li], ',');
        if (static_cast<int>(cells.size()) <= std::max(ix1, std::max(in0, in1))) {
            throw ValidationError("trace CSV row " + std::to_string(li + 1) +
                                  " is too short");
        }
        const double x = std::strtod(cells[ix0].c_str(), nullptr);
        const double y = ix1 >= 0 ? std::strtod(cells[ix1].c_str(), nullptr) : 0.0;
        pts.emplace_back(x, y);
        endpoint = {std::strtod(cells[in0].c_str(), nullptr),
                    in1 >= 0 ? std::strtod(cells[in1].c_str(), nullptr) : 0.0};
    }
    if (pts.empty()) {
        throw ValidationError("trace CSV has no data rows");
    }
    pts.push_back(endpoint);

    const SvgFrame f = SvgFrame::fit(pts);
    std::string out = svg_open();
    svg_polyline(out, f, pts,
                 "fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"");
    svg_circle(out, f, pts.front().first, pts.front().second, 4.0,
               "fill=\"none\" stroke=\"#444444\" stroke-width=\"1.5\"");
    svg_circle(out, f, pts.back().first, pts.back().second, 3.5, "fill=\"#000000\"");
    out += "</svg>\n";
    return out;
}

namespace {

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw ValidationError("cannot write artifact '" + path.string() + "'");
    }
    file << content;
    if (!file) {
        throw ValidationError("short write on artifact '" + path.string() + "'");
    }
}

std::string cell_dirname(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "cell%03d", index);
    return std::string(buf);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir,
                         int workers) {
    const Schedule sched = make_schedule(c);
    const auto cells = expand_sweep(c, sched);

    std::vector<CellResult> results(cells.size());
    std::vector<std::exception_ptr> failures(cells.size());
    std::atomic<std::size_t> next{0};

    std::size_t pool = workers > 0 ? static_cast<std::size_t>(workers)
                                   : std::thread::hardware_concurrency();
    pool = std::max<std::size_t>(1, std::min(pool, cells.size()));

    const auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                results[i] = run_cell(c, cells[i], sched);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < pool; ++i) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    // First failing cell wins, independent of thread timing.
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    const fs::path root(out_dir);
    RunResult run;
    const auto emit = [&](const fs::path& rel, const std::string& content) {
        fs::create_directories((root / rel).parent_path());
        write_text(root / rel, content);
        run.artifacts.push_back(rel.generic_string());
    };

    emit("report.csv", report_csv(cells, results));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const fs::path dir = fs::path("cells") / cell_dirname(cells[i].index);
        emit(dir / "seeds.csv", seeds_csv(c, cells[i], results[i]));
        emit(dir / "plot.svg", cell_svg(c.model, results[i].traces));
        for (std::size_t s = 0; s < c.seeds.size(); ++s) {
            emit(dir / ("trace_seed" + std::to_string(c.seeds[s]) + ".csv"),
                 trace_csv(results[i].traces[s]));
        }
        for (const auto& w : results[i].warnings) {
            if (std::find(run.warnings.begin(), run.warnings.end(), w) ==
                run.warnings.end()) {
                run.warnings.push_back(w);
            }
        }
    }

    const nlohmann::json config_json = to_json(c);
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["config_hash"] = config_fingerprint(config_json);
    manifest["config"] = config_json;
    std::vector<std::string> sorted = run.artifacts;
    std::sort(sorted.begin(), sorted.end());
    manifest["artifacts"] = sorted;
    emit("manifest.json", manifest.dump(2) + "\n");

    std::sort(run.artifacts.begin(), run.artifacts.end());
    return run;
}

}  // namespace bridgelab
