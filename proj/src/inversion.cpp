#include "bridgelab/inversion.hpp"

#include <fstream>
#include <sstream>

#include "bridgelab/errors.hpp"
#include "bridgelab/format.hpp"

namespace bridgelab {

Vec mean_step(const MixtureModel& model, const Vec& x_t, int t,
              const Condition& cond, double w, const Schedule& sched) {
    const StepParams p = step_params(sched, t);
    Vec mu = scale(p.a_prev / p.a_t, x_t);
    axpy(p.coef, guided_noise(model, x_t, t, cond, w, sched), mu);
    return mu;
}

namespace {

void fill_residuals(const MixtureModel& model, InversionRecord& rec,
                    const Schedule& sched) {
    rec.u_res.assign(rec.x_traj.size(), zeros(rec.x_traj[0].size()));
    for (int t = 1; t <= rec.T(); ++t) {
        rec.u_res[t] = sub(rec.x_traj[t - 1],
                           mean_step(model, rec.x_traj[t], t, rec.cond_orig,
                                     rec.w_orig, sched));
    }
}

void check_inputs(const MixtureModel& model, const Vec& x0, const Condition& cond) {
    validate_model(model);
    validate_condition(model, cond);
    if (static_cast<int>(x0.size()) != model.d) {
        throw ValidationError("inversion: data point has wrong dimension");
    }
}

}  // namespace

InversionRecord ddim_invert(const MixtureModel& model, const Vec& x0,
                            const Condition& cond, double w, const Schedule& sched) {
    check_inputs(model, x0, cond);
    validate_schedule(sched);
    if (sched.lambda != 0.0) {
        throw ModeMismatchError("deterministic inversion requires lambda = 0");
    }
    InversionRecord rec;
    rec.mode = InversionMode::deterministic;
    rec.cond_orig = cond;
    rec.w_orig = w;
    rec.lambda = sched.lambda;
    rec.x_traj.resize(sched.T + 1);
    rec.x_traj[0] = x0;
    for (int t = 1; t <= sched.T; ++t) {
        const StepParams p = step_params(sched, t);
        // Forward use of the backward-mean identity, with the noise estimate
        // taken at the known level t-1.
        Vec x = scale(p.a_t / p.a_prev, rec.x_traj[t - 1]);
        axpy(p.sigma_t - p.sigma_prev * p.a_t / p.a_prev,
             guided_noise(model, rec.x_traj[t - 1], t - 1, cond, w, sched), x);
        if (!all_finite(x)) {
            throw NumericalError("deterministic inversion diverged at t=" + std::to_string(t));
        }
        rec.x_traj[t] = std::move(x);
    }
    fill_residuals(model, rec, sched);
    return rec;
}

InversionRecord ef_invert(const MixtureModel& model, const Vec& x0,
                          const Condition& cond, double w, const Schedule& sched,
                          Rng& rng) {
    check_inputs(model, x0, cond);
    validate_schedule(sched);
    InversionRecord rec;
    rec.mode = InversionMode::random;
    rec.cond_orig = cond;
    rec.w_orig = w;
    rec.lambda = sched.lambda;
    rec.x_traj.resize(sched.T + 1);
    rec.x_traj[0] = x0;
    // Independent forward draws per level, deliberately not a single
    // consistent diffusion path: this makes the residuals high-variance,
    // which is what lets the replay imprint the original sample.
    for (int t = 1; t <= sched.T; ++t) {
        rec.x_traj[t] = forward_sample(x0, t, sched, rng);
    }
    fill_residuals(model, rec, sched);
    return rec;
}

void dump_record(const InversionRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open record file for writing: " + path);
    const int T = record.T();
    const int d = static_cast<int>(record.x0().size());
    out << "# bridgelab-record v1\n";
    out << "T=" << T << " d=" << d
        << " mode=" << (record.mode == InversionMode::deterministic ? "deterministic" : "random")
        << " w_orig=" << fmt_double(record.w_orig)
        << " lambda=" << fmt_double(record.lambda) << " cond=";
    if (record.cond_orig.is_unconditional()) {
        out << "uncond";
    } else {
        for (std::size_t i = 0; i < record.cond_orig.labels.size(); ++i) {
            if (i) out << "|";
            out << record.cond_orig.labels[i];
        }
    }
    out << "\n";
    for (int t = 0; t <= T; ++t) {
        out << t;
        for (int i = 0; i < d; ++i) out << "," << fmt_double(record.x_traj[t][i]);
        for (int i = 0; i < d; ++i) out << "," << fmt_double(record.u_res[t][i]);
        out << "\n";
    }
}

InversionRecord load_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open record file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "# bridgelab-record v1") {
        throw ValidationError("record file has unknown header: " + path);
    }
    if (!std::getline(in, line)) throw ValidationError("record file truncated: " + path);

    InversionRecord rec;
    int T = -1, d = -1;
    {
        std::istringstream meta(line);
        std::string tok;
        while (meta >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw ValidationError("bad record metadata: " + tok);
            const std::string key = tok.substr(0, eq);
            const std::string val = tok.substr(eq + 1);
            if (key == "T") T = std::stoi(val);
            else if (key == "d") d = std::stoi(val);
            else if (key == "mode") {
                if (val == "deterministic") rec.mode = InversionMode::deterministic;
                else if (val == "random") rec.mode = InversionMode::random;
                else throw ValidationError("bad record mode: " + val);
            } else if (key == "w_orig") rec.w_orig = std::stod(val);
            else if (key == "lambda") rec.lambda = std::stod(val);
            else if (key == "cond") {
                if (val != "uncond") {
                    std::vector<int> labels;
                    std::istringstream ls(val);
                    std::string piece;
                    while (std::getline(ls, piece, '|')) labels.push_back(std::stoi(piece));
                    rec.cond_orig = Condition::of(labels);
                }
            } else {
                throw ValidationError("bad record metadata key: " + key);
            }
        }
    }
    if (T < 1 || d < 1) throw ValidationError("record metadata missing T or d");

    rec.x_traj.assign(T + 1, zeros(d));
    rec.u_res.assign(T + 1, zeros(d));
    for (int t = 0; t <= T; ++t) {
        if (!std::getline(in, line)) throw ValidationError("record file truncated: " + path);
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',') || std::stoi(cell) != t) {
            throw ValidationError("record rows out of order");
        }
        for (int i = 0; i < d; ++i) {
            if (!std::getline(row, cell, ',')) throw ValidationError("record row too short");
            rec.x_traj[t][i] = std::stod(cell);
        }
        for (int i = 0; i < d; ++i) {
            if (!std::getline(row, cell, ',')) throw ValidationError("record row too short");
            rec.u_res[t][i] = std::stod(cell);
        }
    }
    return rec;
}

}  // namespace bridgelab
