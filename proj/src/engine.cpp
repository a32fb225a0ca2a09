#include "bridgelab/engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bridgelab/errors.hpp"

namespace bridgelab {

namespace {

// eta and gamma are definitionally -coef * sigma at the two levels. A
// violation cannot come from data, only from a broken StepParams, so it is
// a logic error rather than a numerical one.
void check_step_coefficients(const StepParams& p) {
    if (std::abs(p.coef * p.sigma_t + p.eta) > 1e-12 * std::max(1.0, std::abs(p.eta))) {
        throw std::logic_error("step coefficients out of sync: eta != -coef * sigma_t");
    }
    if (std::abs(p.coef * p.sigma_prev + p.gamma) >
        1e-12 * std::max(1.0, std::abs(p.gamma))) {
        throw std::logic_error("step coefficients out of sync: gamma != -coef * sigma_prev");
    }
}

// Accumulates edit terms on top of x_base while keeping the running sum
// reconstructible from the term list alone: delta is only ever updated by
// adding one logged term, so replaying add() over the log is bit-identical.
struct TermAccumulator {
    Vec delta;
    std::vector<std::pair<std::string, Vec>>* terms;

    TermAccumulator(std::size_t d, std::vector<std::pair<std::string, Vec>>* out)
        : delta(zeros(d)), terms(out) {}

    void push(std::string name, Vec term) {
        delta = add(delta, term);
        terms->emplace_back(std::move(name), std::move(term));
    }

    Vec state(const Vec& x_base) const { return add(x_base, delta); }
};

void add_stack_terms(const MixtureModel& model, const EditConfig& cfg,
                     const Vec& x_eval, int level, const Vec& eps_hat, const Vec& f_ref,
                     double classifier_step, const Schedule& sched,
                     TermAccumulator& acc, const std::string& suffix) {
    for (std::size_t i = 0; i < cfg.stack.size(); ++i) {
        const StackEntry& entry = cfg.stack[i];
        if (entry.kind == StackEntry::Kind::reward) {
            Vec g = entry.reward.full_gradient
                        ? reward_full_gradient(
                              model, entry.reward, x_eval, level,
                              cfg.text_edit ? cfg.weights.cond_edit : cfg.weights.cond_orig,
                              cfg.text_edit ? cfg.weights.w_edit : cfg.weights.w_orig, sched)
                        : reward_pullback(entry.reward, x_eval, level, eps_hat, sched);
            Vec term = entry.reward.rho_schedule == RhoSchedule::norm_matched
                           ? norm_match(g, f_ref, entry.reward.rho)
                           : scale(rho_factor(entry.reward, level, sched), g);
            acc.push("reward" + std::to_string(i) + suffix, std::move(term));
        } else {
            Vec s = classifier_h_score(model, x_eval, level, entry.classifier_label, sched);
            acc.push("classifier" + std::to_string(i) + suffix,
                     scale(entry.classifier_scale * classifier_step, s));
        }
    }
}

}  // namespace

Vec base_step(const MixtureModel& model, const InversionRecord& record,
              const Vec& x_t_edit, int t, const Condition& cond_orig, double w_orig,
              const Schedule& sched) {
    return add(mean_step(model, x_t_edit, t, cond_orig, w_orig, sched), record.u_res.at(t));
}

StepResult explicit_step(const MixtureModel& model, const InversionRecord& record,
                         const Vec& x_t_edit, int t, const EditConfig& cfg,
                         const Schedule& sched) {
    const StepParams p = step_params(sched, t);
    check_step_coefficients(p);

    StepResult r;
    r.x_base = base_step(model, record, x_t_edit, t, cfg.weights.cond_orig,
                         cfg.weights.w_orig, sched);
    TermAccumulator acc(x_t_edit.size(), &r.terms);

    Vec f = zeros(x_t_edit.size());
    Vec eps_hat;
    if (cfg.text_edit) {
        f = edit_direction_f(model, x_t_edit, t, cfg.weights, sched);
        acc.push("text", scale(p.coef, f));
        eps_hat = guided_noise(model, x_t_edit, t, cfg.weights.cond_edit,
                               cfg.weights.w_edit, sched);
    } else {
        eps_hat = guided_noise(model, x_t_edit, t, cfg.weights.cond_orig,
                               cfg.weights.w_orig, sched);
    }
    // Extra experts see the pre-step state and level t; classifier entries
    // take the exact step size eta for a level-t score.
    add_stack_terms(model, cfg, x_t_edit, t, eps_hat, f, p.eta, sched, acc, "");

    r.x_next = acc.state(r.x_base);
    return r;
}

StepResult implicit_step(const MixtureModel& model, const InversionRecord& record,
                         const Vec& x_t_edit, int t, const EditConfig& cfg,
                         const Schedule& sched) {
    const StepParams p = step_params(sched, t);
    check_step_coefficients(p);
    const int level = t - 1;

    StepResult r;
    r.x_base = base_step(model, record, x_t_edit, t, cfg.weights.cond_orig,
                         cfg.weights.w_orig, sched);
    TermAccumulator acc(x_t_edit.size(), &r.terms);

    for (int k = 0; k < cfg.K; ++k) {
        const std::string suffix = "/k" + std::to_string(k);
        if (cfg.improve_recon) {
            const double lam = cfg.recon_lambda.at(level);
            if (lam != 0.0) {
                // Shrink the iterate toward its replay point before editing:
                // x <- x - lambda (x - x_base), and x - x_base is delta.
                acc.push("recon" + suffix, scale(-lam, acc.delta));
            }
        }
        const Vec xk = acc.state(r.x_base);
        Vec f = zeros(x_t_edit.size());
        Vec eps_hat;
        if (cfg.text_edit) {
            f = edit_direction_f(model, xk, level, cfg.weights, sched);
            acc.push("text" + suffix, scale(p.coef, f));
            eps_hat = guided_noise(model, xk, level, cfg.weights.cond_edit,
                                   cfg.weights.w_edit, sched);
        } else {
            eps_hat = guided_noise(model, xk, level, cfg.weights.cond_orig,
                                   cfg.weights.w_orig, sched);
        }
        // Rewards and classifiers see the post-edit point at level t-1.
        // The noise estimate stays frozen at xk, matching the stop-gradient
        // reading of the update; gamma is the exact level-(t-1) step size.
        const Vec xhat = acc.state(r.x_base);
        add_stack_terms(model, cfg, xhat, level, eps_hat, f, p.gamma, sched, acc, suffix);
    }

    r.x_next = acc.state(r.x_base);
    return r;
}

StepResult ef_combined_step(const MixtureModel& model, const InversionRecord& record,
                            const Vec& x_t_edit, int t, const EditConfig& cfg,
                            const Schedule& sched) {
    const StepParams p = step_params(sched, t);
    check_step_coefficients(p);

    StepResult r;
    // The baseline swaps the condition inside the single backward mean
    // instead of adding a correction term, so here x_base already carries
    // the edit condition.
    const Condition& cond = cfg.text_edit ? cfg.weights.cond_edit : cfg.weights.cond_orig;
    const double w = cfg.text_edit ? cfg.weights.w_edit : cfg.weights.w_orig;
    r.x_base = add(mean_step(model, x_t_edit, t, cond, w, sched), record.u_res.at(t));
    TermAccumulator acc(x_t_edit.size(), &r.terms);

    const Vec eps_hat = guided_noise(model, x_t_edit, t, cond, w, sched);
    // Norm-matched rewards scale against the conditional-minus-unconditional
    // noise gap at the current point.
    Vec f_ref = zeros(x_t_edit.size());
    if (cfg.text_edit) {
        f_ref = sub(noise_pred(model, x_t_edit, t, cfg.weights.cond_edit, sched),
                    noise_pred(model, x_t_edit, t, Condition::unconditional(), sched));
    }
    add_stack_terms(model, cfg, x_t_edit, t, eps_hat, f_ref, p.eta, sched, acc, "");

    r.x_next = acc.state(r.x_base);
    return r;
}

std::vector<std::string> validate_edit_config(const MixtureModel& model,
                                              const InversionRecord& record,
                                              const EditConfig& cfg,
                                              const Schedule& sched) {
    validate_model(model);
    validate_schedule(sched);
    if (record.T() != sched.T) {
        throw ConfigError("record and schedule disagree on T");
    }
    if (record.lambda != sched.lambda) {
        throw ModeMismatchError(
            "record was inverted under a different lambda; residuals are not transferable");
    }
    if (!(record.cond_orig == cfg.weights.cond_orig) ||
        record.w_orig != cfg.weights.w_orig) {
        throw ConfigError(
            "edit config original condition/weight must match the inversion record");
    }
    validate_condition(model, cfg.weights.cond_edit);
    if (cfg.K < 1) throw ConfigError("edit config needs K >= 1");
    if (cfg.skip_initial_steps < 0 || cfg.skip_initial_steps > sched.T) {
        throw ConfigError("skip_initial_steps must lie in [0, T]");
    }
    if (cfg.improve_recon) {
        if (cfg.mode != EngineMode::implicit_update) {
            throw ConfigError("improve_recon is part of the implicit refinement loop only");
        }
        if (static_cast<int>(cfg.recon_lambda.size()) != sched.T + 1) {
            throw ConfigError("recon_lambda must have T + 1 entries");
        }
        for (double lam : cfg.recon_lambda) {
            if (!(lam >= 0.0) || lam > 1.0) {
                throw ConfigError("recon_lambda entries must lie in [0, 1]");
            }
        }
    }
    for (const auto& entry : cfg.stack) {
        if (entry.kind == StackEntry::Kind::reward) {
            if (static_cast<int>(entry.reward.reference.size()) != model.d) {
                throw ConfigError("reward reference has wrong dimension");
            }
            if (entry.reward.rho_schedule == RhoSchedule::norm_matched && !cfg.text_edit) {
                throw ConfigError("norm-matched rho needs the text-edit reference");
            }
        } else {
            validate_condition(model, Condition::of({entry.classifier_label}));
        }
    }

    std::vector<std::string> warnings;
    if (cfg.text_edit) {
        if (const auto warn = weight_guideline_warning(cfg.weights)) {
            warnings.push_back(*warn);
        }
    }
    return warnings;
}

namespace {

EditTrace run_loop(const MixtureModel& model, const InversionRecord& record,
                   const EditConfig& cfg, const Schedule& sched, bool ef_baseline) {
    EditTrace trace;
    trace.warnings = validate_edit_config(model, record, cfg, sched);
    trace.x0_orig = record.x0();

    Vec x = record.x_traj.back();
    for (int t = sched.T; t >= 1; --t) {
        TraceStep step;
        step.t = t;
        step.x_t = x;
        if (sched.T - t < cfg.skip_initial_steps) {
            // Early steps replay the original trajectory untouched so the
            // edit starts from a faithfully reconstructed state.
            step.x_base = base_step(model, record, x, t, cfg.weights.cond_orig,
                                    cfg.weights.w_orig, sched);
            step.x_next = step.x_base;
        } else {
            StepResult r;
            if (ef_baseline) {
                r = ef_combined_step(model, record, x, t, cfg, sched);
            } else if (cfg.mode == EngineMode::explicit_update) {
                r = explicit_step(model, record, x, t, cfg, sched);
            } else {
                r = implicit_step(model, record, x, t, cfg, sched);
            }
            step.x_base = std::move(r.x_base);
            step.terms = std::move(r.terms);
            step.x_next = std::move(r.x_next);
        }
        if (!all_finite(step.x_next)) {
            throw NumericalError("edit state diverged at t=" + std::to_string(t));
        }
        x = step.x_next;
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace

EditTrace run_edit(const MixtureModel& model, const InversionRecord& record,
                   const EditConfig& cfg, const Schedule& sched) {
    return run_loop(model, record, cfg, sched, false);
}

EditTrace run_ef_baseline(const MixtureModel& model, const InversionRecord& record,
                          const EditConfig& cfg, const Schedule& sched) {
    if (cfg.improve_recon) {
        throw ConfigError("improve_recon is not part of the baseline update");
    }
    return run_loop(model, record, cfg, sched, true);
}

double audit_decomposition(const EditTrace& trace) {
    double worst = 0.0;
    for (const auto& step : trace.steps) {
        Vec delta = zeros(step.x_base.size());
        for (const auto& [name, term] : step.terms) delta = add(delta, term);
        const Vec rebuilt = add(step.x_base, delta);
        for (std::size_t i = 0; i < rebuilt.size(); ++i) {
            worst = std::max(worst, std::abs(rebuilt[i] - step.x_next[i]));
        }
    }
    return worst;
}

}  // namespace bridgelab
