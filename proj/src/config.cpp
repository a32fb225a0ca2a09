#include "bridgelab/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "bridgelab/errors.hpp"

namespace bridgelab {

using nlohmann::json;

namespace {

const json& need(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError(where + "." + key + ": missing");
    }
    return *it;
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
    try {
        return need(j, key, where).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + std::string(key) + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
    if (j.find(key) == j.end()) return fallback;
    return get_as<T>(j, key, where);
}

Condition parse_condition(const json& j, const char* key, const std::string& where) {
    const auto labels = get_as<std::vector<int>>(j, key, where);
    if (labels.empty()) return Condition::unconditional();
    return Condition::of(labels);
}

json condition_to_json(const Condition& cond) {
    return json(cond.labels);
}

StackEntry parse_expert(const json& j, const std::string& where) {
    StackEntry entry;
    const auto type = get_as<std::string>(j, "type", where);
    if (type == "reward") {
        entry.kind = StackEntry::Kind::reward;
        const auto feature = get_or<std::string>(j, "feature", where, "identity");
        if (feature == "identity") {
            entry.reward.feature = FeatureMap::identity;
        } else if (feature == "second_moments") {
            entry.reward.feature = FeatureMap::second_moments;
        } else {
            throw ConfigError(where + ".feature: unknown feature map '" + feature + "'");
        }
        entry.reward.reference = get_as<Vec>(j, "reference", where);
        entry.reward.rho = get_or<double>(j, "rho", where, 1.0);
        const auto sched = get_or<std::string>(j, "rho_schedule", where, "constant");
        if (sched == "constant") {
            entry.reward.rho_schedule = RhoSchedule::constant;
        } else if (sched == "sqrt_alpha_bar") {
            entry.reward.rho_schedule = RhoSchedule::sqrt_alpha_bar;
        } else if (sched == "norm_matched") {
            entry.reward.rho_schedule = RhoSchedule::norm_matched;
        } else {
            throw ConfigError(where + ".rho_schedule: unknown schedule '" + sched + "'");
        }
        entry.reward.full_gradient = get_or<bool>(j, "full_gradient", where, false);
    } else if (type == "classifier") {
        entry.kind = StackEntry::Kind::classifier;
        entry.classifier_label = get_as<int>(j, "label", where);
        entry.classifier_scale = get_or<double>(j, "scale", where, 1.0);
    } else {
        throw ConfigError(where + ".type: unknown expert type '" + type + "'");
    }
    return entry;
}

json expert_to_json(const StackEntry& entry) {
    json j;
    if (entry.kind == StackEntry::Kind::reward) {
        j["type"] = "reward";
        j["feature"] =
            entry.reward.feature == FeatureMap::identity ? "identity" : "second_moments";
        j["reference"] = entry.reward.reference;
        j["rho"] = entry.reward.rho;
        switch (entry.reward.rho_schedule) {
            case RhoSchedule::constant: j["rho_schedule"] = "constant"; break;
            case RhoSchedule::sqrt_alpha_bar: j["rho_schedule"] = "sqrt_alpha_bar"; break;
            case RhoSchedule::norm_matched: j["rho_schedule"] = "norm_matched"; break;
        }
        j["full_gradient"] = entry.reward.full_gradient;
    } else {
        j["type"] = "classifier";
        j["label"] = entry.classifier_label;
        j["scale"] = entry.classifier_scale;
    }
    return j;
}

template <typename T>
std::vector<T> parse_axis(const json& sweep, const char* key, const std::string& where) {
    if (sweep.find(key) == sweep.end()) return {};
    auto grid = get_as<std::vector<T>>(sweep, key, where);
    if (grid.empty()) {
        throw ConfigError(where + "." + std::string(key) + ": sweep grid must be nonempty");
    }
    return grid;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;

    const json& sched = need(j, "schedule", "config");
    c.schedule_recipe = get_as<std::string>(sched, "recipe", "schedule");
    c.lambda = get_as<double>(sched, "lambda", "schedule");
    c.num_steps = get_or<int>(sched, "num_steps", "schedule", 0);
    if (c.schedule_recipe == "linear_beta") {
        c.T = get_as<int>(sched, "T", "schedule");
        c.beta_min = get_as<double>(sched, "beta_min", "schedule");
        c.beta_max = get_as<double>(sched, "beta_max", "schedule");
    } else if (c.schedule_recipe == "cosine") {
        c.T = get_as<int>(sched, "T", "schedule");
    } else if (c.schedule_recipe == "explicit") {
        c.alpha_bar = get_as<std::vector<double>>(sched, "alpha_bar", "schedule");
        c.T = static_cast<int>(c.alpha_bar.size()) - 1;
    } else {
        throw ConfigError("schedule.recipe: unknown recipe '" + c.schedule_recipe + "'");
    }
    if (c.num_steps < 0 || c.num_steps > c.T) {
        throw ConfigError("schedule.num_steps: must lie in [0, T]");
    }

    const json& model = need(j, "model", "config");
    c.model.d = get_as<int>(model, "d", "model");
    const json& comps = need(model, "components", "model");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string where = "model.components[" + std::to_string(i) + "]";
        MixtureComponent comp;
        comp.weight = get_as<double>(comps[i], "weight", where);
        comp.mean = get_as<Vec>(comps[i], "mean", where);
        comp.stdev = get_as<double>(comps[i], "stdev", where);
        comp.label = get_as<int>(comps[i], "label", where);
        c.model.components.push_back(std::move(comp));
    }
    try {
        validate_model(c.model);
    } catch (const ValidationError& e) {
        throw ConfigError("model: " + std::string(e.what()));
    }

    const json& inv = need(j, "inversion", "config");
    const auto mode = get_as<std::string>(inv, "mode", "inversion");
    if (mode == "deterministic") {
        c.inversion = InversionMode::deterministic;
    } else if (mode == "random") {
        c.inversion = InversionMode::random;
    } else {
        throw ConfigError("inversion.mode: unknown mode '" + mode + "'");
    }
    c.edit.weights.w_orig = get_as<double>(inv, "w_orig", "inversion");
    c.edit.weights.cond_orig = parse_condition(inv, "cond_orig", "inversion");

    const json& edit = need(j, "edit", "config");
    const auto engine = get_as<std::string>(edit, "mode", "edit");
    if (engine == "explicit") {
        c.edit.mode = EngineMode::explicit_update;
    } else if (engine == "implicit") {
        c.edit.mode = EngineMode::implicit_update;
    } else {
        throw ConfigError("edit.mode: unknown mode '" + engine + "'");
    }
    c.edit.K = get_or<int>(edit, "K", "edit", 1);
    c.edit.text_edit = get_or<bool>(edit, "text_edit", "edit", true);
    c.edit.weights.w_edit = get_as<double>(edit, "w_edit", "edit");
    c.edit.weights.w_hat_orig = get_as<double>(edit, "w_hat_orig", "edit");
    c.edit.weights.cond_edit = parse_condition(edit, "cond_edit", "edit");
    c.edit.improve_recon = get_or<bool>(edit, "improve_recon", "edit", false);
    c.recon_lambda_scalar = get_or<double>(edit, "recon_lambda", "edit", 0.0);
    if (c.recon_lambda_scalar < 0.0 || c.recon_lambda_scalar > 1.0) {
        throw ConfigError("edit.recon_lambda: must lie in [0, 1]");
    }
    c.edit.skip_initial_steps = get_or<int>(edit, "skip_initial_steps", "edit", 0);

    if (j.find("experts") != j.end()) {
        const json& experts = j["experts"];
        for (std::size_t i = 0; i < experts.size(); ++i) {
            c.edit.stack.push_back(
                parse_expert(experts[i], "experts[" + std::to_string(i) + "]"));
        }
    }

    const json& task = need(j, "task", "config");
    c.task_edit_label = get_as<int>(task, "edit_label", "task");
    c.task_from_label = get_as<int>(task, "from_label", "task");
    for (int label : {c.task_edit_label, c.task_from_label}) {
        try {
            validate_condition(c.model, Condition::of({label}));
        } catch (const ValidationError& e) {
            throw ConfigError("task: " + std::string(e.what()));
        }
    }

    c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds", "config");
    if (c.seeds.empty()) {
        throw ConfigError("seeds: need at least one seed");
    }

    if (j.find("sweep") != j.end()) {
        const json& sweep = j["sweep"];
        c.sweep.w_edit = parse_axis<double>(sweep, "w_edit", "sweep");
        c.sweep.w_hat_orig = parse_axis<double>(sweep, "w_hat_orig", "sweep");
        c.sweep.K = parse_axis<int>(sweep, "K", "sweep");
        c.sweep.rho = parse_axis<double>(sweep, "rho", "sweep");
        for (int k : c.sweep.K) {
            if (k < 1) throw ConfigError("sweep.K: iteration counts must be >= 1");
        }
    }

    if (j.find("output") != j.end()) {
        c.output_dir = get_or<std::string>(j["output"], "dir", "output", "out");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    json j;
    try {
        j = json::parse(file);
    } catch (const json::parse_error& e) {
        // The parser message carries the offending position.
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    json sched;
    sched["recipe"] = c.schedule_recipe;
    sched["lambda"] = c.lambda;
    sched["num_steps"] = c.num_steps;
    if (c.schedule_recipe == "explicit") {
        sched["alpha_bar"] = c.alpha_bar;
    } else {
        sched["T"] = c.T;
        if (c.schedule_recipe == "linear_beta") {
            sched["beta_min"] = c.beta_min;
            sched["beta_max"] = c.beta_max;
        }
    }
    j["schedule"] = sched;

    json model;
    model["d"] = c.model.d;
    json comps = json::array();
    for (const auto& comp : c.model.components) {
        json jc;
        jc["weight"] = comp.weight;
        jc["mean"] = comp.mean;
        jc["stdev"] = comp.stdev;
        jc["label"] = comp.label;
        comps.push_back(jc);
    }
    model["components"] = comps;
    j["model"] = model;

    json inv;
    inv["mode"] = c.inversion == InversionMode::deterministic ? "deterministic" : "random";
    inv["w_orig"] = c.edit.weights.w_orig;
    inv["cond_orig"] = condition_to_json(c.edit.weights.cond_orig);
    j["inversion"] = inv;

    json edit;
    edit["mode"] = c.edit.mode == EngineMode::explicit_update ? "explicit" : "implicit";
    edit["K"] = c.edit.K;
    edit["text_edit"] = c.edit.text_edit;
    edit["w_edit"] = c.edit.weights.w_edit;
    edit["w_hat_orig"] = c.edit.weights.w_hat_orig;
    edit["cond_edit"] = condition_to_json(c.edit.weights.cond_edit);
    edit["improve_recon"] = c.edit.improve_recon;
    edit["recon_lambda"] = c.recon_lambda_scalar;
    edit["skip_initial_steps"] = c.edit.skip_initial_steps;
    j["edit"] = edit;

    json experts = json::array();
    for (const auto& entry : c.edit.stack) experts.push_back(expert_to_json(entry));
    j["experts"] = experts;

    json task;
    task["edit_label"] = c.task_edit_label;
    task["from_label"] = c.task_from_label;
    j["task"] = task;

    j["seeds"] = c.seeds;

    json sweep;
    if (!c.sweep.w_edit.empty()) sweep["w_edit"] = c.sweep.w_edit;
    if (!c.sweep.w_hat_orig.empty()) sweep["w_hat_orig"] = c.sweep.w_hat_orig;
    if (!c.sweep.K.empty()) sweep["K"] = c.sweep.K;
    if (!c.sweep.rho.empty()) sweep["rho"] = c.sweep.rho;
    j["sweep"] = sweep;

    json output;
    output["dir"] = c.output_dir;
    j["output"] = output;
    return j;
}

Schedule make_schedule(const ExperimentConfig& c) {
    Schedule s;
    if (c.schedule_recipe == "linear_beta") {
        s = build_linear_beta(c.T, c.beta_min, c.beta_max, c.lambda);
    } else if (c.schedule_recipe == "cosine") {
        s = build_cosine(c.T, c.lambda);
    } else {
        s = build_explicit(c.alpha_bar, c.lambda);
    }
    if (c.num_steps > 0 && c.num_steps < c.T) {
        s = subsequence(s, c.num_steps);
    }
    return s;
}

EditTask make_task(const ExperimentConfig& c) {
    EditTask task = make_swap_task(c.model, c.task_from_label, c.task_edit_label);
    for (const auto& entry : c.edit.stack) {
        if (entry.kind == StackEntry::Kind::reward) {
            task.reward = entry.reward;
            break;
        }
    }
    return task;
}

std::string config_fingerprint(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace bridgelab
