#include "bridgelab/metrics.hpp"

#include <cmath>

#include "bridgelab/errors.hpp"
#include "bridgelab/format.hpp"

namespace bridgelab {

Vec project_off(const Vec& x, const Vec& direction) {
    check_same_size(x, direction, "project_off");
    const double vv = dot(direction, direction);
    if (vv == 0.0) {
        throw ConfigError("edit direction must be nonzero");
    }
    const double c = dot(direction, x) / vv;
    Vec out = x;
    axpy(-c, direction, out);
    return out;
}

Vec class_mean(const MixtureModel& model, int label) {
    validate_condition(model, Condition::of({label}));
    Vec mean = zeros(model.d);
    double total = 0.0;
    for (const auto& comp : model.components) {
        if (comp.label != label) continue;
        axpy(comp.weight, comp.mean, mean);
        total += comp.weight;
    }
    return scale(1.0 / total, mean);
}

EditTask make_swap_task(const MixtureModel& model, int from_label, int to_label) {
    EditTask task;
    task.edit_label = to_label;
    task.edit_direction = sub(class_mean(model, to_label), class_mean(model, from_label));
    return task;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

EditReport evaluate(const MixtureModel& model, const std::vector<EditTrace>& traces,
                    const EditTask& task, const Schedule& sched) {
    if (traces.empty()) {
        throw ConfigError("evaluate needs at least one trace");
    }
    if (static_cast<int>(task.edit_direction.size()) != model.d) {
        throw ConfigError("edit task direction has wrong dimension");
    }
    if (task.reward && static_cast<int>(task.reward->reference.size()) != model.d) {
        throw ConfigError("edit task reward reference has wrong dimension");
    }

    EditReport report;
    for (const auto& trace : traces) {
        const Vec x_edit = trace.x0_edit();
        report.target_posterior.push_back(
            class_posterior(model, x_edit, 0, sched, task.edit_label));
        report.faithfulness.push_back(
            norm(project_off(sub(x_edit, trace.x0_orig), task.edit_direction)));
        report.reward_value.push_back(task.reward ? reward_value(*task.reward, x_edit)
                                                  : 0.0);
    }
    report.posterior_mean = mean_of(report.target_posterior);
    report.posterior_std = sample_stddev(report.target_posterior);
    report.faithfulness_mean = mean_of(report.faithfulness);
    report.faithfulness_std = sample_stddev(report.faithfulness);
    report.reward_mean = mean_of(report.reward_value);
    report.reward_std = sample_stddev(report.reward_value);
    return report;
}

std::string report_csv_columns() {
    return "seeds,posterior_mean,posterior_std,faithfulness_mean,faithfulness_std,"
           "reward_mean,reward_std";
}

std::string report_csv_values(const EditReport& report) {
    std::string row = std::to_string(report.seeds());
    for (double v : {report.posterior_mean, report.posterior_std, report.faithfulness_mean,
                     report.faithfulness_std, report.reward_mean, report.reward_std}) {
        row += ',';
        row += fmt_double(v);
    }
    return row;
}

}  // namespace bridgelab
