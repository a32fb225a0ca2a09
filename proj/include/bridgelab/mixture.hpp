#pragma once

#include <map>
#include <vector>

#include "bridgelab/rng.hpp"
#include "bridgelab/schedule.hpp"
#include "bridgelab/vec.hpp"

namespace bridgelab {

// Isotropic Gaussian mixture playing the role of the data distribution.
// Every density, score, and posterior below is exact, which is the entire
// point: the sampler under test runs against a model with no approximation
// error of its own.
struct MixtureComponent {
    double weight = 0.0;
    Vec mean;
    double stdev = 0.0;  // isotropic; zero allowed, then the component is a point mass
    int label = 0;
};

struct MixtureModel {
    int d = 0;
    std::vector<MixtureComponent> components;
};

// Conditioning restricts the mixture to the components carrying one of the
// listed labels and renormalizes. An empty label list means unconditional.
struct Condition {
    std::vector<int> labels;

    static Condition unconditional() { return Condition{}; }
    static Condition of(std::vector<int> labels);
    bool is_unconditional() const { return labels.empty(); }
    bool operator==(const Condition&) const = default;
};

// Component of the time-t marginal: under the forward process a component
// N(mu, s^2 I) becomes N(a_t mu, (a_t^2 s^2 + sigma_t^2) I) with unchanged
// weight.
struct TimeMarginal {
    double weight = 0.0;
    Vec mean;
    double var = 0.0;
    int label = 0;
};

void validate_model(const MixtureModel& model);

// Throws InvalidConditionError if a listed label matches no component.
void validate_condition(const MixtureModel& model, const Condition& cond);

std::vector<TimeMarginal> marginal_params(const MixtureModel& model, int t,
                                          const Schedule& sched);

// log p_t(x | cond), exact.
double log_density(const MixtureModel& model, const Vec& x, int t,
                   const Condition& cond, const Schedule& sched);

// grad_x log p_t(x | cond). At t = 0 this requires every selected component
// to have positive stdev; otherwise the density is singular and the call
// throws.
Vec score(const MixtureModel& model, const Vec& x, int t, const Condition& cond,
          const Schedule& sched);

// Hessian of log p_t(x | cond), used by the full-gradient reward path.
Mat score_jacobian(const MixtureModel& model, const Vec& x, int t,
                   const Condition& cond, const Schedule& sched);

// Exact analogue of a noise-prediction network: eps = -sigma_t * score.
// Identically zero wherever sigma_t = 0.
Vec noise_pred(const MixtureModel& model, const Vec& x, int t,
               const Condition& cond, const Schedule& sched);

// Guidance-weighted noise estimate
//     w * eps(x, t, cond) + (1 - w) * eps(x, t, unconditional),
// affine in w. An unconditional cond collapses to the plain estimate for
// any w.
Vec guided_noise(const MixtureModel& model, const Vec& x, int t,
                 const Condition& cond, double w, const Schedule& sched);

// Exact Bayes posterior over labels given x_t.
std::map<int, double> class_posterior(const MixtureModel& model, const Vec& x,
                                      int t, const Schedule& sched);
double class_posterior(const MixtureModel& model, const Vec& x, int t,
                       const Schedule& sched, int label);

// E[x_0 | x_t, cond] by Gaussian conjugacy per component, mixed with the
// time-t responsibilities. Agrees with the Tweedie form
// (x - sigma_t * noise_pred) / a_t to rounding error.
Vec x0_posterior_mean(const MixtureModel& model, const Vec& x, int t,
                      const Condition& cond, const Schedule& sched);

// Draw x_0 from the (conditioned) mixture.
Vec sample_data(const MixtureModel& model, Rng& rng, const Condition& cond);

// Draw x_t | x_0 from the forward process.
Vec forward_sample(const Vec& x0, int t, const Schedule& sched, Rng& rng);

}  // namespace bridgelab
