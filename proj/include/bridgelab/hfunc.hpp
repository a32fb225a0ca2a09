#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bridgelab/mixture.hpp"

namespace bridgelab {

// Guidance weights of a text-style edit. w_orig drives the reconstruction
// half of a step, w_edit and w_hat_orig the change half.
struct EditWeights {
    Condition cond_orig;
    Condition cond_edit;
    double w_orig = 1.0;
    double w_edit = 7.5;
    double w_hat_orig = 5.0;
};

// Practical weight guideline: 0 < w_orig <= w_hat_orig < w_edit. Violations
// are legal (several baselines live outside it) but worth flagging.
std::optional<std::string> weight_guideline_warning(const EditWeights& w);

// Direction field of the text-style edit:
//
//   f = w_edit * eps(cond_edit) - w_hat_orig * eps(cond_orig)
//       + (w_hat_orig - w_edit) * eps(unconditional).
//
// The underlying h score is -f / sigma_t; engines never divide, they fold
// the factor into their step coefficient (coef * f = eta * h-score).
Vec edit_direction_f(const MixtureModel& model, const Vec& x, int t,
                     const EditWeights& w, const Schedule& sched);

// Exact gradient of log p(label | x_t). Equals the conditional minus the
// unconditional score, which is how it is computed.
Vec classifier_h_score(const MixtureModel& model, const Vec& x, int t, int label,
                       const Schedule& sched);

// ---------------------------------------------------------------------------
// Reward experts: h = exp(r(x_{0|t})) with the data-end estimate lifted
// through the denoiser, r(x) = -|G(x) - G(x_ref)|^2.

enum class FeatureMap {
    identity,        // G(x) = x
    second_moments,  // G(x)_i = x_i^2
};

enum class RhoSchedule {
    constant,        // rho
    sqrt_alpha_bar,  // rho * sqrt(alpha_bar[t]), fades as noise grows
    norm_matched,    // rho * |reference| / |g|, engine supplies the reference
};

struct RewardSpec {
    FeatureMap feature = FeatureMap::identity;
    Vec reference;
    double rho = 1.0;
    RhoSchedule rho_schedule = RhoSchedule::constant;
    // Differentiate through the noise estimate instead of freezing it.
    // Ablation path only; the frozen estimate is the method.
    bool full_gradient = false;
};

double reward_value(const RewardSpec& spec, const Vec& x0);
Vec reward_grad_x0(const RewardSpec& spec, const Vec& x0);

// Gradient of r((x - sigma_t * eps_hat) / a_t) with respect to x while
// holding eps_hat fixed: the stop-gradient pullback, (1/a_t) grad r. No rho
// scaling here.
Vec reward_pullback(const RewardSpec& spec, const Vec& x, int t, const Vec& eps_hat,
                    const Schedule& sched);

// Same map but differentiating through eps_hat(x) = guided_noise(x, t,
// cond, w) as well, which drags in the log-density Hessian.
Vec reward_full_gradient(const MixtureModel& model, const RewardSpec& spec,
                         const Vec& x, int t, const Condition& cond, double w,
                         const Schedule& sched);

// Scalar rho factor for the two closed-form schedules. norm_matched has no
// scalar factor; asking for one is a config bug.
double rho_factor(const RewardSpec& spec, int t, const Schedule& sched);

// g scaled to rho * |reference|, direction preserved. Zero g stays zero.
Vec norm_match(const Vec& g, const Vec& reference, double rho);

// Complete reward h-score as engines consume it: stop-gradient (or full
// gradient) pullback with eps_hat from (cond, w), scaled by the rho
// schedule. norm_matched needs the engine's reference vector.
Vec reward_h_score(const MixtureModel& model, const RewardSpec& spec, const Vec& x,
                   int t, const Condition& cond, double w, const Schedule& sched,
                   const Vec* norm_reference = nullptr);

// ---------------------------------------------------------------------------
// Reconstruction expert: h = exp(-lambda_t |x - anchor|^2), the quadratic
// tether that pulls an iterate back toward its replay point.

struct ReconSpec {
    std::vector<double> lambda;  // indexed by level, size T + 1
    Vec anchor;
};

double recon_log_h(const ReconSpec& spec, const Vec& x, int t);
Vec recon_h_score(const ReconSpec& spec, const Vec& x, int t);

// ---------------------------------------------------------------------------
// Polymorphic view used for composition: a product of experts multiplies
// h-functions, so scores add.

class HExpert {
public:
    virtual ~HExpert() = default;
    virtual std::string name() const = 0;
    virtual double log_h(const Vec& x, int t) const = 0;
    virtual Vec score(const Vec& x, int t) const = 0;
};

class ClassifierExpert : public HExpert {
public:
    ClassifierExpert(const MixtureModel& model, const Schedule& sched, int label)
        : model_(model), sched_(sched), label_(label) {}
    std::string name() const override { return "classifier"; }
    double log_h(const Vec& x, int t) const override;
    Vec score(const Vec& x, int t) const override;

private:
    const MixtureModel& model_;
    const Schedule& sched_;
    int label_;
};

class ReconExpert : public HExpert {
public:
    explicit ReconExpert(ReconSpec spec) : spec_(std::move(spec)) {}
    std::string name() const override { return "recon"; }
    double log_h(const Vec& x, int t) const override { return recon_log_h(spec_, x, t); }
    Vec score(const Vec& x, int t) const override { return recon_h_score(spec_, x, t); }

private:
    ReconSpec spec_;
};

class RewardExpert : public HExpert {
public:
    RewardExpert(const MixtureModel& model, const Schedule& sched, RewardSpec spec,
                 Condition cond, double w)
        : model_(model), sched_(sched), spec_(std::move(spec)), cond_(std::move(cond)), w_(w) {}
    std::string name() const override { return "reward"; }
    double log_h(const Vec& x, int t) const override;
    // Stop-gradient pullback with eps_hat taken at x itself; unscaled.
    Vec score(const Vec& x, int t) const override;

private:
    const MixtureModel& model_;
    const Schedule& sched_;
    RewardSpec spec_;
    Condition cond_;
    double w_;
};

// Score of the product expert prod_e h_e: the componentwise sum of scores.
// Contributions are summed per component in value-sorted order, so the
// result is bit-identical under any permutation of the stack.
Vec product_score(const std::vector<const HExpert*>& stack, const Vec& x, int t);
double product_log_h(const std::vector<const HExpert*>& stack, const Vec& x, int t);

}  // namespace bridgelab
