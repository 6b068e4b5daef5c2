#include "seqtune/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtune {

namespace {

constexpr double kSupportThreshold = 1e-6;

// Largest learning rate at which the exact-gradient path is required to
// improve monotonically; a decrease there signals a numerical fault.
constexpr double kMonotoneLrCeiling = 0.1;
constexpr double kMonotoneSlack = 1e-9;

/// Empirical distribution of a dataset over the space.
Vec empirical_distribution(const SequenceSpace& space, const Dataset& data) {
    Vec counts = Vec::Zero(space.size());
    for (const Sequence& x : data) {
        counts(space.index_of(x)) += 1.0;
    }
    return counts / static_cast<double>(data.size());
}

struct Diagnostics {
    const SequenceSpace& space;
    const TabularPolicy& prior;
    Vec prior_dist;
    Vec prior_lp;
    Vec reward_values;
    Vec target_probs;   // Gibbs posterior at the run's beta (1 for pure RL);
    double target_log_z;// empirical distribution for MLE.
    std::vector<Index> argmax;
    std::optional<OptimalityModel> model;  // set when elbo_gap is defined
    double shifted_log_z = 0.0;
    double diag_beta = 1.0;

    Diagnostics(const TabularPolicy& prior_policy, const Reward& reward,
                const TrainConfig& config)
        : space(prior_policy.space()),
          prior(prior_policy),
          prior_dist(prior_policy.distribution()),
          prior_lp(prior_policy.log_distribution()),
          reward_values(reward.values(space)),
          argmax(argmax_set(reward, space)) {
        const ObjectiveKind kind = config.objective.kind;
        diag_beta = (kind == ObjectiveKind::KLRL || kind == ObjectiveKind::GDC)
                        ? config.objective.beta
                        : 1.0;
        if (kind == ObjectiveKind::MLE) {
            target_probs = empirical_distribution(space, config.dataset);
            target_log_z = 0.0;
        } else {
            const double beta = diag_beta > 0.0 ? diag_beta : 1.0;
            const TargetDistribution t =
                gibbs_posterior(space, prior_lp, reward_values, beta);
            target_probs = t.probs;
            target_log_z = t.log_z;
        }
        if (diag_beta == 1.0 && kind != ObjectiveKind::MLE &&
            kind != ObjectiveKind::PureRL) {
            model.emplace(reward, space);
            shifted_log_z =
                log_partition(prior_lp, model->shifted_values(space), 1.0);
        }
    }

    MetricsRow row(Index step, const TabularPolicy& policy,
                   const TrainConfig& config) const {
        if (!policy.logits().allFinite()) {
            // Degenerate table (training left the finite range): the abort row
            // carries the step number and NaN metrics.
            MetricsRow r;
            r.step = step;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.objective_value = r.expected_reward = r.kl_to_prior = nan;
            r.kl_to_target = r.fwd_kl_from_target = r.entropy = nan;
            r.argmax_mass = r.max_prob = nan;
            return r;
        }
        const Vec lp = policy.log_distribution();
        const Vec dist = lp.array().exp();
        MetricsRow r;
        r.step = step;
        r.expected_reward = expected_value(dist, reward_values);
        r.kl_to_prior = kl_divergence(dist, prior_dist);
        r.kl_to_target = kl_divergence(dist, target_probs);
        r.fwd_kl_from_target = kl_divergence(target_probs, dist);
        r.entropy = entropy(dist);
        r.argmax_mass = argmax_mass(dist, argmax);
        r.support_size = (dist.array() > kSupportThreshold).count();
        r.max_prob = dist.maxCoeff();
        switch (config.objective.kind) {
            case ObjectiveKind::PureRL:
                r.objective_value = r.expected_reward;
                break;
            case ObjectiveKind::KLRL:
                r.objective_value =
                    r.expected_reward - config.objective.beta * r.kl_to_prior;
                break;
            case ObjectiveKind::GDC:
                r.objective_value = -r.fwd_kl_from_target;
                break;
            case ObjectiveKind::MLE: {
                double ll = 0.0;
                for (Index i = 0; i < dist.size(); ++i) {
                    if (target_probs(i) > 0.0) ll += target_probs(i) * lp(i);
                }
                r.objective_value = ll;
                break;
            }
        }
        if (model.has_value()) {
            r.elbo_gap = shifted_log_z - elbo(policy, prior, *model);
        }
        return r;
    }
};

bool stop_rule_met(const StopRule& rule, const MetricsRow& row) {
    const double value = row.metric(rule.metric);
    // Quantities that grow toward convergence stop from above; divergences,
    // entropy and the like stop from below.
    if (rule.metric == "objective" || rule.metric == "expected_reward" ||
        rule.metric == "argmax_mass" || rule.metric == "max_prob") {
        return value >= rule.threshold;
    }
    return value <= rule.threshold;
}

}  // namespace

void TrainConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw std::invalid_argument("lr must be >= 0 and finite");
    }
    if (!(lr_decay > 0.0) || lr_decay > 1.0) {
        throw std::invalid_argument("lr_decay must be in (0, 1]");
    }
    if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
    objective.validate();
    if (objective.kind == ObjectiveKind::MLE && dataset.empty()) {
        throw std::invalid_argument("mle objective needs a non-empty dataset");
    }
    if (stop_when.has_value()) {
        MetricsRow probe;
        probe.metric(stop_when->metric);  // throws on unknown name
    }
}

double MetricsRow::metric(const std::string& name) const {
    if (name == "objective") return objective_value;
    if (name == "expected_reward") return expected_reward;
    if (name == "kl_to_prior") return kl_to_prior;
    if (name == "kl_to_target") return kl_to_target;
    if (name == "fwd_kl_from_target") return fwd_kl_from_target;
    if (name == "entropy") return entropy;
    if (name == "elbo_gap") {
        return elbo_gap.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (name == "argmax_mass") return argmax_mass;
    if (name == "support_size") return static_cast<double>(support_size);
    if (name == "max_prob") return max_prob;
    throw std::invalid_argument("unknown metric: " + name);
}

Trajectory train(const TabularPolicy& initial, const TabularPolicy& prior,
                 const Reward& reward, const TrainConfig& config) {
    config.validate();
    if (!initial.same_space(prior)) {
        throw std::invalid_argument("policy and prior live on different spaces");
    }

    const Diagnostics diag(prior, reward, config);
    TabularPolicy policy = initial;
    Rng rng(config.seed);

    std::optional<TargetDistribution> gdc_target;
    if (config.objective.kind == ObjectiveKind::GDC) {
        gdc_target = gibbs_posterior(policy.space(), diag.prior_lp,
                                     diag.reward_values, config.objective.beta);
    }

    const bool exact = config.objective.estimator.kind == EstimatorKind::Exact;

    Trajectory traj{config, {}, policy, TrainStatus::Completed, false};
    double lr = config.lr;
    double max_lr_since_log = 0.0;
    std::optional<double> last_logged_objective;

    const auto log_row = [&](Index step) -> MetricsRow& {
        traj.rows.push_back(diag.row(step, policy, config));
        return traj.rows.back();
    };

    for (Index step = 1; step <= config.steps; ++step) {
        GradientEstimate est;
        switch (config.objective.kind) {
            case ObjectiveKind::PureRL:
                est = grad_pure_rl(policy, reward, config.objective, rng);
                break;
            case ObjectiveKind::KLRL:
                est = grad_klrl(policy, prior, reward, config.objective, rng);
                break;
            case ObjectiveKind::GDC:
                est = grad_gdc(policy, *gdc_target, config.objective, rng);
                break;
            case ObjectiveKind::MLE:
                est = grad_mle(policy, config.dataset);
                break;
        }

        if (!est.grad.allFinite()) {
            log_row(step);
            traj.status = TrainStatus::AbortNonFinite;
            break;
        }

        policy.logits() += lr * est.grad;
        max_lr_since_log = std::max(max_lr_since_log, lr);
        lr *= config.lr_decay;

        const bool should_log = (step % config.log_every == 0) || step == config.steps;
        if (!should_log) continue;

        const MetricsRow& row = log_row(step);

        if (exact && max_lr_since_log <= kMonotoneLrCeiling &&
            last_logged_objective.has_value() &&
            std::isfinite(*last_logged_objective) &&
            row.objective_value < *last_logged_objective - kMonotoneSlack) {
            traj.status = TrainStatus::AbortNonMonotone;
            break;
        }
        last_logged_objective = row.objective_value;
        max_lr_since_log = 0.0;

        if (config.stop_when.has_value() && stop_rule_met(*config.stop_when, row)) {
            traj.status = TrainStatus::StoppedEarly;
            traj.stop_rule_satisfied = true;
            break;
        }
    }

    traj.final_policy = policy;
    return traj;
}

CollapseReport collapse_report(const TabularPolicy& policy, const Reward& reward) {
    const Vec dist = policy.distribution();
    const std::vector<Index> argmax = argmax_set(reward, policy.space());

    CollapseReport report;
    report.entropy = entropy(dist);
    report.argmax_mass = argmax_mass(dist, argmax);
    report.support_size = (dist.array() > kSupportThreshold).count();
    report.mass_outside_argmax = 1.0 - report.argmax_mass;

    if (report.argmax_mass > 0.0) {
        Vec restricted = Vec::Zero(dist.size());
        for (Index i : argmax) restricted(i) = dist(i) / report.argmax_mass;
        report.tv_to_nearest_argmax_distribution =
            0.5 * (dist - restricted).lpNorm<1>();
    } else {
        report.tv_to_nearest_argmax_distribution = 1.0;
    }
    return report;
}

std::vector<SweepRow> beta_sweep(const TabularPolicy& prior, const Reward& reward,
                                 const std::vector<double>& betas) {
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0)) {
            throw std::invalid_argument("betas must be > 0");
        }
        if (i > 0 && betas[i] < betas[i - 1]) {
            throw std::invalid_argument("betas must be sorted ascending");
        }
    }
    const Vec prior_lp = prior.log_distribution();
    const Vec prior_dist = prior_lp.array().exp();
    const Vec reward_values = reward.values(prior.space());

    std::vector<SweepRow> rows;
    rows.reserve(betas.size());
    for (double beta : betas) {
        const TargetDistribution t =
            gibbs_posterior(prior.space(), prior_lp, reward_values, beta);
        rows.push_back(SweepRow{beta, expected_value(t.probs, reward_values),
                                kl_divergence(t.probs, prior_dist),
                                entropy(t.probs)});
    }
    return rows;
}

}  // namespace seqtune
