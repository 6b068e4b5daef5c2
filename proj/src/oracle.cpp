#include "seqtune/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_length(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("distributions live on different spaces");
    }
}

void check_normalized(const Vec& p) {
    if (std::abs(p.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("distribution does not sum to 1");
    }
}

void check_beta(double beta) {
    if (!(beta > 0.0)) {
        throw std::invalid_argument("beta must be > 0");
    }
}

}  // namespace

double log_sum_exp(const Vec& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
        sum += std::exp(v(i) - m);
    }
    return m + std::log(sum);
}

double log_partition(const Vec& prior_log_probs, const Vec& reward_values,
                     double beta) {
    check_beta(beta);
    check_same_length(prior_log_probs, reward_values);
    return log_sum_exp(prior_log_probs + reward_values / beta);
}

double log_partition(const TabularPolicy& prior, const Reward& reward, double beta) {
    return log_partition(prior.log_distribution(), reward.values(prior.space()), beta);
}

TargetDistribution gibbs_posterior(const SequenceSpace& space,
                                   const Vec& prior_log_probs,
                                   const Vec& reward_values, double beta) {
    const double log_z = log_partition(prior_log_probs, reward_values, beta);
    Vec probs =
        (prior_log_probs + reward_values / beta).array() - log_z;
    probs = probs.array().exp();
    probs /= probs.sum();  // sweep up the last ulp of rounding
    return TargetDistribution{space, std::move(probs), log_z, beta};
}

TargetDistribution gibbs_posterior(const TabularPolicy& prior, const Reward& reward,
                                   double beta) {
    return gibbs_posterior(prior.space(), prior.log_distribution(),
                           reward.values(prior.space()), beta);
}

double kl_divergence(const Vec& p, const Vec& q) {
    check_same_length(p, q);
    check_normalized(p);
    check_normalized(q);
    double sum = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) <= 0.0) continue;  // 0 log 0 = 0
        if (q(i) <= 0.0) return kInf;
        sum += p(i) * std::log(p(i) / q(i));
    }
    // Rounding can push a true zero a hair negative; KL is nonnegative.
    return sum < 0.0 ? 0.0 : sum;
}

double entropy(const Vec& p) {
    double h = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) h -= p(i) * std::log(p(i));
    }
    return h < 0.0 ? 0.0 : h;
}

double expected_value(const Vec& p, const Vec& values) {
    check_same_length(p, values);
    return p.dot(values);
}

double klrl_objective(const Vec& policy_dist, const Vec& prior_dist,
                      const Vec& reward_values, double beta) {
    const double er = expected_value(policy_dist, reward_values);
    if (beta == 0.0) return er;
    const double kl = kl_divergence(policy_dist, prior_dist);
    return er - beta * kl;  // +inf KL propagates to -inf objective
}

double klrl_objective(const TabularPolicy& policy, const TabularPolicy& prior,
                      const Reward& reward, double beta) {
    return klrl_objective(policy.distribution(), prior.distribution(),
                          reward.values(policy.space()), beta);
}

double elbo(const TabularPolicy& policy, const TabularPolicy& prior,
            const OptimalityModel& model) {
    const Vec lp = policy.log_distribution();
    const Vec lp0 = prior.log_distribution();
    const Vec r = model.shifted_values(policy.space());
    double sum = 0.0;
    for (Index i = 0; i < lp.size(); ++i) {
        const double pi = std::exp(lp(i));
        if (pi <= 0.0) continue;
        sum += pi * (r(i) + lp0(i) - lp(i));
    }
    return sum;
}

IdentityReport verify_identities(const TabularPolicy& policy,
                                 const TabularPolicy& prior, const Reward& reward,
                                 double beta) {
    check_beta(beta);
    const SequenceSpace& space = policy.space();
    const Vec reward_values = reward.values(space);
    const Vec policy_dist = policy.distribution();
    const Vec prior_lp = prior.log_distribution();
    const Vec prior_dist = prior_lp.array().exp();

    const TargetDistribution target =
        gibbs_posterior(space, prior_lp, reward_values, beta);
    const double objective =
        klrl_objective(policy_dist, prior_dist, reward_values, beta);

    // The objective, the reverse KL to the target and the log-partition are
    // affinely related: J = beta * log Z - beta * KL(pi, target).
    const double kl_to_target = kl_divergence(policy_dist, target.probs);
    const double affine =
        std::abs(objective - (beta * target.log_z - beta * kl_to_target));

    // Folding the KL penalty into the reward leaves the objective unchanged:
    // J = E_pi[r(x) + beta * (log prior(x) - log pi(x))].
    const Vec policy_lp = policy.log_distribution();
    double reshaped_expectation = 0.0;
    for (Index i = 0; i < policy_dist.size(); ++i) {
        if (policy_dist(i) <= 0.0) continue;
        reshaped_expectation +=
            policy_dist(i) * (reward_values(i) + beta * (prior_lp(i) - policy_lp(i)));
    }
    const double reshaping = std::abs(reshaped_expectation - objective);

    // The Jensen bound must not exceed the log-evidence; checked in its
    // native form (shifted reward, beta = 1).
    const OptimalityModel model(reward, space);
    const double shifted_log_z =
        log_partition(prior_lp, model.shifted_values(space), 1.0);
    const double bound = elbo(policy, prior, model);
    const double violation = std::max(0.0, bound - shifted_log_z);

    return IdentityReport{affine, reshaping, violation, target.log_z, beta};
}

}  // namespace seqtune
