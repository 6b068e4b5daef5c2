#pragma once

#include "seqtune/policy.hpp"
#include "seqtune/reward.hpp"

namespace seqtune {

/// The exact tilted posterior: prior reweighted by exp(r/beta) and
/// renormalized. Built entirely in log space from the enumeration.
struct TargetDistribution {
    SequenceSpace space;
    Vec probs;
    double log_z;
    double beta;
};

/// log-sum-exp of a vector, reduced in index order for reproducibility.
double log_sum_exp(const Vec& v);

/// log Z = log sum_x exp(log prior(x) + r(x)/beta).
double log_partition(const Vec& prior_log_probs, const Vec& reward_values,
                     double beta);
double log_partition(const TabularPolicy& prior, const Reward& reward, double beta);

TargetDistribution gibbs_posterior(const TabularPolicy& prior, const Reward& reward,
                                   double beta);
TargetDistribution gibbs_posterior(const SequenceSpace& space,
                                   const Vec& prior_log_probs,
                                   const Vec& reward_values, double beta);

/// KL(p, q) = sum p log(p/q), with 0 log 0 = 0. Returns +infinity when p puts
/// mass where q has none; that is a legitimate value during collapse runs,
/// not an error.
double kl_divergence(const Vec& p, const Vec& q);

/// Shannon entropy in nats.
double entropy(const Vec& p);

double expected_value(const Vec& p, const Vec& values);

/// Expected reward under the policy minus beta times KL from the prior,
/// all by enumeration. beta = 0 reduces to pure expected reward.
double klrl_objective(const TabularPolicy& policy, const TabularPolicy& prior,
                      const Reward& reward, double beta);
double klrl_objective(const Vec& policy_dist, const Vec& prior_dist,
                      const Vec& reward_values, double beta);

/// sum_x pi(x) * (shifted_r(x) + log prior(x) - log pi(x)); the Jensen bound
/// on the log-evidence that the policy is optimal. Terms with pi(x) = 0
/// contribute 0.
double elbo(const TabularPolicy& policy, const TabularPolicy& prior,
            const OptimalityModel& model);

/// Residuals of the closed-form relations tying the objective, the two KL
/// divergences, the log-partition and the Jensen bound together. The caller
/// judges pass/fail against its own tolerance.
struct IdentityReport {
    /// | J(theta) - (beta * log Z - beta * KL(pi_theta, target)) |
    double residual_affine_identity;
    /// | E[reshaped reward] - J(theta) |
    double residual_reward_reshaping;
    /// max(0, elbo - log Z~) for the shifted reward at beta = 1.
    double elbo_gap_violation;
    double log_z;
    double beta;
};

IdentityReport verify_identities(const TabularPolicy& policy,
                                 const TabularPolicy& prior, const Reward& reward,
                                 double beta);

}  // namespace seqtune
