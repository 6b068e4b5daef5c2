#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqtune/objectives.hpp"
#include "seqtune/oracle.hpp"
#include "seqtune/policy.hpp"
#include "seqtune/reward.hpp"

namespace seqtune {

struct StopRule {
    std::string metric;
    double threshold;
};

struct TrainConfig {
    Index steps = 1;
    double lr = 0.1;
    double lr_decay = 1.0;  // multiplicative, applied after each step
    std::uint64_t seed = 0;
    ObjectiveSpec objective;
    Index log_every = 1;
    std::optional<StopRule> stop_when;
    // MLE only: the training multiset.
    Dataset dataset;

    void validate() const;
};

/// Exact per-step diagnostics, all computed by enumeration regardless of how
/// the gradient was estimated.
struct MetricsRow {
    Index step = 0;
    double objective_value = 0.0;
    double expected_reward = 0.0;
    double kl_to_prior = 0.0;
    double kl_to_target = 0.0;
    double fwd_kl_from_target = 0.0;
    double entropy = 0.0;
    std::optional<double> elbo_gap;  // only defined for beta = 1 objectives
    double argmax_mass = 0.0;
    Index support_size = 0;  // sequences with mass > 1e-6
    double max_prob = 0.0;

    /// Metric by CSV column name; used by stop rules.
    double metric(const std::string& name) const;
};

enum class TrainStatus {
    Completed,       // ran all steps
    StoppedEarly,    // stop rule satisfied
    AbortNonFinite,  // gradient left the finite range
    AbortNonMonotone // exact-path objective decreased at small lr
};

struct Trajectory {
    TrainConfig config;
    std::vector<MetricsRow> rows;
    TabularPolicy final_policy;
    TrainStatus status = TrainStatus::Completed;
    bool stop_rule_satisfied = false;
};

/// Plain gradient ascent on the configured objective, deterministic given the
/// seed. Diagnostics are logged every log_every steps and at the final step.
Trajectory train(const TabularPolicy& initial, const TabularPolicy& prior,
                 const Reward& reward, const TrainConfig& config);

struct CollapseReport {
    double entropy = 0.0;
    double argmax_mass = 0.0;
    Index support_size = 0;
    double mass_outside_argmax = 0.0;
    /// Total-variation distance between the policy and itself restricted to
    /// the argmax set and renormalized.
    double tv_to_nearest_argmax_distribution = 0.0;
};

CollapseReport collapse_report(const TabularPolicy& policy, const Reward& reward);

struct SweepRow {
    double beta = 0.0;
    double expected_reward = 0.0;
    double kl_to_prior = 0.0;
    double entropy = 0.0;
};

/// Exact posterior statistics across a grid of temperatures, ascending.
std::vector<SweepRow> beta_sweep(const TabularPolicy& prior, const Reward& reward,
                                 const std::vector<double>& betas);

}  // namespace seqtune
