#pragma once

#include <optional>
#include <vector>

#include "seqtune/oracle.hpp"
#include "seqtune/policy.hpp"
#include "seqtune/reward.hpp"
#include "seqtune/rng.hpp"

namespace seqtune {

enum class ObjectiveKind { PureRL, KLRL, GDC, MLE };
enum class EstimatorKind { Exact, MonteCarlo };
enum class BaselineKind { None, BatchMean };
enum class GdcWeighting { ExactZ, SelfNormalized };

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Exact;
    Index batch_size = 0;
    BaselineKind baseline = BaselineKind::None;
};

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::KLRL;
    double beta = 1.0;
    EstimatorSpec estimator;
    GdcWeighting gdc_weighting = GdcWeighting::ExactZ;

    void validate() const;
};

/// Multiset of sequences standing in for a training corpus.
using Dataset = std::vector<Sequence>;

struct GradientEstimate {
    GradientTable grad;
    double objective_value = 0.0;
    // Monte-Carlo diagnostics; zero on the exact path.
    Index batch_size = 0;
    double est_variance_norm = 0.0;
};

/// r(x) + beta * (log prior(x) - log pi(x)): the original reward with the KL
/// penalty folded in, turning the penalized objective into plain expected
/// reward under a policy-coupled reward.
double reshaped_reward(const TabularPolicy& policy, const TabularPolicy& prior,
                       const Reward& reward, double beta, const Sequence& x);

/// Ascent direction on expected reward. Exact: full enumeration. Monte Carlo:
/// score-function batch mean, optionally centered by the batch-mean reward.
GradientEstimate grad_pure_rl(const TabularPolicy& policy, const Reward& reward,
                              const ObjectiveSpec& spec, Rng& rng);

/// Ascent direction on the KL-penalized objective. The Monte-Carlo path uses
/// the score-only form on the reshaped reward; the term from differentiating
/// the reshaped reward itself has zero expectation and is dropped.
GradientEstimate grad_klrl(const TabularPolicy& policy, const TabularPolicy& prior,
                           const Reward& reward, const ObjectiveSpec& spec, Rng& rng);

/// Ascent direction on -KL(target, pi). Monte Carlo samples from the policy
/// with importance weights target/pi, either exactly normalized (Z is known
/// here) or self-normalized as it would run at scale. Self-normalized weights
/// are biased at finite batch size.
GradientEstimate grad_gdc(const TabularPolicy& policy,
                          const TargetDistribution& target,
                          const ObjectiveSpec& spec, Rng& rng);

/// Ascent direction on mean log-likelihood of the dataset.
GradientEstimate grad_mle(const TabularPolicy& policy, const Dataset& data);

}  // namespace seqtune
