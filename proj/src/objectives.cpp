#include "seqtune/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace seqtune {

void ObjectiveSpec::validate() const {
    if (kind == ObjectiveKind::KLRL && beta < 0.0) {
        throw std::invalid_argument("beta must be >= 0");
    }
    if (kind == ObjectiveKind::GDC && !(beta > 0.0)) {
        throw std::invalid_argument("beta must be > 0");
    }
    if (estimator.kind == EstimatorKind::MonteCarlo) {
        const Index min_batch =
            estimator.baseline == BaselineKind::BatchMean ? 2 : 1;
        if (estimator.batch_size < min_batch) {
            throw std::invalid_argument("batch size too small for estimator");
        }
    }
}

double reshaped_reward(const TabularPolicy& policy, const TabularPolicy& prior,
                       const Reward& reward, double beta, const Sequence& x) {
    return reward(policy.space(), x) +
           beta * (prior.log_prob(x) - policy.log_prob(x));
}

namespace {

/// Score-function Monte-Carlo estimator shared by every objective: batch mean
/// of weight(x) * grad log pi(x), with the weight coming from the objective
/// (reward, reshaped reward, or importance ratio). Also records the summed
/// per-coordinate sample variance of the contributions.
struct ScoreBatch {
    explicit ScoreBatch(const TabularPolicy& policy)
        : policy(policy),
          row_probs(policy.conditional_probs()),
          sum(Mat::Zero(policy.num_rows(), policy.num_tokens())),
          sum_sq(Mat::Zero(policy.num_rows(), policy.num_tokens())),
          scratch(Mat::Zero(policy.num_rows(), policy.num_tokens())) {}

    void add(const Sequence& x, double weight) {
        scratch.setZero();
        policy.accumulate_grad_log_prob(x, row_probs, weight, scratch);
        sum += scratch;
        sum_sq += scratch.cwiseProduct(scratch);
        ++count;
    }

    Mat mean() const { return sum / static_cast<double>(count); }

    double variance_norm() const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        return ((sum_sq - sum.cwiseProduct(sum) / n) / (n - 1.0)).sum();
    }

    const TabularPolicy& policy;
    Mat row_probs;
    Mat sum;
    Mat sum_sq;
    Mat scratch;
    Index count = 0;
};

GradientEstimate exact_score_gradient(const TabularPolicy& policy,
                                      const Vec& weights, double objective_value) {
    const Mat row_probs = policy.conditional_probs();
    const Vec dist = policy.distribution();
    Mat grad = Mat::Zero(policy.num_rows(), policy.num_tokens());
    policy.space().for_each_sequence([&](Index i, const Sequence& x) {
        policy.accumulate_grad_log_prob(x, row_probs, dist(i) * weights(i), grad);
    });
    return GradientEstimate{std::move(grad), objective_value, 0, 0.0};
}

}  // namespace

GradientEstimate grad_pure_rl(const TabularPolicy& policy, const Reward& reward,
                              const ObjectiveSpec& spec, Rng& rng) {
    if (spec.kind != ObjectiveKind::PureRL) {
        throw std::invalid_argument("spec kind is not pure-rl");
    }
    spec.validate();
    const Vec reward_values = reward.values(policy.space());

    if (spec.estimator.kind == EstimatorKind::Exact) {
        const double value = expected_value(policy.distribution(), reward_values);
        return exact_score_gradient(policy, reward_values, value);
    }

    const Index n = spec.estimator.batch_size;
    std::vector<Sequence> batch;
    batch.reserve(static_cast<std::size_t>(n));
    Vec r(n);
    ScoreBatch acc(policy);
    for (Index b = 0; b < n; ++b) {
        batch.push_back(policy.sample(rng, acc.row_probs));
        r(b) = reward_values(policy.space().index_of(batch.back()));
    }
    const double baseline =
        spec.estimator.baseline == BaselineKind::BatchMean ? r.mean() : 0.0;
    for (Index b = 0; b < n; ++b) {
        acc.add(batch[static_cast<std::size_t>(b)], r(b) - baseline);
    }
    return GradientEstimate{acc.mean(), r.mean(), n, acc.variance_norm()};
}

GradientEstimate grad_klrl(const TabularPolicy& policy, const TabularPolicy& prior,
                           const Reward& reward, const ObjectiveSpec& spec,
                           Rng& rng) {
    if (spec.kind != ObjectiveKind::KLRL) {
        throw std::invalid_argument("spec kind is not klrl");
    }
    spec.validate();
    if (!policy.same_space(prior)) {
        throw std::invalid_argument("policy and prior live on different spaces");
    }
    const Vec reward_values = reward.values(policy.space());

    if (spec.estimator.kind == EstimatorKind::Exact) {
        const Vec lp = policy.log_distribution();
        const Vec lp0 = prior.log_distribution();
        // Reshaped reward per sequence; its expectation is the objective.
        const Vec reshaped =
            reward_values.array() + spec.beta * (lp0 - lp).array();
        const double value = expected_value(lp.array().exp(), reshaped);
        return exact_score_gradient(policy, reshaped, value);
    }

    const Index n = spec.estimator.batch_size;
    const Vec lp = policy.log_distribution();
    const Vec lp0 = prior.log_distribution();
    std::vector<Sequence> batch;
    batch.reserve(static_cast<std::size_t>(n));
    Vec r(n);
    ScoreBatch acc(policy);
    for (Index b = 0; b < n; ++b) {
        batch.push_back(policy.sample(rng, acc.row_probs));
        const Index i = policy.space().index_of(batch.back());
        r(b) = reward_values(i) + spec.beta * (lp0(i) - lp(i));
    }
    const double baseline =
        spec.estimator.baseline == BaselineKind::BatchMean ? r.mean() : 0.0;
    for (Index b = 0; b < n; ++b) {
        acc.add(batch[static_cast<std::size_t>(b)], r(b) - baseline);
    }
    return GradientEstimate{acc.mean(), r.mean(), n, acc.variance_norm()};
}

GradientEstimate grad_gdc(const TabularPolicy& policy,
                          const TargetDistribution& target,
                          const ObjectiveSpec& spec, Rng& rng) {
    if (spec.kind != ObjectiveKind::GDC) {
        throw std::invalid_argument("spec kind is not gdc");
    }
    spec.validate();
    if (!(policy.space() == target.space)) {
        throw std::invalid_argument("policy and target live on different spaces");
    }
    const Vec lp = policy.log_distribution();
    const double target_entropy = entropy(target.probs);

    if (spec.estimator.kind == EstimatorKind::Exact) {
        const Mat row_probs = policy.conditional_probs();
        Mat grad = Mat::Zero(policy.num_rows(), policy.num_tokens());
        policy.space().for_each_sequence([&](Index i, const Sequence& x) {
            if (target.probs(i) > 0.0) {
                policy.accumulate_grad_log_prob(x, row_probs, target.probs(i), grad);
            }
        });
        const double value = -kl_divergence(target.probs, lp.array().exp());
        return GradientEstimate{std::move(grad), value, 0, 0.0};
    }

    const Index n = spec.estimator.batch_size;
    std::vector<Sequence> batch;
    batch.reserve(static_cast<std::size_t>(n));
    Vec w(n);
    Vec log_policy(n);
    ScoreBatch acc(policy);
    for (Index b = 0; b < n; ++b) {
        batch.push_back(policy.sample(rng, acc.row_probs));
        const Index i = policy.space().index_of(batch.back());
        // Importance ratio target/pi, in log space; underflowed targets give 0.
        w(b) = target.probs(i) > 0.0
                   ? std::exp(std::log(target.probs(i)) - lp(i))
                   : 0.0;
        log_policy(b) = lp(i);
    }
    Vec weights;
    if (spec.gdc_weighting == GdcWeighting::ExactZ) {
        weights = w / static_cast<double>(n);
    } else {
        const double total = w.sum();
        weights = total > 0.0 ? Vec(w / total) : Vec(Vec::Zero(n));
    }
    for (Index b = 0; b < n; ++b) {
        acc.add(batch[static_cast<std::size_t>(b)],
                weights(b) * static_cast<double>(n));
    }
    // Batch estimate of -KL(target, pi) = E_target[log pi] + H(target).
    const double cross = weights.dot(log_policy);
    return GradientEstimate{acc.sum / static_cast<double>(n),
                            cross + target_entropy, n, acc.variance_norm()};
}

GradientEstimate grad_mle(const TabularPolicy& policy, const Dataset& data) {
    if (data.empty()) {
        throw std::invalid_argument("dataset is empty");
    }
    const Mat row_probs = policy.conditional_probs();
    const double n = static_cast<double>(data.size());
    Mat grad = Mat::Zero(policy.num_rows(), policy.num_tokens());
    double log_lik = 0.0;
    for (const Sequence& x : data) {
        policy.accumulate_grad_log_prob(x, row_probs, 1.0 / n, grad);
        log_lik += policy.log_prob(x) / n;
    }
    return GradientEstimate{std::move(grad), log_lik, 0, 0.0};
}

}  // namespace seqtune
