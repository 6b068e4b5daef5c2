#pragma once

#include <Eigen/Dense>

#include "seqtune/rng.hpp"
#include "seqtune/seqspace.hpp"

namespace seqtune {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Partial derivatives with respect to every logit; same shape as the table.
using GradientTable = Mat;

/// One (prefix row, chosen vocab token) decision on the path through a
/// sequence. The forced EOS at depth max_len has no row and does not appear.
struct DecisionStep {
    Index row;
    Index token;
};

/// Autoregressive distribution over a SequenceSpace, parameterized by one
/// softmax logit row per decision prefix. Every distribution on the space is
/// representable (up to the finite-logit floor), which is what lets tests set
/// the policy equal to an arbitrary target.
///
/// All probability arithmetic runs in log space with log-sum-exp reductions
/// so near-collapsed policies stay finite.
class TabularPolicy {
public:
    explicit TabularPolicy(SequenceSpace space);
    TabularPolicy(SequenceSpace space, Mat logits);

    const SequenceSpace& space() const { return space_; }
    const Mat& logits() const { return logits_; }
    Mat& logits() { return logits_; }

    Index num_rows() const { return logits_.rows(); }
    Index num_tokens() const { return logits_.cols(); }

    double log_prob(const Sequence& x) const;

    /// log pi(x) for every sequence, in index order.
    Vec log_distribution() const;
    /// pi(x) for every sequence, in index order; sums to 1 within 1e-10.
    Vec distribution() const;

    /// Row-wise softmax of the logit table (one conditional per prefix).
    Mat conditional_probs() const;
    /// Row-wise log-softmax of the logit table.
    Mat log_conditional_probs() const;

    /// Ancestral sample.
    Sequence sample(Rng& rng) const;
    /// Ancestral sample using a precomputed conditional_probs() table.
    Sequence sample(Rng& rng, const Mat& row_probs) const;

    /// The (row, token) decisions taken when generating x.
    std::vector<DecisionStep> decision_path(const Sequence& x) const;

    GradientTable grad_log_prob(const Sequence& x) const;
    /// grad += scale * d log pi(x) / d logits, reusing a precomputed
    /// conditional_probs() table.
    void accumulate_grad_log_prob(const Sequence& x, const Mat& row_probs,
                                  double scale, GradientTable& grad) const;

    /// Policy whose induced distribution equals p (entrywise within 1e-10 for
    /// strictly positive p). Prefixes with zero marginal mass get uniform
    /// conditionals.
    static TabularPolicy from_distribution(const SequenceSpace& space, const Vec& p);

    bool same_space(const TabularPolicy& other) const { return space_ == other.space_; }

private:
    SequenceSpace space_;
    Mat logits_;  // num_prefixes x vocab size
};

/// Prior construction schemes. sigma = 0 reduces gaussian to uniform logits.
TabularPolicy uniform_logits_prior(const SequenceSpace& space);
TabularPolicy gaussian_logits_prior(const SequenceSpace& space, double sigma,
                                    std::uint64_t seed);

}  // namespace seqtune
