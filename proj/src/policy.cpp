#include "seqtune/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace seqtune {

namespace {

// Logit floor used when representing a conditional probability of zero.
// exp(-700) ~ 1e-304: far below every tolerance in use, still a normal double.
constexpr double kLogFloor = -700.0;

Vec log_softmax_row(const Eigen::Ref<const Vec>& row) {
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    return row.array() - lse;
}

}  // namespace

TabularPolicy::TabularPolicy(SequenceSpace space)
    : space_(std::move(space)),
      logits_(Mat::Zero(space_.num_prefixes(), space_.vocab().size())) {}

TabularPolicy::TabularPolicy(SequenceSpace space, Mat logits)
    : space_(std::move(space)), logits_(std::move(logits)) {
    if (logits_.rows() != space_.num_prefixes() ||
        logits_.cols() != space_.vocab().size()) {
        throw std::invalid_argument("logit table shape does not match space");
    }
    if (!logits_.allFinite()) {
        throw std::invalid_argument("logits must be finite");
    }
}

double TabularPolicy::log_prob(const Sequence& x) const {
    space_.index_of(x);  // validates membership
    double lp = 0.0;
    Index row = 0;
    for (Index i = 0; i < x.length(); ++i) {
        const Vec lsm = log_softmax_row(logits_.row(row).transpose());
        lp += lsm(x.token(i));
        row = space_.child_index(row, i, space_.vocab().rank_of(x.token(i)));
    }
    if (x.length() < space_.max_len()) {
        const Vec lsm = log_softmax_row(logits_.row(row).transpose());
        lp += lsm(space_.vocab().eos_index);
    }
    // EOS is forced at depth max_len and contributes 0.
    return lp;
}

Mat TabularPolicy::log_conditional_probs() const {
    Mat out(logits_.rows(), logits_.cols());
    for (Index r = 0; r < logits_.rows(); ++r) {
        out.row(r) = log_softmax_row(logits_.row(r).transpose()).transpose();
    }
    return out;
}

Mat TabularPolicy::conditional_probs() const {
    return log_conditional_probs().array().exp();
}

Vec TabularPolicy::log_distribution() const {
    const Index n = space_.size();
    Vec log_dist(n);
    if (space_.max_len() == 0) {
        log_dist(0) = 0.0;  // one-point space
        return log_dist;
    }
    const Mat lsm = log_conditional_probs();
    const Index p = space_.num_prefixes();
    const Index a = space_.vocab().content_size();
    const Index eos = space_.vocab().eos_index;
    // Log-probability of each prefix's content tokens, filled in index order;
    // a child's index always exceeds its parent's.
    Vec prefix_lp = Vec::Zero(p);
    for (Index i = 0; i < p; ++i) {
        const Index k = space_.length_at(i);
        log_dist(i) = prefix_lp(i) + lsm(i, eos);
        for (Index rank = 0; rank < a; ++rank) {
            const Index child = space_.child_index(i, k, rank);
            const double lp =
                prefix_lp(i) + lsm(i, space_.vocab().vocab_index_of_rank(rank));
            if (child < p) {
                prefix_lp(child) = lp;
            } else {
                log_dist(child) = lp;  // depth max_len, EOS forced
            }
        }
    }
    return log_dist;
}

Vec TabularPolicy::distribution() const {
    return log_distribution().array().exp();
}

Sequence TabularPolicy::sample(Rng& rng) const {
    return sample(rng, conditional_probs());
}

Sequence TabularPolicy::sample(Rng& rng, const Mat& row_probs) const {
    Sequence x;
    Index row = 0;
    for (Index depth = 0; depth < space_.max_len(); ++depth) {
        const Vec probs = row_probs.row(row).transpose();
        const Index v = rng.categorical(probs.data(), static_cast<int>(probs.size()));
        if (v == space_.vocab().eos_index) return x;
        x.push_back(v);
        row = space_.child_index(row, depth, space_.vocab().rank_of(v));
    }
    return x;  // EOS forced at max depth
}

std::vector<DecisionStep> TabularPolicy::decision_path(const Sequence& x) const {
    std::vector<DecisionStep> steps;
    steps.reserve(static_cast<std::size_t>(x.length()) + 1);
    Index row = 0;
    for (Index i = 0; i < x.length(); ++i) {
        steps.push_back({row, x.token(i)});
        row = space_.child_index(row, i, space_.vocab().rank_of(x.token(i)));
    }
    if (x.length() < space_.max_len()) {
        steps.push_back({row, space_.vocab().eos_index});
    }
    return steps;
}

GradientTable TabularPolicy::grad_log_prob(const Sequence& x) const {
    GradientTable grad = Mat::Zero(logits_.rows(), logits_.cols());
    accumulate_grad_log_prob(x, conditional_probs(), 1.0, grad);
    return grad;
}

void TabularPolicy::accumulate_grad_log_prob(const Sequence& x, const Mat& row_probs,
                                             double scale, GradientTable& grad) const {
    // d log softmax[chosen] / d logit[t] = 1{t = chosen} - softmax[t]
    for (const DecisionStep& s : decision_path(x)) {
        grad.row(s.row) -= scale * row_probs.row(s.row);
        grad(s.row, s.token) += scale;
    }
}

TabularPolicy TabularPolicy::from_distribution(const SequenceSpace& space,
                                               const Vec& p) {
    if (p.size() != space.size()) {
        throw std::invalid_argument("probability vector length does not match space");
    }
    for (Index i = 0; i < p.size(); ++i) {
        if (!(p(i) >= 0.0)) {
            throw std::invalid_argument("probability vector has a negative entry");
        }
    }
    const double total = p.sum();
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("probability vector does not sum to 1");
    }

    // Subtree mass of every content string; children carry larger indices, so
    // one descending pass suffices.
    const Index np = space.num_prefixes();
    const Index a = space.vocab().content_size();
    Vec mass = p / total;
    for (Index i = np - 1; i >= 0; --i) {
        const Index k = space.length_at(i);
        for (Index rank = 0; rank < a; ++rank) {
            mass(i) += mass(space.child_index(i, k, rank));
        }
    }

    const auto log_cond = [](double num, double den) {
        if (num <= 0.0) return kLogFloor;
        const double v = std::log(num) - std::log(den);
        return v < kLogFloor ? kLogFloor : v;
    };

    Mat logits = Mat::Zero(np, space.vocab().size());
    for (Index i = 0; i < np; ++i) {
        if (mass(i) <= 0.0) continue;  // unreachable prefix: keep uniform row
        const Index k = space.length_at(i);
        logits(i, space.vocab().eos_index) = log_cond(p(i) / total, mass(i));
        for (Index rank = 0; rank < a; ++rank) {
            const Index child = space.child_index(i, k, rank);
            logits(i, space.vocab().vocab_index_of_rank(rank)) =
                log_cond(mass(child), mass(i));
        }
    }
    return TabularPolicy(space, std::move(logits));
}

TabularPolicy uniform_logits_prior(const SequenceSpace& space) {
    return TabularPolicy(space);
}

TabularPolicy gaussian_logits_prior(const SequenceSpace& space, double sigma,
                                    std::uint64_t seed) {
    if (sigma < 0.0) {
        throw std::invalid_argument("sigma must be >= 0");
    }
    Rng rng(seed);
    Mat logits(space.num_prefixes(), space.vocab().size());
    for (Index r = 0; r < logits.rows(); ++r) {
        for (Index c = 0; c < logits.cols(); ++c) {
            logits(r, c) = sigma * rng.normal();
        }
    }
    return TabularPolicy(space, std::move(logits));
}

}  // namespace seqtune
