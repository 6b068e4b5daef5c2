#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seqtune/policy.hpp"
#include "seqtune/seqspace.hpp"

namespace seqtune {

/// Pure bounded map from sequences to scalars. Values depend only on the
/// sequence, so repeated evaluation is bit-identical.
class Reward {
public:
    double operator()(const SequenceSpace& space, const Sequence& x) const;

    /// r(x) for every sequence, in index order.
    Vec values(const SequenceSpace& space) const;

    static Reward token_count(std::string token, double weight);
    static Reward contains_substring(std::string substring, double bonus);
    /// -per_token * len(x).
    static Reward length_penalty(double per_token);
    /// Explicit value per sequence index.
    static Reward table(std::vector<double> values);
    static Reward composite(std::vector<std::pair<double, Reward>> terms);

private:
    struct Node;
    Reward() = default;
    std::shared_ptr<const Node> node_;
};

/// Indices of all sequences attaining the maximal reward. Values within
/// 1e-12 of the maximum count as tied, which keeps the optimum set stable
/// under float noise.
std::vector<Index> argmax_set(const Reward& reward, const SequenceSpace& space);

/// Total policy mass on the reward's argmax set.
double argmax_mass(const Vec& dist, const std::vector<Index>& argmax);

/// Reward shifted so its maximum over the space is exactly zero, making
/// exp(r(x) - shift) a probability in (0, 1]: the chance that a sequence is
/// judged optimal.
class OptimalityModel {
public:
    OptimalityModel(const Reward& base, const SequenceSpace& space);

    double shift() const { return shift_; }
    /// r(x) - shift, always <= 0.
    double shifted_reward(const SequenceSpace& space, const Sequence& x) const;
    Vec shifted_values(const SequenceSpace& space) const;
    /// exp(shifted reward), in (0, 1].
    double to_optimality_prob(const SequenceSpace& space, const Sequence& x) const;

private:
    Reward base_;
    double shift_;
};

}  // namespace seqtune
