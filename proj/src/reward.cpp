#include "seqtune/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

namespace seqtune {

namespace {

struct TokenCount {
    std::string token;
    double weight;
};
struct ContainsSubstring {
    std::string substring;
    double bonus;
};
struct LengthPenalty {
    double per_token;
};
struct Table {
    std::vector<double> values;
};
struct Composite {
    std::vector<std::pair<double, Reward>> terms;
};

}  // namespace

struct Reward::Node {
    std::variant<TokenCount, ContainsSubstring, LengthPenalty, Table, Composite> kind;
};

double Reward::operator()(const SequenceSpace& space, const Sequence& x) const {
    struct Eval {
        const SequenceSpace& space;
        const Sequence& x;

        double operator()(const TokenCount& k) const {
            Index count = 0;
            for (Index v : x.content()) {
                if (space.vocab().symbols[static_cast<std::size_t>(v)] == k.token) {
                    ++count;
                }
            }
            return k.weight * static_cast<double>(count);
        }
        double operator()(const ContainsSubstring& k) const {
            return space.render(x).find(k.substring) != std::string::npos ? k.bonus
                                                                          : 0.0;
        }
        double operator()(const LengthPenalty& k) const {
            return -k.per_token * static_cast<double>(x.length());
        }
        double operator()(const Table& k) const {
            const Index i = space.index_of(x);
            if (i >= static_cast<Index>(k.values.size())) {
                throw std::out_of_range("table reward has no value for index " +
                                        std::to_string(i));
            }
            return k.values[static_cast<std::size_t>(i)];
        }
        double operator()(const Composite& k) const {
            double sum = 0.0;
            for (const auto& [w, r] : k.terms) {
                sum += w * r(space, x);
            }
            return sum;
        }
    };
    return std::visit(Eval{space, x}, node_->kind);
}

Vec Reward::values(const SequenceSpace& space) const {
    Vec out(space.size());
    space.for_each_sequence(
        [&](Index i, const Sequence& x) { out(i) = (*this)(space, x); });
    return out;
}

Reward Reward::token_count(std::string token, double weight) {
    Reward r;
    r.node_ = std::make_shared<const Node>(Node{TokenCount{std::move(token), weight}});
    return r;
}

Reward Reward::contains_substring(std::string substring, double bonus) {
    Reward r;
    r.node_ = std::make_shared<const Node>(
        Node{ContainsSubstring{std::move(substring), bonus}});
    return r;
}

Reward Reward::length_penalty(double per_token) {
    Reward r;
    r.node_ = std::make_shared<const Node>(Node{LengthPenalty{per_token}});
    return r;
}

Reward Reward::table(std::vector<double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("table reward values must be finite");
        }
    }
    Reward r;
    r.node_ = std::make_shared<const Node>(Node{Table{std::move(values)}});
    return r;
}

Reward Reward::composite(std::vector<std::pair<double, Reward>> terms) {
    Reward r;
    r.node_ = std::make_shared<const Node>(Node{Composite{std::move(terms)}});
    return r;
}

std::vector<Index> argmax_set(const Reward& reward, const SequenceSpace& space) {
    constexpr double kTieTol = 1e-12;
    const Vec vals = reward.values(space);
    const double max = vals.maxCoeff();
    std::vector<Index> out;
    for (Index i = 0; i < vals.size(); ++i) {
        if (vals(i) >= max - kTieTol) out.push_back(i);
    }
    return out;
}

double argmax_mass(const Vec& dist, const std::vector<Index>& argmax) {
    double mass = 0.0;
    for (Index i : argmax) mass += dist(i);
    return mass;
}

OptimalityModel::OptimalityModel(const Reward& base, const SequenceSpace& space)
    : base_(base), shift_(base.values(space).maxCoeff()) {}

double OptimalityModel::shifted_reward(const SequenceSpace& space,
                                       const Sequence& x) const {
    return base_(space, x) - shift_;
}

Vec OptimalityModel::shifted_values(const SequenceSpace& space) const {
    return base_.values(space).array() - shift_;
}

double OptimalityModel::to_optimality_prob(const SequenceSpace& space,
                                           const Sequence& x) const {
    return std::exp(shifted_reward(space, x));
}

}  // namespace seqtune
