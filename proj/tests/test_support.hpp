#pragma once

#include <functional>
#include <string>
#include <vector>

#include "seqtune/policy.hpp"
#include "seqtune/seqspace.hpp"

// Independent oracles for the unit and acceptance suites. Everything here is
// deliberately naive and separate from the library's index arithmetic so the
// two can disagree.

namespace seqtune::testing {

/// All content strings of length <= max_len over the given content alphabet,
/// shorter first, then lexicographic: produced by direct recursion on
/// rendered strings, no indexing involved.
inline std::vector<std::string> brute_force_strings(
    const std::vector<std::string>& content_symbols, int max_len) {
    std::vector<std::string> out;
    std::vector<std::string> layer{""};
    out.push_back("");
    for (int k = 1; k <= max_len; ++k) {
        std::vector<std::string> next;
        for (const std::string& s : layer) {
            for (const std::string& sym : content_symbols) {
                next.push_back(s + sym);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

/// Central finite difference of a scalar function of the logit table.
inline Mat finite_difference(const std::function<double(const TabularPolicy&)>& f,
                             const TabularPolicy& at, double step = 1e-6) {
    Mat grad(at.num_rows(), at.num_tokens());
    for (Index r = 0; r < at.num_rows(); ++r) {
        for (Index c = 0; c < at.num_tokens(); ++c) {
            TabularPolicy plus = at;
            TabularPolicy minus = at;
            plus.logits()(r, c) += step;
            minus.logits()(r, c) -= step;
            grad(r, c) = (f(plus) - f(minus)) / (2.0 * step);
        }
    }
    return grad;
}

/// Frobenius-relative disagreement between two gradient tables.
inline double relative_error(const Mat& a, const Mat& b) {
    const double denom = std::max(b.norm(), 1e-12);
    return (a - b).norm() / denom;
}

inline SequenceSpace make_space(const std::vector<std::string>& content_symbols,
                                Index max_len, const std::string& eos = "<eos>") {
    std::vector<std::string> symbols = content_symbols;
    symbols.push_back(eos);
    return SequenceSpace(
        Vocab(symbols, static_cast<Index>(symbols.size()) - 1), max_len);
}

/// The default desk instance used across the suites: vocab {a, b, EOS},
/// content length up to 3, 15 sequences.
inline SequenceSpace default_space() { return make_space({"a", "b"}, 3); }

}  // namespace seqtune::testing
