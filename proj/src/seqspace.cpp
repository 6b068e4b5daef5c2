#include "seqtune/seqspace.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace seqtune {

Vocab::Vocab(std::vector<std::string> syms, Index eos)
    : symbols(std::move(syms)), eos_index(eos) {
    if (symbols.size() < 2) {
        throw std::invalid_argument("vocab needs at least one content token plus EOS");
    }
    if (eos_index < 0 || eos_index >= size()) {
        throw std::invalid_argument("EOS index out of range");
    }
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols) {
        if (!seen.insert(s).second) {
            throw std::invalid_argument("duplicate vocab symbol: " + s);
        }
    }
}

namespace {

Index checked_mul(Index a, Index b) {
    Index out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("sequence space size overflows 64-bit range");
    }
    return out;
}

Index checked_add(Index a, Index b) {
    Index out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw std::overflow_error("sequence space size overflows 64-bit range");
    }
    return out;
}

}  // namespace

SequenceSpace::SequenceSpace(Vocab vocab, Index max_len)
    : vocab_(std::move(vocab)), max_len_(max_len) {
    if (vocab_.eos_index < 0) {
        throw std::invalid_argument("vocab not initialized");
    }
    if (max_len_ < 0) {
        throw std::invalid_argument("max_len must be >= 0");
    }
    const Index a = vocab_.content_size();
    offsets_.resize(static_cast<std::size_t>(max_len_) + 2);
    offsets_[0] = 0;
    Index pow = 1;  // a^k
    for (Index k = 0; k <= max_len_; ++k) {
        offsets_[static_cast<std::size_t>(k) + 1] =
            checked_add(offsets_[static_cast<std::size_t>(k)], pow);
        if (k < max_len_) pow = checked_mul(pow, a);
    }
    size_ = offsets_[static_cast<std::size_t>(max_len_) + 1];
    num_prefixes_ = offsets_[static_cast<std::size_t>(max_len_)];
}

Index SequenceSpace::length_at(Index index) const {
    if (index < 0 || index >= size_) {
        throw std::out_of_range("sequence index out of range");
    }
    // First k with offsets_[k+1] > index.
    const auto it = std::upper_bound(offsets_.begin() + 1, offsets_.end(), index);
    return static_cast<Index>(it - offsets_.begin()) - 1;
}

Sequence SequenceSpace::sequence_at(Index index) const {
    const Index k = length_at(index);
    const Index a = vocab_.content_size();
    Index rem = index - offsets_[static_cast<std::size_t>(k)];
    std::vector<Index> content(static_cast<std::size_t>(k));
    for (Index i = k - 1; i >= 0; --i) {
        content[static_cast<std::size_t>(i)] = vocab_.vocab_index_of_rank(rem % a);
        rem /= a;
    }
    return Sequence(std::move(content));
}

void SequenceSpace::check_sequence(const Sequence& x) const {
    if (x.length() > max_len_) {
        throw std::out_of_range("sequence exceeds max_len");
    }
    for (Index v : x.content()) {
        if (v < 0 || v >= vocab_.size()) {
            throw std::out_of_range("content token out of vocab range");
        }
        if (v == vocab_.eos_index) {
            throw std::invalid_argument("content token equals EOS");
        }
    }
}

Index SequenceSpace::index_of(const Sequence& x) const {
    check_sequence(x);
    const Index a = vocab_.content_size();
    Index digits = 0;
    for (Index v : x.content()) {
        digits = digits * a + vocab_.rank_of(v);
    }
    return offsets_[static_cast<std::size_t>(x.length())] + digits;
}

void SequenceSpace::for_each_sequence(
    const std::function<void(Index, const Sequence&)>& fn) const {
    for (Index i = 0; i < size_; ++i) {
        fn(i, sequence_at(i));
    }
}

std::vector<Sequence> SequenceSpace::enumerate() const {
    std::vector<Sequence> out;
    out.reserve(static_cast<std::size_t>(size_));
    for_each_sequence([&](Index, const Sequence& x) { out.push_back(x); });
    return out;
}

std::vector<Sequence> SequenceSpace::prefixes() const {
    std::vector<Sequence> out;
    out.reserve(static_cast<std::size_t>(num_prefixes_));
    for (Index i = 0; i < num_prefixes_; ++i) {
        out.push_back(sequence_at(i));
    }
    return out;
}

std::string SequenceSpace::render(const Sequence& x) const {
    std::string out;
    for (Index v : x.content()) {
        out += vocab_.symbols[static_cast<std::size_t>(v)];
    }
    return out;
}

Sequence SequenceSpace::parse(const std::string& text) const {
    Sequence out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        Index best = -1;
        std::size_t best_len = 0;
        for (Index v = 0; v < vocab_.size(); ++v) {
            if (v == vocab_.eos_index) continue;
            const std::string& sym = vocab_.symbols[static_cast<std::size_t>(v)];
            if (sym.size() > best_len && text.compare(pos, sym.size(), sym) == 0) {
                best = v;
                best_len = sym.size();
            }
        }
        if (best < 0) {
            throw std::invalid_argument("cannot tokenize \"" + text + "\" at offset " +
                                        std::to_string(pos));
        }
        out.push_back(best);
        pos += best_len;
    }
    check_sequence(out);
    return out;
}

}  // namespace seqtune
