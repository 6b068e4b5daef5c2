#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace seqtune {

using Index = std::int64_t;

/// Token alphabet. One symbol is the end-of-sequence marker; the remaining
/// symbols are content tokens.
struct Vocab {
    std::vector<std::string> symbols;
    Index eos_index = -1;

    Vocab() = default;
    Vocab(std::vector<std::string> syms, Index eos);

    Index size() const { return static_cast<Index>(symbols.size()); }
    Index content_size() const { return size() - 1; }

    /// Position of a content token among the non-EOS symbols, in vocab order.
    Index rank_of(Index vocab_index) const {
        return vocab_index < eos_index ? vocab_index : vocab_index - 1;
    }
    Index vocab_index_of_rank(Index rank) const {
        return rank < eos_index ? rank : rank + 1;
    }

    bool operator==(const Vocab&) const = default;
};

/// A sequence is its content tokens (vocab indices, never EOS); the
/// terminating EOS is implicit.
class Sequence {
public:
    Sequence() = default;
    explicit Sequence(std::vector<Index> content) : content_(std::move(content)) {}

    Index length() const { return static_cast<Index>(content_.size()); }
    bool empty() const { return content_.empty(); }
    const std::vector<Index>& content() const { return content_; }
    Index token(Index i) const { return content_[static_cast<std::size_t>(i)]; }

    void push_back(Index vocab_index) { content_.push_back(vocab_index); }
    Sequence prefix(Index len) const {
        return Sequence(std::vector<Index>(content_.begin(), content_.begin() + len));
    }

    bool operator==(const Sequence&) const = default;

private:
    std::vector<Index> content_;
};

/// All EOS-terminated sequences with content length <= max_len, with a
/// total order (shorter first, then lexicographic by content indices) and an
/// index bijection onto [0, size()).
///
/// Decision prefixes are the content strings of length < max_len; each owns
/// one conditional distribution over the full vocabulary. A prefix's index
/// coincides with its index as a sequence, so prefixes occupy [0, num_prefixes()).
class SequenceSpace {
public:
    SequenceSpace(Vocab vocab, Index max_len);

    const Vocab& vocab() const { return vocab_; }
    Index max_len() const { return max_len_; }

    Index size() const { return size_; }
    Index num_prefixes() const { return num_prefixes_; }

    Sequence sequence_at(Index index) const;
    Index index_of(const Sequence& x) const;

    /// Index of the child content string obtained by appending the content
    /// token of the given rank. Valid while parent length < max_len.
    Index child_index(Index parent_index, Index parent_len, Index rank) const {
        return offsets_[static_cast<std::size_t>(parent_len) + 1] +
               (parent_index - offsets_[static_cast<std::size_t>(parent_len)]) *
                   vocab_.content_size() +
               rank;
    }

    /// Content length of the sequence at the given index.
    Index length_at(Index index) const;

    void for_each_sequence(const std::function<void(Index, const Sequence&)>& fn) const;
    std::vector<Sequence> enumerate() const;
    std::vector<Sequence> prefixes() const;

    /// Content tokens rendered as one string, EOS omitted.
    std::string render(const Sequence& x) const;
    /// Inverse of render; greedy longest-symbol match. Throws if the string
    /// cannot be tokenized.
    Sequence parse(const std::string& text) const;

    bool operator==(const SequenceSpace&) const = default;

private:
    void check_sequence(const Sequence& x) const;

    Vocab vocab_;
    Index max_len_ = 0;
    // offsets_[k] = number of sequences shorter than k; offsets_[max_len+1] = size.
    std::vector<Index> offsets_;
    Index size_ = 0;
    Index num_prefixes_ = 0;
};

}  // namespace seqtune
