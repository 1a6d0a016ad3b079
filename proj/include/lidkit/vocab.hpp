#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lidkit/corpus.hpp"

namespace lidkit {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr std::size_t kDefaultMaxLen = 280;

struct Encoded {
    std::vector<TokenId> ids;
    std::size_t length = 0;  // true length before any batch padding, == ids.size()
};

// Character vocabulary over Unicode scalar values. Index 0 is PAD, 1 is UNK, and
// real characters occupy [2, V + 2). Immutable once built.
class CharVocab {
public:
    CharVocab() = default;

    /// Characters must be distinct; they receive ids 2, 3, ... in the given order.
    CharVocab(std::vector<char32_t> chars, std::size_t min_freq);

    /// Keeps characters seen at least min_freq times (raw occurrences), ordered by
    /// descending frequency then ascending code point. Throws DataError on an empty
    /// corpus or when nothing survives the cutoff.
    static CharVocab build(std::span<const LabeledText> train, std::size_t min_freq);

    std::size_t size() const { return chars_.size(); }         // V
    std::size_t table_size() const { return chars_.size() + 2; }  // V + 2 embedding rows
    std::size_t min_freq() const { return min_freq_; }
    const std::vector<char32_t>& chars() const { return chars_; }

    TokenId index_of(char32_t c) const;
    char32_t char_at(TokenId id) const;  // PAD/UNK map to U+0000 / U+FFFD

    /// One id per scalar value, truncated to max_len; empty text encodes as [UNK].
    Encoded encode(std::string_view text, std::size_t max_len = kDefaultMaxLen) const;
    std::string decode(std::span<const TokenId> ids) const;

    /// JSON array of the vocabulary characters in id order (starting at id 2).
    std::string to_json() const;

    bool operator==(const CharVocab& other) const { return chars_ == other.chars_ && min_freq_ == other.min_freq_; }

private:
    std::vector<char32_t> chars_;
    std::unordered_map<char32_t, TokenId> index_;
    std::size_t min_freq_ = 1;
};

}  // namespace lidkit
