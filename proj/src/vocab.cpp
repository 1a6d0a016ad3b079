#include "lidkit/vocab.hpp"

#include <algorithm>

#include <json.hpp>

#include "lidkit/error.hpp"
#include "lidkit/utf8.hpp"

namespace lidkit {

CharVocab::CharVocab(std::vector<char32_t> chars, std::size_t min_freq)
    : chars_(std::move(chars)), min_freq_(min_freq) {
    index_.reserve(chars_.size());
    for (std::size_t i = 0; i < chars_.size(); ++i) {
        if (!index_.emplace(chars_[i], static_cast<TokenId>(i + 2)).second) {
            throw DataError("duplicate character in vocabulary");
        }
    }
}

CharVocab CharVocab::build(std::span<const LabeledText> train, std::size_t min_freq) {
    if (train.empty()) throw DataError("cannot build a vocabulary from an empty training set");
    if (min_freq == 0) throw UsageError("min_freq must be at least 1");
    std::unordered_map<char32_t, std::size_t> freq;
    for (const auto& r : train) {
        for (char32_t c : utf8::decode(r.text)) ++freq[c];
    }
    std::vector<std::pair<char32_t, std::size_t>> kept;
    for (const auto& [c, n] : freq) {
        if (n >= min_freq) kept.emplace_back(c, n);
    }
    if (kept.empty()) {
        throw DataError("no character occurs at least " + std::to_string(min_freq) + " times in the training set");
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<char32_t> chars;
    chars.reserve(kept.size());
    for (const auto& [c, n] : kept) chars.push_back(c);
    return CharVocab(std::move(chars), min_freq);
}

TokenId CharVocab::index_of(char32_t c) const {
    auto it = index_.find(c);
    return it == index_.end() ? kUnk : it->second;
}

char32_t CharVocab::char_at(TokenId id) const {
    if (id == kPad) return U'\0';
    if (id < 2 || static_cast<std::size_t>(id) >= table_size()) return utf8::kReplacement;
    return chars_[static_cast<std::size_t>(id) - 2];
}

Encoded CharVocab::encode(std::string_view text, std::size_t max_len) const {
    if (max_len == 0) throw UsageError("max_len must be at least 1");
    const auto cps = utf8::decode(text);
    Encoded out;
    if (cps.empty()) {
        out.ids = {kUnk};
        out.length = 1;
        return out;
    }
    const std::size_t n = std::min(cps.size(), max_len);
    out.ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.ids.push_back(index_of(cps[i]));
    out.length = n;
    return out;
}

std::string CharVocab::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id != kPad) utf8::append(out, char_at(id));
    }
    return out;
}

std::string CharVocab::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (char32_t c : chars_) {
        std::string s;
        utf8::append(s, c);
        j.push_back(s);
    }
    return j.dump();
}

}  // namespace lidkit
