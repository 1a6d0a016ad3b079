#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lidkit/model.hpp"

namespace lidkit {

struct AttentionEntry {
    std::string text;
    std::string label;
    double probability = 0.0;
    std::vector<std::string> chars;  // one UTF-8 character per encoded position
    std::vector<double> weights;     // aligned with chars
};

enum class DumpFormat { kTsv, kHtml };

DumpFormat parse_dump_format(std::string_view name);

/// Per-character attention weights for each text. Throws UsageError for a
/// max-pool model, which has no attention weights.
std::vector<AttentionEntry> attention_dump(const Classifier& model, std::span<const std::string> texts,
                                           std::size_t batch_size = 256);

/// Columns: index, label, probability, position, character, weight. Tab, newline
/// and backslash inside the character column are escaped.
void write_attention_tsv(std::ostream& out, std::span<const AttentionEntry> entries);

/// Self-contained page; each character's background intensity is its weight
/// relative to the largest weight in the same text.
void write_attention_html(std::ostream& out, std::span<const AttentionEntry> entries);

}  // namespace lidkit
