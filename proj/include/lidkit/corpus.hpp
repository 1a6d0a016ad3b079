#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lidkit {

struct RawRecord {
    std::string id;
    std::string text;
    std::string detected_lang;
    std::string declared_lang;
};

struct LabeledText {
    std::string text;
    std::string label;
    std::string id;  // provenance only; empty for records not read from a raw source
};

enum class InputFormat { kJsonl, kTsv };

InputFormat parse_input_format(std::string_view name);

// Dotted paths into each JSON object, e.g. "user.lang".
struct JsonlFields {
    std::string id = "id";
    std::string text = "text";
    std::string detected = "lang";
    std::string declared = "user.lang";
};

/// Lowercases, trims and drops region/script subtags: " en-GB " -> "en".
std::string normalize_lang_code(std::string_view code);

/// Streams RawRecords from a JSONL or 4-column TSV (id, detected, declared, text)
/// file in file order. Malformed lines are counted and skipped; when the stream
/// ends with more than half of its lines malformed, next() throws DataError since
/// that almost always means the wrong --format was chosen.
class RecordReader {
public:
    RecordReader(const std::filesystem::path& path, InputFormat format, JsonlFields fields = {});

    std::optional<RawRecord> next();

    std::size_t lines() const { return lines_; }
    std::size_t malformed() const { return malformed_; }

private:
    std::optional<RawRecord> parse_jsonl(std::string_view line) const;
    std::optional<RawRecord> parse_tsv(std::string_view line) const;

    std::filesystem::path path_;
    std::ifstream in_;
    InputFormat format_;
    JsonlFields fields_;
    std::size_t lines_ = 0;
    std::size_t malformed_ = 0;
};

/// Keeps a record iff its detected and declared languages agree; the agreed code
/// becomes the label.
class AgreementFilter {
public:
    std::optional<LabeledText> operator()(const RawRecord& record);

    std::size_t kept() const { return kept_; }
    std::size_t dropped() const { return dropped_; }

private:
    std::size_t kept_ = 0;
    std::size_t dropped_ = 0;
};

std::vector<LabeledText> agreement_filter(std::span<const RawRecord> records);

// A record stream that can be replayed; the split builder makes two passes.
class LabeledSource {
public:
    virtual ~LabeledSource() = default;
    virtual void for_each(const std::function<void(const LabeledText&)>& fn) = 0;
};

class VectorSource final : public LabeledSource {
public:
    explicit VectorSource(std::vector<LabeledText> records) : records_(std::move(records)) {}
    void for_each(const std::function<void(const LabeledText&)>& fn) override;

private:
    std::vector<LabeledText> records_;
};

struct IngestStats {
    std::size_t lines = 0;
    std::size_t malformed = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

// Raw file -> RecordReader -> AgreementFilter. Stats describe the latest pass.
class FileSource final : public LabeledSource {
public:
    FileSource(std::filesystem::path path, InputFormat format, JsonlFields fields = {});
    void for_each(const std::function<void(const LabeledText&)>& fn) override;
    const IngestStats& stats() const { return stats_; }

private:
    std::filesystem::path path_;
    InputFormat format_;
    JsonlFields fields_;
    IngestStats stats_;
};

struct SplitSpec {
    std::string name;  // prefix of the output files
    std::vector<std::string> languages;
    std::size_t per_lang_train = 0;
    std::size_t per_lang_valid = 0;
    std::size_t per_lang_test = 0;
    std::uint64_t seed = 0;
    std::size_t min_chars = 1;

    std::size_t per_lang_total() const { return per_lang_train + per_lang_valid + per_lang_test; }
    void validate() const;
};

inline constexpr std::array<std::string_view, 3> kSplitNames{"train", "valid", "test"};

struct DatasetManifest {
    std::string name;
    std::uint64_t seed = 0;
    SplitSpec spec;
    std::map<std::string, std::vector<std::string>> files;  // split -> file names, relative to the manifest
    std::map<std::string, std::map<std::string, std::size_t>> counts;  // split -> lang -> n
    std::map<std::string, std::size_t> available;  // lang -> eligible records
    std::size_t short_skipped = 0;                 // below min_chars
    std::map<std::string, std::string> parameters;  // free-form echo of creation flags

    std::string to_json() const;
};

/// Samples exactly the requested per-language counts (uniformly, without
/// replacement), assigns them disjointly to train/valid/test, shuffles each
/// split and writes `{name}.{split}.tsv` (label TAB text), `{name}.{split}.ids`
/// and `{name}.manifest.json` into out_dir. Memory is proportional to the output,
/// not the input. parameters are echoed into the manifest.
DatasetManifest build_balanced_splits(LabeledSource& source, const SplitSpec& spec,
                                      const std::filesystem::path& out_dir,
                                      const std::map<std::string, std::string>& parameters = {});

/// Replaces tabs, CR and LF with single spaces so a text fits one TSV field.
std::string flatten_text(std::string_view text);

/// Reads a split file written by build_balanced_splits (label TAB text per line).
std::vector<LabeledText> read_split_tsv(const std::filesystem::path& path);

/// Sorted distinct labels.
std::vector<std::string> collect_languages(std::span<const LabeledText> records);

/// Index of each record's label in languages. Throws DataError naming every label
/// that is not in the list.
std::vector<std::size_t> label_indices(std::span<const LabeledText> records, std::span<const std::string> languages);

}  // namespace lidkit
