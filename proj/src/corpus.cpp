#include "lidkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "lidkit/error.hpp"
#include "lidkit/rng.hpp"
#include "lidkit/utf8.hpp"

namespace lidkit {

using nlohmann::json;

InputFormat parse_input_format(std::string_view name) {
    if (name == "jsonl") return InputFormat::kJsonl;
    if (name == "tsv") return InputFormat::kTsv;
    throw UsageError("unknown input format '" + std::string(name) + "' (expected jsonl or tsv)");
}

std::string normalize_lang_code(std::string_view code) {
    while (!code.empty() && std::isspace(static_cast<unsigned char>(code.front()))) code.remove_prefix(1);
    while (!code.empty() && std::isspace(static_cast<unsigned char>(code.back()))) code.remove_suffix(1);
    const auto cut = code.find_first_of("-_");
    if (cut != std::string_view::npos) code = code.substr(0, cut);
    std::string out(code);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

namespace {

const json* lookup(const json& root, std::string_view dotted) {
    const json* node = &root;
    while (true) {
        if (!node->is_object()) return nullptr;
        const auto dot = dotted.find('.');
        const auto key = std::string(dotted.substr(0, dot));
        auto it = node->find(key);
        if (it == node->end()) return nullptr;
        node = &*it;
        if (dot == std::string_view::npos) return node;
        dotted.remove_prefix(dot + 1);
    }
}

std::optional<std::string> scalar_string(const json* node) {
    if (node == nullptr) return std::nullopt;
    if (node->is_string()) return node->get<std::string>();
    if (node->is_number_integer()) return std::to_string(node->get<long long>());
    if (node->is_number_unsigned()) return std::to_string(node->get<unsigned long long>());
    return std::nullopt;
}

std::optional<RawRecord> finish(std::string id, std::string_view text, std::string_view detected,
                                std::string_view declared) {
    if (text.empty()) return std::nullopt;
    RawRecord r;
    r.id = std::move(id);
    r.text = utf8::sanitize(text);
    r.detected_lang = normalize_lang_code(detected);
    r.declared_lang = normalize_lang_code(declared);
    if (r.detected_lang.empty() || r.declared_lang.empty()) return std::nullopt;
    return r;
}

}  // namespace

RecordReader::RecordReader(const std::filesystem::path& path, InputFormat format, JsonlFields fields)
    : path_(path), in_(path, std::ios::binary), format_(format), fields_(std::move(fields)) {
    if (!in_) throw DataError("cannot open input file: " + path.string());
}

std::optional<RawRecord> RecordReader::parse_jsonl(std::string_view line) const {
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) return std::nullopt;
    auto text = scalar_string(lookup(obj, fields_.text));
    auto detected = scalar_string(lookup(obj, fields_.detected));
    auto declared = scalar_string(lookup(obj, fields_.declared));
    if (!text || !detected || !declared) return std::nullopt;
    auto id = scalar_string(lookup(obj, fields_.id)).value_or(std::to_string(lines_));
    return finish(std::move(id), *text, *detected, *declared);
}

std::optional<RawRecord> RecordReader::parse_tsv(std::string_view line) const {
    std::array<std::string_view, 3> cols;
    for (auto& col : cols) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) return std::nullopt;
        col = line.substr(0, tab);
        line.remove_prefix(tab + 1);
    }
    if (cols[0].empty()) return std::nullopt;
    return finish(std::string(cols[0]), line, cols[1], cols[2]);
}

std::optional<RawRecord> RecordReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lines_;
        auto rec = format_ == InputFormat::kJsonl ? parse_jsonl(line) : parse_tsv(line);
        if (rec) return rec;
        ++malformed_;
    }
    if (in_.bad()) throw DataError("read error on " + path_.string());
    if (lines_ > 0 && 2 * malformed_ > lines_) {
        std::ostringstream msg;
        msg << path_.string() << ": " << malformed_ << " of " << lines_
            << " lines are malformed; is --format "
            << (format_ == InputFormat::kJsonl ? "jsonl" : "tsv") << " correct?";
        throw DataError(msg.str());
    }
    return std::nullopt;
}

std::optional<LabeledText> AgreementFilter::operator()(const RawRecord& record) {
    if (record.detected_lang != record.declared_lang) {
        ++dropped_;
        return std::nullopt;
    }
    ++kept_;
    return LabeledText{record.text, record.detected_lang, record.id};
}

std::vector<LabeledText> agreement_filter(std::span<const RawRecord> records) {
    AgreementFilter filter;
    std::vector<LabeledText> out;
    for (const auto& r : records) {
        if (auto t = filter(r)) out.push_back(std::move(*t));
    }
    return out;
}

void VectorSource::for_each(const std::function<void(const LabeledText&)>& fn) {
    for (const auto& r : records_) fn(r);
}

FileSource::FileSource(std::filesystem::path path, InputFormat format, JsonlFields fields)
    : path_(std::move(path)), format_(format), fields_(std::move(fields)) {}

void FileSource::for_each(const std::function<void(const LabeledText&)>& fn) {
    RecordReader reader(path_, format_, fields_);
    AgreementFilter filter;
    while (auto raw = reader.next()) {
        if (auto t = filter(*raw)) fn(*t);
    }
    stats_ = {reader.lines(), reader.malformed(), filter.kept(), filter.dropped()};
}

void SplitSpec::validate() const {
    if (languages.empty()) throw UsageError("no languages given");
    if (per_lang_train == 0 || per_lang_valid == 0 || per_lang_test == 0)
        throw UsageError("train/valid/test counts must all be positive");
    if (min_chars == 0) throw UsageError("--min-chars must be at least 1");
    std::unordered_set<std::string> seen;
    for (const auto& l : languages) {
        if (l.empty() || !seen.insert(l).second) throw UsageError("duplicate or empty language code: '" + l + "'");
    }
    if (name.empty() || name.find('/') != std::string::npos) throw UsageError("invalid dataset name '" + name + "'");
}

std::string flatten_text(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string DatasetManifest::to_json() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["languages"] = spec.languages;
    j["per_language"] = {{"train", spec.per_lang_train}, {"valid", spec.per_lang_valid}, {"test", spec.per_lang_test}};
    j["min_chars"] = spec.min_chars;
    j["files"] = files;
    j["counts"] = counts;
    j["available"] = available;
    j["short_skipped"] = short_skipped;
    j["parameters"] = parameters;
    return j.dump(2) + "\n";
}

namespace {

// Floyd's algorithm: k distinct values from [0, n), O(k) memory. Returned sorted so
// the result is independent of hash-set iteration order.
std::vector<std::uint64_t> sample_without_replacement(Rng& rng, std::uint64_t n, std::uint64_t k) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(k * 2);
    for (std::uint64_t j = n - k; j < n; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    out.close();
    if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace

DatasetManifest build_balanced_splits(LabeledSource& source, const SplitSpec& spec,
                                      const std::filesystem::path& out_dir,
                                      const std::map<std::string, std::string>& parameters) {
    spec.validate();
    std::unordered_map<std::string, std::size_t> lang_index;
    for (std::size_t i = 0; i < spec.languages.size(); ++i) lang_index[spec.languages[i]] = i;
    const auto eligible = [&](const LabeledText& r) -> std::optional<std::size_t> {
        auto it = lang_index.find(r.label);
        if (it == lang_index.end()) return std::nullopt;
        if (utf8::length(r.text) < spec.min_chars) return std::nullopt;
        return it->second;
    };

    // Pass 1: eligible record counts per language.
    std::vector<std::uint64_t> available(spec.languages.size(), 0);
    std::size_t short_skipped = 0;
    source.for_each([&](const LabeledText& r) {
        if (auto li = eligible(r)) {
            ++available[*li];
        } else if (lang_index.contains(r.label)) {
            ++short_skipped;
        }
    });

    const std::size_t need = spec.per_lang_total();
    std::vector<std::string> deficient;
    for (std::size_t i = 0; i < spec.languages.size(); ++i) {
        if (available[i] < need) {
            deficient.push_back(spec.languages[i] + " (" + std::to_string(available[i]) + " available, " +
                                std::to_string(need) + " needed)");
        }
    }
    if (!deficient.empty()) {
        std::string msg = "insufficient records for:";
        for (const auto& d : deficient) msg += " " + d + ";";
        throw DataError(msg);
    }

    // Choose which ordinals (within each language's eligible stream) go where.
    Rng rng(spec.seed);
    std::vector<std::unordered_map<std::uint64_t, std::uint8_t>> assignment(spec.languages.size());
    for (std::size_t li = 0; li < spec.languages.size(); ++li) {
        auto picked = sample_without_replacement(rng, available[li], need);
        rng.shuffle(std::span(picked));
        auto& slot = assignment[li];
        slot.reserve(need * 2);
        for (std::size_t k = 0; k < picked.size(); ++k) {
            const std::uint8_t split = k < spec.per_lang_train ? 0 : (k < spec.per_lang_train + spec.per_lang_valid ? 1 : 2);
            slot.emplace(picked[k], split);
        }
    }

    // Pass 2: collect the chosen records.
    std::array<std::vector<LabeledText>, 3> splits;
    std::vector<std::uint64_t> ordinal(spec.languages.size(), 0);
    source.for_each([&](const LabeledText& r) {
        auto li = eligible(r);
        if (!li) return;
        const auto& slot = assignment[*li];
        auto it = slot.find(ordinal[*li]++);
        if (it != slot.end()) splits[it->second].push_back(r);
    });
    for (std::size_t li = 0; li < spec.languages.size(); ++li) {
        if (ordinal[li] != available[li]) throw DataError("input changed between passes for language " + spec.languages[li]);
    }

    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest;
    manifest.name = spec.name;
    manifest.seed = spec.seed;
    manifest.spec = spec;
    manifest.short_skipped = short_skipped;
    manifest.parameters = parameters;
    for (std::size_t li = 0; li < spec.languages.size(); ++li) manifest.available[spec.languages[li]] = available[li];

    for (std::size_t s = 0; s < splits.size(); ++s) {
        auto& records = splits[s];
        rng.shuffle(std::span(records));
        const std::string split(kSplitNames[s]);
        std::string tsv;
        std::string ids;
        auto& counts = manifest.counts[split];
        for (const auto& l : spec.languages) counts[l] = 0;
        for (const auto& r : records) {
            tsv += r.label;
            tsv += '\t';
            tsv += flatten_text(r.text);
            tsv += '\n';
            ids += flatten_text(r.id);
            ids += '\n';
            ++counts[r.label];
        }
        const auto tsv_path = out_dir / (spec.name + "." + split + ".tsv");
        const auto ids_path = out_dir / (spec.name + "." + split + ".ids");
        write_file(tsv_path, tsv);
        write_file(ids_path, ids);
        manifest.files[split] = {tsv_path.filename().string(), ids_path.filename().string()};
    }
    write_file(out_dir / (spec.name + ".manifest.json"), manifest.to_json());
    return manifest;
}

std::vector<LabeledText> read_split_tsv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open split file: " + path.string());
    std::vector<LabeledText> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'label<TAB>text'");
        }
        out.push_back({utf8::sanitize(std::string_view(line).substr(tab + 1)), line.substr(0, tab), {}});
    }
    return out;
}

std::vector<std::string> collect_languages(std::span<const LabeledText> records) {
    std::vector<std::string> out;
    for (const auto& r : records) out.push_back(r.label);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> label_indices(std::span<const LabeledText> records, std::span<const std::string> languages) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < languages.size(); ++i) index.emplace(languages[i], i);
    std::vector<std::size_t> out;
    out.reserve(records.size());
    std::vector<std::string> unknown;
    for (const auto& r : records) {
        const auto it = index.find(r.label);
        if (it != index.end()) {
            out.push_back(it->second);
        } else if (std::find(unknown.begin(), unknown.end(), r.label) == unknown.end()) {
            unknown.push_back(r.label);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "labels not known to the model:";
        for (const auto& u : unknown) msg += " " + u;
        throw DataError(msg);
    }
    return out;
}

}  // namespace lidkit
