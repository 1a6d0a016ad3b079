#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lidkit/corpus.hpp"
#include "lidkit/model.hpp"

namespace lidkit {

// Rows are gold languages, columns predictions.
struct ConfusionMatrix {
    std::vector<std::string> languages;
    std::vector<std::uint64_t> counts;  // L x L

    explicit ConfusionMatrix(std::vector<std::string> langs = {});

    std::size_t size() const { return languages.size(); }
    std::uint64_t& at(std::size_t gold, std::size_t pred) { return counts[gold * size() + pred]; }
    std::uint64_t at(std::size_t gold, std::size_t pred) const { return counts[gold * size() + pred]; }
    void add(std::size_t gold, std::size_t pred) { ++at(gold, pred); }
    void merge(const ConfusionMatrix& other);

    std::uint64_t total() const;
    std::uint64_t trace() const;
};

struct LanguageScore {
    std::string language;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct EvalResult {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    double micro_recall = 0.0;
    std::vector<LanguageScore> per_language;
    std::size_t zero_division = 0;  // per-class ratios with an empty denominator, set to 0

    std::size_t records = 0;
    double wall_seconds = 0.0;  // predict calls only
    double messages_per_second = 0.0;

    /// "Acc P R F1 Speed" with support-weighted P/R/F1.
    std::string summary_line() const;
    std::string to_json() const;
};

/// All derived metrics as pure functions of the matrix (timing fields left zero).
EvalResult score_confusion(const ConfusionMatrix& confusion);

/// Classifies test_set and scores it. Throws DataError listing any gold label the
/// model does not know.
EvalResult evaluate(const Classifier& model, std::span<const LabeledText> test_set, std::size_t batch_size,
                    std::size_t threads = 1);

struct BenchResult {
    std::size_t messages = 0;
    std::size_t batch_size = 0;
    std::vector<double> messages_per_second;  // one per repeat
    double median = 0.0, min = 0.0, max = 0.0;
    bool labels_stable = true;

    std::string to_json() const;
};

/// Times repeated batched inference over texts after warmup. repeats >= 3.
BenchResult bench_throughput(const Classifier& model, std::span<const std::string> texts, std::size_t batch_size,
                             std::size_t warmup_batches, std::size_t repeats, std::size_t threads = 1);

}  // namespace lidkit
