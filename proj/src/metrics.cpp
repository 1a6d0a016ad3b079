#include "lidkit/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "lidkit/error.hpp"

namespace lidkit {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> langs)
    : languages(std::move(langs)), counts(languages.size() * languages.size(), 0) {}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.languages != languages) throw UsageError("cannot merge confusion matrices over different languages");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += at(i, i);
    return n;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, std::size_t& zero_division) {
    if (den == 0) {
        ++zero_division;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalResult score_confusion(const ConfusionMatrix& cm) {
    EvalResult r;
    r.confusion = cm;
    const std::size_t L = cm.size();
    const std::uint64_t total = cm.total();
    r.records = total;
    if (total == 0 || L == 0) return r;
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    std::uint64_t tp_sum = 0, support_sum = 0;
    for (std::size_t l = 0; l < L; ++l) {
        std::uint64_t predicted = 0, support = 0;
        for (std::size_t k = 0; k < L; ++k) {
            predicted += cm.at(k, l);
            support += cm.at(l, k);
        }
        LanguageScore s;
        s.language = cm.languages[l];
        s.support = support;
        s.precision = ratio(cm.at(l, l), predicted, r.zero_division);
        s.recall = ratio(cm.at(l, l), support, r.zero_division);
        if (s.precision + s.recall > 0.0) {
            s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        } else {
            ++r.zero_division;
        }
        const double w = static_cast<double>(support) / static_cast<double>(total);
        r.macro_precision += s.precision / static_cast<double>(L);
        r.macro_recall += s.recall / static_cast<double>(L);
        r.macro_f1 += s.f1 / static_cast<double>(L);
        r.weighted_precision += w * s.precision;
        r.weighted_recall += w * s.recall;
        r.weighted_f1 += w * s.f1;
        tp_sum += cm.at(l, l);
        support_sum += support;
        r.per_language.push_back(s);
    }
    r.micro_recall = static_cast<double>(tp_sum) / static_cast<double>(support_sum);
    return r;
}

EvalResult evaluate(const Classifier& model, std::span<const LabeledText> test_set, std::size_t batch_size,
                    std::size_t threads) {
    const auto gold = label_indices(test_set, model.languages);
    std::vector<std::string> texts;
    texts.reserve(test_set.size());
    for (const auto& r : test_set) texts.push_back(r.text);

    PredictOptions opts;
    opts.batch_size = batch_size;
    opts.threads = threads;
    const auto start = std::chrono::steady_clock::now();
    const auto preds = model.predict(texts, opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ConfusionMatrix cm(model.languages);
    for (std::size_t i = 0; i < preds.size(); ++i) cm.add(gold[i], preds[i].label);
    auto r = score_confusion(cm);
    r.wall_seconds = seconds;
    r.messages_per_second = seconds > 0.0 ? static_cast<double>(preds.size()) / seconds : 0.0;
    return r;
}

std::string EvalResult::summary_line() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Acc %.4f  P %.4f  R %.4f  F1 %.4f  Speed %.0f msg/s", accuracy,
                  weighted_precision, weighted_recall, weighted_f1, messages_per_second);
    return buf;
}

std::string EvalResult::to_json() const {
    nlohmann::ordered_json j;
    j["records"] = records;
    j["accuracy"] = accuracy;
    j["weighted"] = {{"precision", weighted_precision}, {"recall", weighted_recall}, {"f1", weighted_f1}};
    j["macro"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
    j["micro_recall"] = micro_recall;
    j["zero_division"] = zero_division;
    j["wall_seconds"] = wall_seconds;
    j["messages_per_second"] = messages_per_second;
    auto& per = j["per_language"] = nlohmann::ordered_json::array();
    for (const auto& s : per_language) {
        per.push_back({{"language", s.language},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support}});
    }
    j["confusion"] = {{"languages", confusion.languages}, {"counts", nlohmann::ordered_json::array()}};
    for (std::size_t g = 0; g < confusion.size(); ++g) {
        std::vector<std::uint64_t> row(confusion.counts.begin() + static_cast<std::ptrdiff_t>(g * confusion.size()),
                                       confusion.counts.begin() +
                                           static_cast<std::ptrdiff_t>((g + 1) * confusion.size()));
        j["confusion"]["counts"].push_back(row);
    }
    return j.dump(2) + "\n";
}

std::string BenchResult::to_json() const {
    nlohmann::ordered_json j;
    j["messages"] = messages;
    j["batch_size"] = batch_size;
    j["messages_per_second"] = messages_per_second;
    j["median"] = median;
    j["min"] = min;
    j["max"] = max;
    j["labels_stable"] = labels_stable;
    return j.dump(2) + "\n";
}

BenchResult bench_throughput(const Classifier& model, std::span<const std::string> texts, std::size_t batch_size,
                             std::size_t warmup_batches, std::size_t repeats, std::size_t threads) {
    if (texts.empty()) throw UsageError("bench needs at least one text");
    if (repeats < 3) throw UsageError("bench needs at least 3 repeats");
    PredictOptions opts;
    opts.batch_size = batch_size;
    opts.threads = threads;

    const std::size_t warm = std::min(texts.size(), warmup_batches * batch_size);
    if (warm > 0) model.predict(texts.first(warm), opts);

    BenchResult r;
    r.messages = texts.size();
    r.batch_size = batch_size;
    std::vector<std::size_t> first_labels;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        const auto preds = model.predict(texts, opts);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.messages_per_second.push_back(static_cast<double>(texts.size()) / std::max(seconds, 1e-12));
        std::vector<std::size_t> labels;
        labels.reserve(preds.size());
        for (const auto& p : preds) labels.push_back(p.label);
        if (rep == 0) {
            first_labels = std::move(labels);
        } else if (labels != first_labels) {
            r.labels_stable = false;
        }
    }
    auto sorted = r.messages_per_second;
    std::sort(sorted.begin(), sorted.end());
    r.min = sorted.front();
    r.max = sorted.back();
    const std::size_t n = sorted.size();
    r.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return r;
}

}  // namespace lidkit
