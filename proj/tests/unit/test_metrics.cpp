#include <gtest/gtest.h>

#include "lidkit/error.hpp"
#include "lidkit/metrics.hpp"
#include "support.hpp"

namespace lidkit {
namespace {

ConfusionMatrix matrix(std::vector<std::string> langs, std::initializer_list<std::uint64_t> counts) {
    ConfusionMatrix cm(std::move(langs));
    cm.counts.assign(counts);
    return cm;
}

TEST(ScoreConfusion, TwoByTwoWorkedExample) {
    const auto r = score_confusion(matrix({"en", "fr"}, {3, 1, 2, 4}));
    // Column sums 5 and 5, row sums 4 and 6.
    const double p0 = 3.0 / 5, r0 = 3.0 / 4, p1 = 4.0 / 5, r1 = 4.0 / 6;
    const double f0 = 2 * p0 * r0 / (p0 + r0), f1 = 2 * p1 * r1 / (p1 + r1);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.7);
    EXPECT_NEAR(r.macro_precision, 0.7, 1e-12);
    EXPECT_NEAR(r.macro_recall, 0.708333, 1e-6);
    EXPECT_NEAR(r.per_language[0].f1, 0.666667, 1e-6);
    EXPECT_NEAR(r.per_language[1].f1, 0.727273, 1e-6);
    EXPECT_NEAR(r.per_language[0].f1, f0, 1e-12);
    EXPECT_NEAR(r.per_language[1].f1, f1, 1e-12);
    EXPECT_NEAR(r.macro_f1, 0.696970, 1e-6);
    EXPECT_NEAR(r.weighted_precision, 0.72, 1e-12);
    EXPECT_NEAR(r.weighted_recall, 0.7, 1e-12);
    EXPECT_NEAR(r.weighted_f1, 0.4 * f0 + 0.6 * f1, 1e-12);
    EXPECT_NEAR(r.weighted_f1, 0.703030, 1e-6);
    EXPECT_EQ(r.per_language[0].support, 4u);
    EXPECT_EQ(r.per_language[1].support, 6u);
    EXPECT_EQ(r.zero_division, 0u);
    EXPECT_EQ(r.records, 10u);
}

TEST(ScoreConfusion, PerfectPredictionsScoreOne) {
    const auto r = score_confusion(matrix({"a", "b", "c"}, {5, 0, 0, 0, 2, 0, 0, 0, 9}));
    for (double v : {r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1, r.weighted_precision, r.weighted_recall,
                     r.weighted_f1, r.micro_recall})
        EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ScoreConfusion, ConstantPredictorOnBalancedClasses) {
    const auto r = score_confusion(matrix({"a", "b", "c", "d"}, {5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 0}));
    EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
    EXPECT_DOUBLE_EQ(r.macro_recall, 0.25);
    EXPECT_DOUBLE_EQ(r.per_language[0].precision, 0.25);
    EXPECT_DOUBLE_EQ(r.per_language[0].recall, 1.0);
    EXPECT_DOUBLE_EQ(r.per_language[1].precision, 0.0);
    // Three empty precision denominators plus three P+R=0 F1 scores.
    EXPECT_EQ(r.zero_division, 6u);
}

TEST(ScoreConfusion, MicroRecallEqualsAccuracyAndWeightedRecallToo) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t L = 2 + rng.below(5);
        std::vector<std::string> langs;
        for (std::size_t l = 0; l < L; ++l) langs.push_back(std::string(1, char('a' + l)));
        ConfusionMatrix cm(langs);
        for (auto& c : cm.counts) c = rng.below(20);
        cm.at(0, 0) += 1;
        const auto r = score_confusion(cm);
        EXPECT_NEAR(r.micro_recall, r.accuracy, 1e-12);
        EXPECT_NEAR(r.weighted_recall, r.accuracy, 1e-12);
        for (double v : {r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1, r.weighted_f1}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        for (const auto& s : r.per_language) {
            EXPECT_LE(s.f1, std::max(s.precision, s.recall) + 1e-12);
            EXPECT_GE(s.f1, std::min(s.precision, s.recall) - 1e-12);
        }
    }
}

TEST(ScoreConfusion, EmptyMatrix) {
    const auto r = score_confusion(ConfusionMatrix({"a", "b"}));
    EXPECT_EQ(r.records, 0u);
    EXPECT_EQ(r.accuracy, 0.0);
}

TEST(ConfusionMatrix, MergeAddsCounts) {
    auto a = matrix({"x", "y"}, {1, 2, 3, 4});
    a.merge(matrix({"x", "y"}, {1, 1, 1, 1}));
    EXPECT_EQ(a.counts, (std::vector<std::uint64_t>{2, 3, 4, 5}));
    EXPECT_EQ(a.total(), 14u);
    EXPECT_EQ(a.trace(), 7u);
}

// Zero weights give uniform probabilities, so argmax always picks the first language.
Classifier constant_classifier() {
    Classifier c;
    c.vocab = CharVocab({U'a', U'b', U'c'}, 1);
    c.languages = {"de", "en", "es", "fr"};
    c.hp.num_languages = 4;
    c.params = ModelParams<float>::zeros(c.hp, c.vocab.table_size());
    return c;
}

TEST(Evaluate, ConstantClassifierScoresChance) {
    const auto model = constant_classifier();
    std::vector<LabeledText> test;
    for (const auto& l : model.languages) {
        for (int i = 0; i < 3; ++i) test.push_back({"abc" + std::to_string(i), l, ""});
    }
    const auto r = evaluate(model, test, 5);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
    EXPECT_EQ(r.confusion.at(2, 0), 3u);
    EXPECT_EQ(r.records, 12u);
    EXPECT_GT(r.messages_per_second, 0.0);
    EXPECT_NE(r.summary_line().find("Acc 0.2500"), std::string::npos);
    EXPECT_NE(r.to_json().find("\"accuracy\""), std::string::npos);
}

TEST(Evaluate, UnknownGoldLabelIsFatal) {
    const auto model = constant_classifier();
    const std::vector<LabeledText> test{{"abc", "en", ""}, {"abc", "vi", ""}};
    try {
        evaluate(model, test, 8);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("vi"), std::string::npos);
    }
}

TEST(Bench, RepeatsAndStableLabels) {
    const auto model = constant_classifier();
    const auto texts = testing::random_texts(40, 50, 2);
    const auto r = bench_throughput(model, texts, 16, 1, 3);
    EXPECT_EQ(r.messages_per_second.size(), 3u);
    EXPECT_TRUE(r.labels_stable);
    EXPECT_LE(r.min, r.median);
    EXPECT_LE(r.median, r.max);
    EXPECT_GT(r.min, 0.0);
    EXPECT_THROW(bench_throughput(model, texts, 16, 1, 2), UsageError);
    EXPECT_THROW(bench_throughput(model, {}, 16, 1, 3), UsageError);
}

}  // namespace
}  // namespace lidkit
