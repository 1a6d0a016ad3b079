#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "lidkit/attention_dump.hpp"
#include "lidkit/error.hpp"
#include "lidkit/utf8.hpp"
#include "support.hpp"

namespace lidkit {
namespace {

TEST(AttentionDump, WeightsAlignWithCharactersAndSumToOne) {
    const auto model = testing::random_classifier(Head::kAttention);
    auto texts = testing::random_texts(60, 200, 5);
    texts.push_back("");
    const auto entries = attention_dump(model, texts, 7);
    ASSERT_EQ(entries.size(), texts.size());
    const auto preds = model.predict(texts);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        ASSERT_EQ(e.chars.size(), e.weights.size());
        EXPECT_EQ(e.chars.size(), std::max<std::size_t>(1, utf8::length(texts[i])));
        EXPECT_NEAR(std::accumulate(e.weights.begin(), e.weights.end(), 0.0), 1.0, 1e-6);
        for (double w : e.weights) EXPECT_GE(w, 0.0);
        EXPECT_EQ(e.label, model.languages[preds[i].label]);
        EXPECT_DOUBLE_EQ(e.probability, preds[i].probs[preds[i].label]);
    }
}

TEST(AttentionDump, SingleCharacterGetsAllWeight) {
    const auto model = testing::random_classifier(Head::kAttention);
    const std::vector<std::string> texts{"é"};
    const auto entries = attention_dump(model, texts);
    ASSERT_EQ(entries[0].weights.size(), 1u);
    EXPECT_DOUBLE_EQ(entries[0].weights[0], 1.0);
    EXPECT_EQ(entries[0].chars[0], "é");
}

TEST(AttentionDump, MaxPoolModelIsAUsageError) {
    const auto model = testing::random_classifier(Head::kMaxPool);
    const std::vector<std::string> texts{"abc"};
    EXPECT_THROW(attention_dump(model, texts), UsageError);
}

TEST(AttentionDump, TsvRowsAndEscaping) {
    AttentionEntry e{"a\tb", "en", 0.75, {"a", "\t", "\\"}, {0.5, 0.25, 0.25}};
    std::ostringstream out;
    write_attention_tsv(out, std::span(&e, 1));
    EXPECT_EQ(out.str(),
              "index\tlabel\tprobability\tposition\tchar\tweight\n"
              "0\ten\t0.750000\t0\ta\t0.500000\n"
              "0\ten\t0.750000\t1\t\\t\t0.250000\n"
              "0\ten\t0.750000\t2\t\\\\\t0.250000\n");
}

TEST(AttentionDump, HtmlIsSelfContainedAndEscaped) {
    AttentionEntry e{"<b>", "fr", 0.9, {"<", "b", ">"}, {0.2, 0.6, 0.2}};
    std::ostringstream out;
    write_attention_html(out, std::span(&e, 1));
    const auto html = out.str();
    EXPECT_EQ(html.rfind("<!DOCTYPE html>", 0), 0u);
    EXPECT_NE(html.find("&lt;"), std::string::npos);
    EXPECT_EQ(html.find("<b>"), std::string::npos);
    EXPECT_NE(html.find("rgba(214,39,40,1.000)"), std::string::npos);
    EXPECT_EQ(html.find("http"), std::string::npos);
    EXPECT_EQ(parse_dump_format("html"), DumpFormat::kHtml);
    EXPECT_THROW(parse_dump_format("pdf"), UsageError);
}

}  // namespace
}  // namespace lidkit
