#include <gtest/gtest.h>

#include "lidkit/error.hpp"
#include "lidkit/vocab.hpp"

namespace lidkit {
namespace {

std::vector<LabeledText> corpus(std::initializer_list<const char*> texts) {
    std::vector<LabeledText> out;
    for (const char* t : texts) out.push_back({t, "xx", ""});
    return out;
}

TEST(CharVocab, FrequencyCutoffDropsRareCharacters) {
    const auto v = CharVocab::build(corpus({"aaaaa bbbbb c"}), 5);
    EXPECT_EQ(v.size(), 2u);
    EXPECT_EQ(v.table_size(), 4u);
    EXPECT_EQ(v.index_of(U'a'), 2);
    EXPECT_EQ(v.index_of(U'b'), 3);
    EXPECT_EQ(v.index_of(U' '), kUnk);
    EXPECT_EQ(v.index_of(U'c'), kUnk);
}

TEST(CharVocab, NoCutoffKeepsEverything) {
    const auto v = CharVocab::build(corpus({"ab"}), 1);
    EXPECT_EQ(v.size(), 2u);
}

TEST(CharVocab, OrderIsFrequencyThenCodePoint) {
    const auto v = CharVocab::build(corpus({"zzyxxx", "zy"}), 1);
    EXPECT_EQ(v.chars(), (std::vector<char32_t>{U'x', U'z', U'y'}));
    const auto again = CharVocab::build(corpus({"zzyxxx", "zy"}), 1);
    EXPECT_EQ(v, again);
}

TEST(CharVocab, DegenerateCorporaAreFatal) {
    EXPECT_THROW(CharVocab::build({}, 1), DataError);
    EXPECT_THROW(CharVocab::build(corpus({"abc"}), 2), DataError);
}

TEST(Encode, LookupUnknownAndTruncation) {
    const CharVocab v({U'a', U'b'}, 1);
    auto e = v.encode("ab");
    EXPECT_EQ(e.ids, (std::vector<TokenId>{2, 3}));
    EXPECT_EQ(e.length, 2u);
    e = v.encode("aζ");
    EXPECT_EQ(e.ids, (std::vector<TokenId>{2, kUnk}));
    const std::string long_text(300, 'a');
    e = v.encode(long_text, 280);
    EXPECT_EQ(e.ids.size(), 280u);
    EXPECT_EQ(e.length, 280u);
    e = v.encode("");
    EXPECT_EQ(e.ids, std::vector<TokenId>{kUnk});
    EXPECT_EQ(e.length, 1u);
}

TEST(Encode, NeverEmitsPadAndRoundTripsInVocabText) {
    const auto v = CharVocab::build(corpus({"héllo wörld ngữ"}), 1);
    for (const char* s : {"héllo", "wörld ngữ", "o", "ữ ữ"}) {
        const auto e = v.encode(s);
        for (TokenId id : e.ids) EXPECT_NE(id, kPad);
        EXPECT_EQ(v.decode(e.ids), s);
    }
    const auto e = v.encode("xyz\xff");
    EXPECT_EQ(e.ids.size(), 4u);
    for (TokenId id : e.ids) EXPECT_EQ(id, kUnk);
}

TEST(CharVocab, DuplicateCharactersRejectedAndJsonExport) {
    EXPECT_THROW(CharVocab({U'a', U'a'}, 1), DataError);
    const CharVocab v({U'a', U'"'}, 1);
    EXPECT_EQ(v.to_json(), "[\"a\",\"\\\"\"]");
}

}  // namespace
}  // namespace lidkit
