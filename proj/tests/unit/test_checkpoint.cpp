#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "lidkit/checkpoint.hpp"
#include "lidkit/error.hpp"
#include "support.hpp"

namespace lidkit {
namespace {

namespace fs = std::filesystem;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

void expect_same_predictions(const Classifier& a, const Classifier& b, std::size_t n) {
    const auto texts = testing::random_texts(n, 120, 77);
    const auto pa = a.predict(texts);
    const auto pb = b.predict(texts);
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(pa[i].label, pb[i].label);
        EXPECT_EQ(pa[i].probs, pb[i].probs);
    }
}

class CheckpointRoundTrip : public ::testing::TestWithParam<Head> {};

TEST_P(CheckpointRoundTrip, BitExactParametersAndPredictions) {
    const auto model = testing::random_classifier(GetParam());
    TrainConfig cfg;
    cfg.lr = 0.002;
    cfg.seed = 99;
    const auto dir = testing::temp_dir("ckpt_roundtrip");
    save_checkpoint(model, cfg, dir / "m.ckpt");
    const auto loaded = load_checkpoint(dir / "m.ckpt");
    EXPECT_EQ(loaded.model.params, model.params);
    EXPECT_EQ(loaded.model.vocab, model.vocab);
    EXPECT_EQ(loaded.model.languages, model.languages);
    EXPECT_EQ(loaded.model.hp.head, model.hp.head);
    EXPECT_EQ(loaded.model.hp.conv_filters, model.hp.conv_filters);
    EXPECT_EQ(loaded.config.lr, 0.002);
    EXPECT_EQ(loaded.config.seed, 99u);
    expect_same_predictions(model, loaded.model, 100);
    EXPECT_EQ(serialize_checkpoint(loaded.model, loaded.config), serialize_checkpoint(model, cfg));
}

INSTANTIATE_TEST_SUITE_P(Heads, CheckpointRoundTrip, ::testing::Values(Head::kMaxPool, Head::kAttention),
                         [](const auto& info) { return std::string(head_name(info.param)); });

class CheckpointCorruption : public ::testing::Test {
protected:
    void SetUp() override {
        model = testing::random_classifier(Head::kAttention);
        blob = bytes_of(serialize_checkpoint(model, TrainConfig{}));
    }
    Classifier model;
    std::vector<std::uint8_t> blob;
};

TEST_F(CheckpointCorruption, IntactBlobLoads) { EXPECT_NO_THROW(deserialize_checkpoint(blob)); }

TEST_F(CheckpointCorruption, FlippedPayloadByteFailsChecksum) {
    for (std::size_t pos : {std::size_t{8}, blob.size() / 2, blob.size() - 9}) {
        auto bad = blob;
        bad[pos] ^= 0x40;
        try {
            deserialize_checkpoint(bad);
            FAIL() << "no error at " << pos;
        } catch (const IntegrityError& e) {
            EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
        }
    }
}

TEST_F(CheckpointCorruption, FlippedChecksumByteFails) {
    auto bad = blob;
    bad.back() ^= 1;
    EXPECT_THROW(deserialize_checkpoint(bad), IntegrityError);
}

TEST_F(CheckpointCorruption, BumpedVersionIsReportedAsVersion) {
    auto bad = blob;
    std::uint32_t version = kCheckpointVersion + 1;
    std::memcpy(bad.data() + 4, &version, 4);
    try {
        deserialize_checkpoint(bad);
        FAIL();
    } catch (const IntegrityError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    }
}

TEST_F(CheckpointCorruption, BadMagicTruncationAndTrailingBytes) {
    auto bad = blob;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_checkpoint(bad), IntegrityError);
    for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{8}, std::size_t{20}, blob.size() - 1}) {
        std::vector<std::uint8_t> cut(blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(keep));
        EXPECT_THROW(deserialize_checkpoint(cut), IntegrityError) << keep;
    }
    auto longer = blob;
    longer.push_back(0);
    EXPECT_THROW(deserialize_checkpoint(longer), IntegrityError);
}

TEST(CheckpointFiles, AtomicWriteLeavesNoTemporaryAndReplacesOldFile) {
    const auto dir = testing::temp_dir("ckpt_atomic");
    const auto a = testing::random_classifier(Head::kMaxPool, 3, 1);
    const auto b = testing::random_classifier(Head::kMaxPool, 3, 2);
    save_checkpoint(a, {}, dir / "m.ckpt");
    save_checkpoint(b, {}, dir / "m.ckpt");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_EQ(load_checkpoint(dir / "m.ckpt").model.params, b.params);
    EXPECT_THROW(save_checkpoint(a, {}, dir / "missing_dir" / "m.ckpt"), DataError);
    EXPECT_FALSE(fs::exists(dir / "missing_dir"));
}

TEST(CheckpointFiles, MissingFileIsDataErrorAndGarbageIsIntegrityError) {
    const auto dir = testing::temp_dir("ckpt_missing");
    EXPECT_THROW(load_checkpoint(dir / "none.ckpt"), DataError);
    std::ofstream(dir / "junk.ckpt") << "this is not a model";
    EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), IntegrityError);
}

TEST(Fnv1a64, KnownVectors) {
    EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
    const std::vector<std::uint8_t> a{'a'};
    EXPECT_EQ(fnv1a64(a), 0xaf63dc4c8601ec8cULL);
    const auto foobar = bytes_of("foobar");
    EXPECT_EQ(fnv1a64(foobar), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace lidkit
