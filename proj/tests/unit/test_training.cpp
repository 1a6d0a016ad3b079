#include <gtest/gtest.h>

#include <cmath>

#include "lidkit/error.hpp"
#include "lidkit/training.hpp"
#include "support.hpp"

namespace lidkit {
namespace {

ModelParams<double> filled(const Hyperparams& hp, double value) {
    auto p = ModelParams<double>::zeros(hp, 6);
    for (auto* t : p.tensors()) std::fill(t->values.begin(), t->values.end(), value);
    return p;
}

TEST(DecayedLr, InverseTimeSchedule) {
    TrainConfig cfg;
    EXPECT_DOUBLE_EQ(decayed_lr(0, cfg), 0.001);
    EXPECT_DOUBLE_EQ(decayed_lr(20, cfg), 0.0005);
    for (std::size_t e = 0; e < 100; ++e) EXPECT_LT(decayed_lr(e + 1, cfg), decayed_lr(e, cfg));
}

TEST(ClipGradients, GlobalNormScaling) {
    const auto hp = testing::tiny_hp(Head::kAttention);
    auto g = filled(hp, 0.0);
    g.out_b.values = {3.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(clip_gradients(g, 5.0), 3.0);
    EXPECT_EQ(g.out_b[0], 3.0);

    g.out_b.values = {6.0, 8.0, 0.0};
    const auto before = g;
    EXPECT_DOUBLE_EQ(clip_gradients(g, 5.0), 10.0);
    EXPECT_NEAR(global_norm(g), 5.0, 1e-9);
    EXPECT_DOUBLE_EQ(g.out_b[0], 3.0);
    EXPECT_DOUBLE_EQ(g.out_b[1], 4.0);
    (void)before;

    auto z = filled(hp, 0.0);
    clip_gradients(z, 5.0);
    EXPECT_EQ(global_norm(z), 0.0);
}

TEST(ClipGradients, NeverIncreasesNormOrChangesDirection) {
    const auto hp = testing::tiny_hp(Head::kMaxPool);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = filled(hp, 0.0);
        const double scale = rng.uniform(0.01, 3.0);
        for (auto* t : g.tensors()) {
            for (auto& v : t->values) v = rng.uniform(-scale, scale);
        }
        const auto before = g;
        const double norm = clip_gradients(g, 5.0);
        EXPECT_LE(global_norm(g), norm + 1e-12);
        const double ratio = global_norm(g) / norm;
        auto a = before.tensors();
        auto b = g.tensors();
        for (std::size_t t = 0; t < a.size(); ++t) {
            for (std::size_t i = 0; i < a[t]->size(); ++i) EXPECT_NEAR(b[t]->values[i], a[t]->values[i] * ratio, 1e-12);
        }
    }
}

TEST(AdamStep, ZeroGradientIsAFixedPoint) {
    const auto hp = testing::tiny_hp(Head::kAttention);
    auto p = filled(hp, 0.3);
    const auto before = p;
    auto state = OptimizerState<double>::for_params(p);
    const auto g = filled(hp, 0.0);
    for (int i = 0; i < 3; ++i) adam_step(p, g, state, 0.001);
    EXPECT_EQ(p, before);
    EXPECT_EQ(state.step, 3u);
}

TEST(AdamStep, FirstStepMovesEachWeightByLearningRate) {
    const auto hp = testing::tiny_hp(Head::kAttention);
    auto p = filled(hp, 0.0);
    auto g = filled(hp, 0.0);
    Rng rng(1);
    for (auto* t : g.tensors()) {
        for (auto& v : t->values) v = rng.uniform(-2.0, 2.0);
    }
    auto state = OptimizerState<double>::for_params(p);
    const double lr = 0.01;
    adam_step(p, g, state, lr);
    auto pt = p.tensors();
    auto gt = g.tensors();
    for (std::size_t t = 0; t < pt.size(); ++t) {
        for (std::size_t i = 0; i < pt[t]->size(); ++i) {
            if (t == 0 && i < hp.embed_dim) {
                EXPECT_EQ(pt[t]->values[i], 0.0);  // PAD row
                continue;
            }
            const double gi = gt[t]->values[i];
            const double expect = -lr * gi / (std::abs(gi) + 1e-8);
            EXPECT_NEAR(pt[t]->values[i], expect, 1e-12);
        }
    }
}

TEST(AdamStep, MomentsFollowGeometricSeries) {
    const auto hp = testing::tiny_hp(Head::kMaxPool);
    auto p = filled(hp, 0.0);
    const double gv = 0.7;
    const auto g = filled(hp, gv);
    auto state = OptimizerState<double>::for_params(p);
    const int k = 6;
    for (int i = 0; i < k; ++i) adam_step(p, g, state, 1e-3);
    const double m = (1 - std::pow(0.9, k)) * gv;
    const double v = (1 - std::pow(0.999, k)) * gv * gv;
    EXPECT_NEAR(state.m.conv_w[0], m, 1e-15);
    EXPECT_NEAR(state.v.conv_w[0], v, 1e-15);
    EXPECT_EQ(state.m.embedding[0], 0.0);
}

TEST(AdamStep, NonFiniteGradientIsFatal) {
    const auto hp = testing::tiny_hp(Head::kMaxPool);
    auto p = filled(hp, 0.0);
    auto g = filled(hp, 0.0);
    g.conv_b[1] = std::nan("");
    auto state = OptimizerState<double>::for_params(p);
    EXPECT_THROW(adam_step(p, g, state, 1e-3), DataError);
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.lr = 0.0;
    EXPECT_NO_THROW(cfg.validate());
    cfg.patience = cfg.max_epochs + 1;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = {};
    cfg.clip_rate = 0.0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

std::vector<LabeledText> toy_set() {
    return {{"the cat sat", "en", ""},     {"a dog ran", "en", ""},       {"hello there", "en", ""},
            {"le chat noir", "fr", ""},    {"une maison", "fr", ""},       {"bonjour monsieur", "fr", ""},
            {"el perro come", "es", ""},   {"una casa grande", "es", ""}, {"hola amigo", "es", ""},
            {"the end", "en", ""}};
}

struct Toy {
    std::vector<LabeledText> data = toy_set();
    CharVocab vocab = CharVocab::build(data, 1);
    std::vector<std::string> languages = collect_languages(data);
    Hyperparams hp;
    Toy() { hp.num_languages = languages.size(); }
};

TEST(Train, FrozenParametersStopAfterTwoEpochsWithPatienceOne) {
    Toy toy;
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.patience = 1;
    cfg.batch_size = 4;
    const auto r = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    EXPECT_EQ(r.report.epochs.size(), 2u);
    EXPECT_EQ(r.report.stop_reason, "patience");
    EXPECT_EQ(r.report.best_epoch, 0u);
}

TEST(Train, SameSeedGivesIdenticalReportAndParams) {
    Toy toy;
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.batch_size = 3;
    cfg.seed = 42;
    const auto a = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    const auto b = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    EXPECT_TRUE(a.report.same_run(b.report));
    EXPECT_EQ(a.params, b.params);
    cfg.seed = 43;
    const auto c = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    EXPECT_NE(a.params, c.params);
}

TEST(Train, ReturnsBestEpochParameters) {
    Toy toy;
    TrainConfig cfg;
    cfg.max_epochs = 12;
    cfg.patience = 12;
    cfg.batch_size = 4;
    const auto r = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    double best = 0.0;
    for (const auto& e : r.report.epochs) best = std::max(best, e.valid_accuracy);
    EXPECT_EQ(r.report.best_valid_accuracy, best);
    EXPECT_EQ(r.report.epochs[r.report.best_epoch].valid_accuracy, best);

    const auto gold = label_indices(toy.data, toy.languages);
    std::vector<Encoded> enc;
    for (const auto& t : toy.data) enc.push_back(toy.vocab.encode(t.text));
    auto hp = toy.hp;
    hp.dropout = cfg.dropout;
    const auto score = score_split<float>(enc, gold, r.params, hp, 256);
    EXPECT_DOUBLE_EQ(score.accuracy, best);
    EXPECT_NEAR(score.loss, r.report.epochs[r.report.best_epoch].valid_loss, 1e-12);
}

TEST(Train, LossFallsOverFirstTenEpochs) {
    Toy toy;
    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    cfg.batch_size = 10;
    cfg.dropout = 0.0;
    const auto r = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    ASSERT_EQ(r.report.epochs.size(), 10u);
    int rises = 0;
    for (std::size_t e = 1; e < 10; ++e) rises += r.report.epochs[e].train_loss > r.report.epochs[e - 1].train_loss;
    EXPECT_LE(rises, 1);
    EXPECT_LT(r.report.epochs.back().train_loss, r.report.epochs.front().train_loss);
}

TEST(Train, RejectsUnknownValidationLabelsAndEmptySplits) {
    Toy toy;
    TrainConfig cfg;
    auto valid = toy.data;
    valid.push_back({"hallo welt", "de", ""});
    EXPECT_THROW(train(toy.data, valid, toy.vocab, toy.languages, toy.hp, cfg), DataError);
    EXPECT_THROW(train({}, toy.data, toy.vocab, toy.languages, toy.hp, cfg), DataError);
}

TEST(TrainReport, JsonCarriesEpochsAndConfig) {
    Toy toy;
    TrainConfig cfg;
    cfg.max_epochs = 2;
    cfg.patience = 2;
    const auto r = train(toy.data, toy.data, toy.vocab, toy.languages, toy.hp, cfg);
    const auto json = r.report.to_json(toy.hp, cfg);
    EXPECT_NE(json.find("\"best_epoch\""), std::string::npos);
    EXPECT_NE(json.find("\"valid_accuracy\""), std::string::npos);
    EXPECT_NE(json.find("\"clip_rate\": 5.0"), std::string::npos);
}

}  // namespace
}  // namespace lidkit
