#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lidkit/corpus.hpp"
#include "lidkit/model.hpp"
#include "lidkit/vocab.hpp"

namespace lidkit {

struct TrainConfig {
    double lr = 0.001;
    double decay_rate = 0.05;
    std::size_t max_epochs = 512;
    std::size_t patience = 64;
    double clip_rate = 5.0;
    double dropout = 0.5;
    std::size_t batch_size = 256;
    std::uint64_t seed = 1;

    /// lr may be zero (frozen run); everything else must be positive, and
    /// patience <= max_epochs.
    void validate() const;

    bool operator==(const TrainConfig&) const = default;
};

template <typename T>
struct OptimizerState {
    ModelParams<T> m;  // first moments
    ModelParams<T> v;  // second moments
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimizerState for_params(const ModelParams<T>& params);
};

/// One bias-corrected ADAM update. The PAD embedding row is never touched.
/// Throws DataError on a non-finite gradient.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, OptimizerState<T>& state, double lr_t);

template <typename T>
double global_norm(const ModelParams<T>& grads);

/// Global-norm clipping. Returns the norm before clipping.
template <typename T>
double clip_gradients(ModelParams<T>& grads, double clip_rate);

/// Inverse-time decay: lr / (1 + decay_rate * epoch).
double decayed_lr(std::size_t epoch, const TrainConfig& cfg);

struct EpochStats {
    std::size_t epoch = 0;  // 0-based
    double lr = 0.0;
    double train_loss = 0.0;  // mean over the epoch's mini-batches, dropout active
    double valid_accuracy = 0.0;
    double valid_loss = 0.0;

    bool operator==(const EpochStats&) const = default;
};

struct TrainReport {
    std::vector<std::string> languages;
    std::size_t train_records = 0;
    std::size_t valid_records = 0;
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double best_valid_accuracy = 0.0;
    std::string stop_reason;  // "patience" or "max_epochs"
    double wall_seconds = 0.0;

    /// Everything except wall time.
    bool same_run(const TrainReport& other) const;

    std::string to_json(const Hyperparams& hp, const TrainConfig& cfg) const;
};

struct TrainResult {
    ModelParams<float> params;  // from the best epoch
    TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch training with early stopping on validation accuracy (ties broken by
/// lower validation loss). hp.num_languages must equal languages.size(); the
/// dropout rate comes from cfg.
TrainResult train(std::span<const LabeledText> train_set, std::span<const LabeledText> valid_set,
                  const CharVocab& vocab, const std::vector<std::string>& languages, Hyperparams hp,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct SplitScore {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// Inference-mode accuracy and mean cross-entropy over pre-encoded items.
template <typename T>
SplitScore score_split(std::span<const Encoded> items, std::span<const std::size_t> gold,
                       const ModelParams<T>& params, const Hyperparams& hp, std::size_t batch_size);

}  // namespace lidkit
