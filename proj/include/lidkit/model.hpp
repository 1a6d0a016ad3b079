#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidkit/rng.hpp"
#include "lidkit/tensor.hpp"
#include "lidkit/vocab.hpp"

namespace lidkit {

enum class Head : std::uint8_t { kMaxPool = 0, kAttention = 1 };

std::string_view head_name(Head head);
Head parse_head(std::string_view name);

// Architecture hyperparameters; defaults are the published configuration.
struct Hyperparams {
    std::size_t embed_dim = 50;      // d
    std::size_t conv_filters = 100;  // d_cnn
    std::size_t region = 5;          // m, odd
    std::size_t padding = 2;         // p == (m - 1) / 2
    std::size_t hidden_dim = 100;    // d_hd, attention head only
    std::size_t num_languages = 0;   // L
    Head head = Head::kAttention;
    double dropout = 0.5;
    std::size_t max_len = kDefaultMaxLen;

    std::size_t window() const { return region * embed_dim; }

    /// Sets region and the matching padding.
    Hyperparams& set_region(std::size_t m);

    /// Throws UsageError when the invariants above do not hold.
    void validate() const;

    bool operator==(const Hyperparams&) const = default;
};

// All learnable tensors. The attention tensors (hidden_w, hidden_b, context) are
// empty for the max-pool head.
template <typename T>
struct ModelParams {
    Tensor<T> embedding;  // (V + 2) x d, row kPad pinned at zero
    Tensor<T> conv_w;     // d_cnn x (m * d)
    Tensor<T> conv_b;     // d_cnn
    Tensor<T> hidden_w;   // d_hd x d_cnn
    Tensor<T> hidden_b;   // d_hd
    Tensor<T> context;    // d_hd
    Tensor<T> out_w;      // L x d_cnn
    Tensor<T> out_b;      // L

    static constexpr std::size_t kNumTensors = 8;
    static constexpr std::array<std::string_view, kNumTensors> kNames{
        "embedding", "conv_w", "conv_b", "hidden_w", "hidden_b", "context", "out_w", "out_b"};

    /// Fixed order shared by the optimizer, checkpoints and gradient checks.
    std::array<Tensor<T>*, kNumTensors> tensors() {
        return {&embedding, &conv_w, &conv_b, &hidden_w, &hidden_b, &context, &out_w, &out_b};
    }
    std::array<const Tensor<T>*, kNumTensors> tensors() const {
        return {&embedding, &conv_w, &conv_b, &hidden_w, &hidden_b, &context, &out_w, &out_b};
    }

    std::size_t parameter_count() const;
    bool same_shape(const ModelParams& other) const;

    static ModelParams zeros(const Hyperparams& hp, std::size_t vocab_rows);

    /// Glorot-uniform weights (embedding included), zero biases, zero PAD row.
    static ModelParams glorot(const Hyperparams& hp, std::size_t vocab_rows, Rng& rng);

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        auto dst = out.tensors();
        auto src = tensors();
        for (std::size_t t = 0; t < kNumTensors; ++t) {
            dst[t]->rows = src[t]->rows;
            dst[t]->cols = src[t]->cols;
            dst[t]->values.assign(src[t]->values.begin(), src[t]->values.end());
        }
        return out;
    }

    bool operator==(const ModelParams&) const = default;
};

// Shape check used before forward/backward; throws UsageError on mismatch.
template <typename T>
void check_shapes(const ModelParams<T>& params, const Hyperparams& hp);

// A batch of encoded texts padded with kPad to the longest member.
struct Batch {
    std::size_t width = 0;  // longest sequence
    std::vector<TokenId> ids;  // size() x width, row-major
    std::vector<std::size_t> lengths;

    std::size_t size() const { return lengths.size(); }
    std::span<const TokenId> row(std::size_t b) const { return {ids.data() + b * width, width}; }
    /// True for real characters, false for padding.
    bool mask(std::size_t b, std::size_t i) const { return i < lengths[b]; }

    static Batch from_encoded(std::span<const Encoded> items);
    static Batch from_texts(std::span<const std::string> texts, const CharVocab& vocab, std::size_t max_len);
};

enum class Mode { kTrain, kInfer };

// Embedded batch in padded layout: item b, position i is row (b * width + i).
template <typename T>
struct EmbeddedBatch {
    std::size_t width = 0;
    Tensor<T> x;  // (batch * width) x d
    std::vector<std::uint8_t> mask;  // batch * width, 1 = real character
};

/// Embedding lookup; PAD positions produce zero rows. Throws DataError on an
/// index outside [0, V + 2).
template <typename T>
EmbeddedBatch<T> embed(const Batch& batch, const ModelParams<T>& params);

// Single-sequence building blocks. Matrices are position-major: row i holds the
// vector for character i (the transpose of the column convention used for X and C
// in the literature).

/// Same-length ngram convolution: n x d input -> n x d_cnn, ReLU applied, with
/// p zero rows implied on both sides.
template <typename T>
Tensor<T> conv_ngram(const Tensor<T>& x, const ModelParams<T>& params, const Hyperparams& hp);

/// Row-wise (per filter) max over unmasked positions. An empty mask means all real.
template <typename T>
std::vector<T> pool_max(const Tensor<T>& c, std::span<const std::uint8_t> mask = {});

template <typename T>
struct AttentionPool {
    std::vector<T> pooled;  // d_cnn
    std::vector<T> alpha;   // n, exactly zero on masked positions
    std::vector<T> scores;  // n, importance factors before normalization
};

/// Attention pooling: H = relu(C W_hd^T + b_hd), t = H u, alpha = softmax(t) over
/// unmasked positions, pooled = sum_i alpha_i c_i.
template <typename T>
AttentionPool<T> pool_attention(const Tensor<T>& c, const ModelParams<T>& params,
                                std::span<const std::uint8_t> mask = {});

// Cached activations of one forward pass, consumed by backward(). Sequences are
// stored back to back without padding; masked positions simply have no rows, which
// is equivalent to excluding them from both pooling heads.
template <typename T>
struct ForwardTrace {
    Head head = Head::kAttention;
    Mode mode = Mode::kInfer;
    std::size_t batch = 0;
    std::size_t embed_dim = 0, filters = 0, hidden_dim = 0, languages = 0, padding = 0, vocab_rows = 0;

    std::vector<std::size_t> lengths;
    std::vector<std::size_t> offsets;   // first position row of item b in conv/hidden/alpha
    std::vector<std::size_t> xoffsets;  // first row of item b in x (includes 2p zero rows per item)
    std::vector<TokenId> ids;           // concatenated real ids

    std::vector<T> x;        // embedded input with dropout applied, zero padding rows
    std::vector<T> x_mask;   // dropout multipliers for x's real rows (train mode only)
    std::vector<T> conv;     // C after ReLU, rows x d_cnn
    std::vector<T> hidden;   // H after ReLU, rows x d_hd (attention)
    std::vector<T> scores;   // t (attention)
    std::vector<T> alpha;    // attention weights (attention)
    std::vector<std::uint32_t> argmax;  // batch x d_cnn (max-pool)
    std::vector<T> pooled;   // batch x d_cnn before dropout
    std::vector<T> h_mask;   // dropout multipliers for pooled (train mode only)
    std::vector<T> features; // batch x d_cnn after dropout
    std::vector<T> logits;   // batch x L
    std::vector<T> probs;    // batch x L

    // Scratch reused between calls.
    std::vector<T> conv_wt;    // (m d) x d_cnn
    std::vector<T> hidden_wt;  // d_cnn x d_hd

    std::span<const T> item_probs(std::size_t b) const { return {probs.data() + b * languages, languages}; }
    std::span<const T> item_alpha(std::size_t b) const { return {alpha.data() + offsets[b], lengths[b]}; }
};

/// Full forward pass. In train mode with dropout > 0, inverted dropout masks are
/// drawn from rng for the embedded input and the pooled vector. Throws DataError
/// when an activation becomes non-finite, naming the layer.
template <typename T>
void forward(const Batch& batch, const ModelParams<T>& params, const Hyperparams& hp, Mode mode, Rng* rng,
             ForwardTrace<T>& trace);

template <typename T>
ForwardTrace<T> forward(const Batch& batch, const ModelParams<T>& params, const Hyperparams& hp, Mode mode,
                        Rng* rng = nullptr);

/// Mean cross-entropy of the traced batch against gold language indices.
template <typename T>
double batch_loss(const ForwardTrace<T>& trace, std::span<const std::size_t> gold);

/// Gradients of the mean cross-entropy with respect to every parameter. Dropout
/// masks stored in the trace are reused; the PAD embedding row gets zero gradient.
template <typename T>
void backward(const ForwardTrace<T>& trace, std::span<const std::size_t> gold, const ModelParams<T>& params,
              const Hyperparams& hp, ModelParams<T>& grads);

template <typename T>
ModelParams<T> backward(const ForwardTrace<T>& trace, std::span<const std::size_t> gold,
                        const ModelParams<T>& params, const Hyperparams& hp);

/// Index of the largest value, lowest index on ties.
template <typename T>
std::size_t argmax(std::span<const T> values);

struct Prediction {
    std::vector<double> probs;
    std::size_t label = 0;
    std::vector<double> attention;  // one weight per encoded character, when requested
};

struct PredictOptions {
    std::size_t batch_size = 256;
    bool with_attention = false;
    std::size_t threads = 1;
};

/// Deterministic batched inference: results do not depend on batch_size, thread
/// count or the order of texts.
template <typename T>
std::vector<Prediction> predict(std::span<const std::string> texts, const CharVocab& vocab,
                                const ModelParams<T>& params, const Hyperparams& hp,
                                const PredictOptions& options = {});

// A trained model: everything needed to classify raw text.
struct Classifier {
    Hyperparams hp;
    CharVocab vocab;
    std::vector<std::string> languages;
    ModelParams<float> params;

    std::vector<Prediction> predict(std::span<const std::string> texts, const PredictOptions& options = {}) const;
};

}  // namespace lidkit
