#include "lidkit/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "lidkit/error.hpp"
#include "lidkit/simd/kernels.hpp"

namespace lidkit {

std::string_view head_name(Head head) { return head == Head::kAttention ? "attention" : "maxpool"; }

Head parse_head(std::string_view name) {
    if (name == "attention") return Head::kAttention;
    if (name == "maxpool") return Head::kMaxPool;
    throw UsageError("unknown head '" + std::string(name) + "' (expected attention or maxpool)");
}

Hyperparams& Hyperparams::set_region(std::size_t m) {
    region = m;
    padding = m > 0 ? (m - 1) / 2 : 0;
    return *this;
}

void Hyperparams::validate() const {
    if (region == 0 || region % 2 == 0) throw UsageError("region size m must be odd");
    if (padding != (region - 1) / 2) throw UsageError("padding must equal (m - 1) / 2");
    if (embed_dim == 0 || conv_filters == 0 || num_languages == 0) throw UsageError("model dimensions must be >= 1");
    if (head == Head::kAttention && hidden_dim == 0) throw UsageError("attention hidden dimension must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout rate must be in [0, 1)");
    if (max_len == 0) throw UsageError("max_len must be >= 1");
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
}

template <typename T>
bool ModelParams<T>::same_shape(const ModelParams& other) const {
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < kNumTensors; ++i) {
        if (!a[i]->same_shape(*b[i])) return false;
    }
    return true;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const Hyperparams& hp, std::size_t vocab_rows) {
    hp.validate();
    ModelParams p;
    p.embedding = Tensor<T>(vocab_rows, hp.embed_dim);
    p.conv_w = Tensor<T>(hp.conv_filters, hp.window());
    p.conv_b = Tensor<T>(hp.conv_filters, 1);
    if (hp.head == Head::kAttention) {
        p.hidden_w = Tensor<T>(hp.hidden_dim, hp.conv_filters);
        p.hidden_b = Tensor<T>(hp.hidden_dim, 1);
        p.context = Tensor<T>(hp.hidden_dim, 1);
    }
    p.out_w = Tensor<T>(hp.num_languages, hp.conv_filters);
    p.out_b = Tensor<T>(hp.num_languages, 1);
    return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::glorot(const Hyperparams& hp, std::size_t vocab_rows, Rng& rng) {
    auto p = zeros(hp, vocab_rows);
    const auto fill = [&rng](Tensor<T>& t, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : t.values) v = static_cast<T>(rng.uniform(-limit, limit));
    };
    fill(p.embedding, static_cast<double>(vocab_rows), static_cast<double>(hp.embed_dim));
    std::fill_n(p.embedding.row(kPad), hp.embed_dim, T(0));
    fill(p.conv_w, static_cast<double>(hp.window()), static_cast<double>(hp.conv_filters));
    if (hp.head == Head::kAttention) {
        fill(p.hidden_w, static_cast<double>(hp.conv_filters), static_cast<double>(hp.hidden_dim));
        fill(p.context, static_cast<double>(hp.hidden_dim), 1.0);
    }
    fill(p.out_w, static_cast<double>(hp.conv_filters), static_cast<double>(hp.num_languages));
    return p;
}

template <typename T>
void check_shapes(const ModelParams<T>& params, const Hyperparams& hp) {
    hp.validate();
    if (params.embedding.rows < 2) throw UsageError("embedding table must hold at least PAD and UNK");
    const auto expected = ModelParams<T>::zeros(hp, params.embedding.rows);
    auto got = params.tensors();
    auto want = expected.tensors();
    for (std::size_t i = 0; i < ModelParams<T>::kNumTensors; ++i) {
        if (!got[i]->same_shape(*want[i]) || got[i]->values.size() != got[i]->rows * got[i]->cols) {
            std::ostringstream msg;
            msg << "parameter '" << ModelParams<T>::kNames[i] << "' has shape " << got[i]->rows << "x" << got[i]->cols
                << ", expected " << want[i]->rows << "x" << want[i]->cols;
            throw UsageError(msg.str());
        }
    }
}

Batch Batch::from_encoded(std::span<const Encoded> items) {
    Batch b;
    for (const auto& e : items) b.width = std::max(b.width, e.ids.size());
    b.ids.assign(items.size() * b.width, kPad);
    b.lengths.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::copy(items[i].ids.begin(), items[i].ids.end(), b.ids.begin() + static_cast<std::ptrdiff_t>(i * b.width));
        b.lengths.push_back(items[i].ids.size());
    }
    return b;
}

Batch Batch::from_texts(std::span<const std::string> texts, const CharVocab& vocab, std::size_t max_len) {
    std::vector<Encoded> enc;
    enc.reserve(texts.size());
    for (const auto& t : texts) enc.push_back(vocab.encode(t, max_len));
    return from_encoded(enc);
}

namespace {

template <typename T>
void check_index(TokenId id, std::size_t rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
        throw DataError("token index " + std::to_string(id) + " outside embedding table of " + std::to_string(rows) +
                        " rows");
    }
}

template <typename T>
void transpose(const Tensor<T>& src, std::vector<T>& dst) {
    dst.resize(src.size());
    for (std::size_t i = 0; i < src.rows; ++i) {
        const T* row = src.row(i);
        for (std::size_t j = 0; j < src.cols; ++j) dst[j * src.rows + i] = row[j];
    }
}

template <typename T>
void bias_relu(T* rows, std::size_t n, std::size_t width, const T* bias) {
    for (std::size_t i = 0; i < n; ++i) {
        T* r = rows + i * width;
        for (std::size_t j = 0; j < width; ++j) r[j] = std::max(r[j] + bias[j], T(0));
    }
}

template <typename T>
void softmax_inplace(T* v, std::size_t n) {
    T hi = v[0];
    for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, v[i]);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - hi);
        sum += v[i];
    }
    const double inv = 1.0 / sum;
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<T>(v[i] * inv);
}

// One sequence through the convolution. xpad holds n + 2p rows of width d.
template <typename T>
void conv_rows(const simd::Kernels<T>& k, const T* xpad, std::size_t n, std::size_t window, std::size_t embed_dim,
               const T* conv_wt, const T* bias, std::size_t filters, T* out) {
    k.gemm(n, filters, window, xpad, embed_dim, 1, conv_wt, filters, out, filters, false);
    bias_relu(out, n, filters, bias);
}

// One sequence through the attention head.
template <typename T>
void attention_rows(const simd::Kernels<T>& k, const T* c, std::size_t n, std::size_t filters, std::size_t hidden_dim,
                    const T* hidden_wt, const T* hidden_b, const T* context, T* hidden, T* scores, T* alpha,
                    T* pooled) {
    k.gemm(n, hidden_dim, filters, c, filters, 1, hidden_wt, hidden_dim, hidden, hidden_dim, false);
    bias_relu(hidden, n, hidden_dim, hidden_b);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = k.dot(hidden + i * hidden_dim, context, hidden_dim);
        alpha[i] = scores[i];
    }
    softmax_inplace(alpha, n);
    std::fill_n(pooled, filters, T(0));
    for (std::size_t i = 0; i < n; ++i) k.axpy(filters, alpha[i], c + i * filters, pooled);
}

template <typename T>
bool all_finite(const T* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

}  // namespace

template <typename T>
EmbeddedBatch<T> embed(const Batch& batch, const ModelParams<T>& params) {
    EmbeddedBatch<T> out;
    const std::size_t d = params.embedding.cols;
    out.width = batch.width;
    out.x = Tensor<T>(batch.size() * batch.width, d);
    out.mask.assign(batch.size() * batch.width, 0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto row = batch.row(b);
        for (std::size_t i = 0; i < batch.width; ++i) {
            const TokenId id = row[i];
            check_index<T>(id, params.embedding.rows);
            out.mask[b * batch.width + i] = batch.mask(b, i) ? 1 : 0;
            if (id == kPad) continue;
            std::copy_n(params.embedding.row(static_cast<std::size_t>(id)), d, out.x.row(b * batch.width + i));
        }
    }
    return out;
}

template <typename T>
Tensor<T> conv_ngram(const Tensor<T>& x, const ModelParams<T>& params, const Hyperparams& hp) {
    hp.validate();
    if (x.cols != hp.embed_dim || params.conv_w.rows != hp.conv_filters || params.conv_w.cols != hp.window()) {
        throw UsageError("conv_ngram: shape mismatch");
    }
    const std::size_t n = x.rows, d = hp.embed_dim, p = hp.padding;
    std::vector<T> xpad((n + 2 * p) * d, T(0));
    std::copy(x.values.begin(), x.values.end(), xpad.begin() + static_cast<std::ptrdiff_t>(p * d));
    std::vector<T> wt;
    transpose(params.conv_w, wt);
    Tensor<T> c(n, hp.conv_filters);
    conv_rows(simd::active<T>(), xpad.data(), n, hp.window(), d, wt.data(), params.conv_b.data(), hp.conv_filters,
              c.data());
    return c;
}

template <typename T>
std::vector<T> pool_max(const Tensor<T>& c, std::span<const std::uint8_t> mask) {
    if (!mask.empty() && mask.size() != c.rows) throw UsageError("pool_max: mask length mismatch");
    std::vector<T> h(c.cols, -std::numeric_limits<T>::infinity());
    bool any = false;
    for (std::size_t i = 0; i < c.rows; ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        any = true;
        for (std::size_t j = 0; j < c.cols; ++j) h[j] = std::max(h[j], c(i, j));
    }
    if (!any) throw UsageError("pool_max: no unmasked positions");
    return h;
}

template <typename T>
AttentionPool<T> pool_attention(const Tensor<T>& c, const ModelParams<T>& params, std::span<const std::uint8_t> mask) {
    if (!mask.empty() && mask.size() != c.rows) throw UsageError("pool_attention: mask length mismatch");
    const std::size_t filters = c.cols, hidden_dim = params.hidden_w.rows;
    if (params.hidden_w.cols != filters || params.context.size() != hidden_dim || params.hidden_b.size() != hidden_dim) {
        throw UsageError("pool_attention: shape mismatch");
    }
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < c.rows; ++i) {
        if (mask.empty() || mask[i] != 0) live.push_back(i);
    }
    if (live.empty()) throw UsageError("pool_attention: no unmasked positions");
    std::vector<T> packed(live.size() * filters);
    for (std::size_t r = 0; r < live.size(); ++r) std::copy_n(c.row(live[r]), filters, packed.data() + r * filters);

    std::vector<T> wt, hidden(live.size() * hidden_dim), scores(live.size()), alpha(live.size());
    transpose(params.hidden_w, wt);
    AttentionPool<T> out;
    out.pooled.assign(filters, T(0));
    attention_rows(simd::active<T>(), packed.data(), live.size(), filters, hidden_dim, wt.data(),
                   params.hidden_b.data(), params.context.data(), hidden.data(), scores.data(), alpha.data(),
                   out.pooled.data());
    out.alpha.assign(c.rows, T(0));
    out.scores.assign(c.rows, -std::numeric_limits<T>::infinity());
    for (std::size_t r = 0; r < live.size(); ++r) {
        out.alpha[live[r]] = alpha[r];
        out.scores[live[r]] = scores[r];
    }
    return out;
}

namespace {

template <typename T>
[[noreturn]] void report_non_finite(const ForwardTrace<T>& tr, std::size_t b) {
    const std::size_t n = tr.lengths[b];
    const std::size_t d = tr.embed_dim, f = tr.filters;
    std::string layer = "output logits";
    if (!all_finite(tr.x.data() + tr.xoffsets[b] * d, (n + 2 * tr.padding) * d)) {
        layer = "embedding";
    } else if (!all_finite(tr.conv.data() + tr.offsets[b] * f, n * f)) {
        layer = "convolution";
    } else if (tr.head == Head::kAttention && !all_finite(tr.hidden.data() + tr.offsets[b] * tr.hidden_dim,
                                                           n * tr.hidden_dim)) {
        layer = "attention hidden layer";
    } else if (tr.head == Head::kAttention && !all_finite(tr.alpha.data() + tr.offsets[b], n)) {
        layer = "attention weights";
    } else if (!all_finite(tr.features.data() + b * f, f)) {
        layer = "pooling";
    }
    throw DataError("non-finite activation in " + layer + " (batch item " + std::to_string(b) + ")");
}

}  // namespace

template <typename T>
void forward(const Batch& batch, const ModelParams<T>& params, const Hyperparams& hp, Mode mode, Rng* rng,
             ForwardTrace<T>& tr) {
    check_shapes(params, hp);
    const auto& k = simd::active<T>();
    const std::size_t B = batch.size();
    const std::size_t d = hp.embed_dim, f = hp.conv_filters, L = hp.num_languages, p = hp.padding;
    const std::size_t dh = hp.head == Head::kAttention ? hp.hidden_dim : 0;
    const bool drop = mode == Mode::kTrain && hp.dropout > 0.0;
    if (drop && rng == nullptr) throw UsageError("train-mode forward with dropout needs a random generator");
    const T keep_scale = drop ? static_cast<T>(1.0 / (1.0 - hp.dropout)) : T(1);

    tr.head = hp.head;
    tr.mode = mode;
    tr.batch = B;
    tr.embed_dim = d;
    tr.filters = f;
    tr.hidden_dim = dh;
    tr.languages = L;
    tr.padding = p;
    tr.vocab_rows = params.embedding.rows;
    tr.lengths.assign(batch.lengths.begin(), batch.lengths.end());
    tr.offsets.resize(B);
    tr.xoffsets.resize(B);
    std::size_t rows = 0, xrows = 0;
    for (std::size_t b = 0; b < B; ++b) {
        if (tr.lengths[b] == 0 || tr.lengths[b] > batch.width) throw DataError("batch item with invalid length");
        tr.offsets[b] = rows;
        tr.xoffsets[b] = xrows;
        rows += tr.lengths[b];
        xrows += tr.lengths[b] + 2 * p;
    }

    // Embedding lookup (+ dropout).
    tr.ids.resize(rows);
    tr.x.assign(xrows * d, T(0));
    if (drop) {
        tr.x_mask.resize(rows * d);
    } else {
        tr.x_mask.clear();
    }
    for (std::size_t b = 0; b < B; ++b) {
        const auto row = batch.row(b);
        for (std::size_t i = 0; i < tr.lengths[b]; ++i) {
            const TokenId id = row[i];
            check_index<T>(id, params.embedding.rows);
            tr.ids[tr.offsets[b] + i] = id;
            const T* src = params.embedding.row(static_cast<std::size_t>(id));
            T* dst = tr.x.data() + (tr.xoffsets[b] + p + i) * d;
            if (drop) {
                T* m = tr.x_mask.data() + (tr.offsets[b] + i) * d;
                for (std::size_t j = 0; j < d; ++j) {
                    m[j] = rng->uniform() < hp.dropout ? T(0) : keep_scale;
                    dst[j] = src[j] * m[j];
                }
            } else {
                std::copy_n(src, d, dst);
            }
        }
    }

    // Convolution.
    transpose(params.conv_w, tr.conv_wt);
    tr.conv.resize(rows * f);
    for (std::size_t b = 0; b < B; ++b) {
        conv_rows(k, tr.x.data() + tr.xoffsets[b] * d, tr.lengths[b], hp.window(), d, tr.conv_wt.data(),
                  params.conv_b.data(), f, tr.conv.data() + tr.offsets[b] * f);
    }

    // Pooling.
    tr.pooled.resize(B * f);
    if (hp.head == Head::kMaxPool) {
        tr.argmax.resize(B * f);
        tr.hidden.clear();
        tr.scores.clear();
        tr.alpha.clear();
        for (std::size_t b = 0; b < B; ++b) {
            const T* c = tr.conv.data() + tr.offsets[b] * f;
            T* h = tr.pooled.data() + b * f;
            std::uint32_t* am = tr.argmax.data() + b * f;
            std::copy_n(c, f, h);
            std::fill_n(am, f, 0u);
            for (std::size_t i = 1; i < tr.lengths[b]; ++i) {
                const T* ci = c + i * f;
                for (std::size_t j = 0; j < f; ++j) {
                    if (ci[j] > h[j]) {
                        h[j] = ci[j];
                        am[j] = static_cast<std::uint32_t>(i);
                    }
                }
            }
        }
    } else {
        tr.argmax.clear();
        transpose(params.hidden_w, tr.hidden_wt);
        tr.hidden.resize(rows * dh);
        tr.scores.resize(rows);
        tr.alpha.resize(rows);
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t o = tr.offsets[b];
            attention_rows(k, tr.conv.data() + o * f, tr.lengths[b], f, dh, tr.hidden_wt.data(),
                           params.hidden_b.data(), params.context.data(), tr.hidden.data() + o * dh,
                           tr.scores.data() + o, tr.alpha.data() + o, tr.pooled.data() + b * f);
        }
    }

    // Dropout on the pooled vector.
    tr.features.resize(B * f);
    if (drop) {
        tr.h_mask.resize(B * f);
        for (std::size_t i = 0; i < B * f; ++i) {
            tr.h_mask[i] = rng->uniform() < hp.dropout ? T(0) : keep_scale;
            tr.features[i] = tr.pooled[i] * tr.h_mask[i];
        }
    } else {
        tr.h_mask.clear();
        std::copy(tr.pooled.begin(), tr.pooled.end(), tr.features.begin());
    }

    // Output projection and softmax.
    tr.logits.resize(B * L);
    tr.probs.resize(B * L);
    for (std::size_t b = 0; b < B; ++b) {
        const T* h = tr.features.data() + b * f;
        T* z = tr.logits.data() + b * L;
        for (std::size_t l = 0; l < L; ++l) z[l] = k.dot(params.out_w.row(l), h, f) + params.out_b[l];
        if (!all_finite(z, L)) report_non_finite(tr, b);
        T* pr = tr.probs.data() + b * L;
        std::copy_n(z, L, pr);
        softmax_inplace(pr, L);
    }
}

template <typename T>
ForwardTrace<T> forward(const Batch& batch, const ModelParams<T>& params, const Hyperparams& hp, Mode mode, Rng* rng) {
    ForwardTrace<T> tr;
    forward(batch, params, hp, mode, rng, tr);
    return tr;
}

template <typename T>
double batch_loss(const ForwardTrace<T>& tr, std::span<const std::size_t> gold) {
    if (gold.size() != tr.batch) throw UsageError("gold label count does not match the batch");
    double total = 0.0;
    for (std::size_t b = 0; b < tr.batch; ++b) {
        const T* z = tr.logits.data() + b * tr.languages;
        if (gold[b] >= tr.languages) throw UsageError("gold label out of range");
        double hi = z[0];
        for (std::size_t l = 1; l < tr.languages; ++l) hi = std::max(hi, static_cast<double>(z[l]));
        double sum = 0.0;
        for (std::size_t l = 0; l < tr.languages; ++l) sum += std::exp(static_cast<double>(z[l]) - hi);
        total += hi + std::log(sum) - static_cast<double>(z[gold[b]]);
    }
    return tr.batch == 0 ? 0.0 : total / static_cast<double>(tr.batch);
}

template <typename T>
void backward(const ForwardTrace<T>& tr, std::span<const std::size_t> gold, const ModelParams<T>& params,
              const Hyperparams& hp, ModelParams<T>& g) {
    check_shapes(params, hp);
    const std::size_t d = hp.embed_dim, f = hp.conv_filters, L = hp.num_languages, p = hp.padding;
    const std::size_t dh = hp.head == Head::kAttention ? hp.hidden_dim : 0;
    if (tr.head != hp.head || tr.embed_dim != d || tr.filters != f || tr.languages != L || tr.padding != p ||
        tr.hidden_dim != dh || tr.vocab_rows != params.embedding.rows || tr.probs.size() != tr.batch * L) {
        throw UsageError("stale forward trace: shapes do not match the parameters");
    }
    if (gold.size() != tr.batch) throw UsageError("gold label count does not match the batch");

    const auto& k = simd::active<T>();
    if (!g.same_shape(params)) g = ModelParams<T>::zeros(hp, params.embedding.rows);
    for (auto* t : g.tensors()) std::fill(t->values.begin(), t->values.end(), T(0));
    if (tr.batch == 0) return;

    const T scale = T(1) / static_cast<T>(tr.batch);
    const std::size_t window = hp.window();
    std::vector<T> dz(L), dfeat(f), dpooled(f), dc, dhid, dx;

    for (std::size_t b = 0; b < tr.batch; ++b) {
        if (gold[b] >= L) throw UsageError("gold label out of range");
        const std::size_t n = tr.lengths[b], o = tr.offsets[b];
        const T* pr = tr.probs.data() + b * L;
        const T* feat = tr.features.data() + b * f;
        const T* c = tr.conv.data() + o * f;

        // Softmax + cross-entropy, output projection.
        std::fill(dfeat.begin(), dfeat.end(), T(0));
        for (std::size_t l = 0; l < L; ++l) {
            dz[l] = (pr[l] - (l == gold[b] ? T(1) : T(0))) * scale;
            g.out_b[l] += dz[l];
            k.axpy(f, dz[l], feat, g.out_w.row(l));
            k.axpy(f, dz[l], params.out_w.row(l), dfeat.data());
        }
        if (tr.h_mask.empty()) {
            dpooled = dfeat;
        } else {
            const T* m = tr.h_mask.data() + b * f;
            for (std::size_t j = 0; j < f; ++j) dpooled[j] = dfeat[j] * m[j];
        }

        // Pooling.
        dc.assign(n * f, T(0));
        if (tr.head == Head::kMaxPool) {
            const std::uint32_t* am = tr.argmax.data() + b * f;
            for (std::size_t j = 0; j < f; ++j) dc[am[j] * f + j] += dpooled[j];
        } else {
            const T* alpha = tr.alpha.data() + o;
            const T* hid = tr.hidden.data() + o * dh;
            T weighted = 0;
            std::vector<T> dalpha(n);
            for (std::size_t i = 0; i < n; ++i) {
                dalpha[i] = k.dot(dpooled.data(), c + i * f, f);
                weighted += alpha[i] * dalpha[i];
            }
            dhid.assign(n * dh, T(0));
            for (std::size_t i = 0; i < n; ++i) {
                const T dt = alpha[i] * (dalpha[i] - weighted);
                k.axpy(f, alpha[i], dpooled.data(), dc.data() + i * f);
                k.axpy(dh, dt, hid + i * dh, g.context.data());
                const T* hi = hid + i * dh;
                T* dhi = dhid.data() + i * dh;
                for (std::size_t j = 0; j < dh; ++j) {
                    dhi[j] = hi[j] > T(0) ? dt * params.context[j] : T(0);
                    g.hidden_b[j] += dhi[j];
                }
            }
            // dW_hd += dH^T C ; dC += dH W_hd
            k.gemm(dh, f, n, dhid.data(), 1, dh, c, f, g.hidden_w.data(), f, true);
            k.gemm(n, f, dh, dhid.data(), dh, 1, params.hidden_w.data(), f, dc.data(), f, true);
        }

        // Convolution (ReLU derivative, then weights and input).
        for (std::size_t i = 0; i < n * f; ++i) {
            if (c[i] <= T(0)) dc[i] = T(0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const T* dci = dc.data() + i * f;
            for (std::size_t j = 0; j < f; ++j) g.conv_b[j] += dci[j];
        }
        const T* xitem = tr.x.data() + tr.xoffsets[b] * d;
        k.gemm(f, window, n, dc.data(), 1, f, xitem, d, g.conv_w.data(), window, true);
        dx.assign((n + 2 * p) * d, T(0));
        k.gemm(n, window, f, dc.data(), f, 1, params.conv_w.data(), window, dx.data(), d, true);

        // Embedding rows.
        for (std::size_t i = 0; i < n; ++i) {
            const TokenId id = tr.ids[o + i];
            if (id == kPad) continue;
            const T* gx = dx.data() + (p + i) * d;
            T* ge = g.embedding.row(static_cast<std::size_t>(id));
            if (tr.x_mask.empty()) {
                for (std::size_t j = 0; j < d; ++j) ge[j] += gx[j];
            } else {
                const T* m = tr.x_mask.data() + (o + i) * d;
                for (std::size_t j = 0; j < d; ++j) ge[j] += gx[j] * m[j];
            }
        }
    }
    std::fill_n(g.embedding.row(kPad), d, T(0));
}

template <typename T>
ModelParams<T> backward(const ForwardTrace<T>& tr, std::span<const std::size_t> gold, const ModelParams<T>& params,
                        const Hyperparams& hp) {
    ModelParams<T> g;
    backward(tr, gold, params, hp, g);
    return g;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

template <typename T>
std::vector<Prediction> predict(std::span<const std::string> texts, const CharVocab& vocab,
                                const ModelParams<T>& params, const Hyperparams& hp, const PredictOptions& options) {
    if (options.batch_size == 0) throw UsageError("batch size must be >= 1");
    check_shapes(params, hp);
    if (vocab.table_size() != params.embedding.rows) throw UsageError("vocabulary does not match the embedding table");
    std::vector<Prediction> out(texts.size());
    const std::size_t num_batches = (texts.size() + options.batch_size - 1) / options.batch_size;
    const bool attention = options.with_attention && hp.head == Head::kAttention;

    const auto run = [&](std::size_t bi, ForwardTrace<T>& tr) {
        const std::size_t begin = bi * options.batch_size;
        const std::size_t end = std::min(texts.size(), begin + options.batch_size);
        const Batch batch = Batch::from_texts(texts.subspan(begin, end - begin), vocab, hp.max_len);
        forward(batch, params, hp, Mode::kInfer, nullptr, tr);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto& pred = out[begin + b];
            const auto probs = tr.item_probs(b);
            pred.probs.assign(probs.begin(), probs.end());
            pred.label = argmax(probs);
            if (attention) {
                const auto a = tr.item_alpha(b);
                pred.attention.assign(a.begin(), a.end());
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, num_batches));
    if (threads == 1) {
        ForwardTrace<T> tr;
        for (std::size_t bi = 0; bi < num_batches; ++bi) run(bi, tr);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    ForwardTrace<T> tr;
                    for (std::size_t bi = next++; bi < num_batches; bi = next++) run(bi, tr);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<Prediction> Classifier::predict(std::span<const std::string> texts, const PredictOptions& options) const {
    return lidkit::predict<float>(texts, vocab, params, hp, options);
}

#define LIDKIT_INSTANTIATE_MODEL(T)                                                                                   \
    template struct ModelParams<T>;                                                                                   \
    template void check_shapes<T>(const ModelParams<T>&, const Hyperparams&);                                         \
    template EmbeddedBatch<T> embed<T>(const Batch&, const ModelParams<T>&);                                          \
    template Tensor<T> conv_ngram<T>(const Tensor<T>&, const ModelParams<T>&, const Hyperparams&);                    \
    template std::vector<T> pool_max<T>(const Tensor<T>&, std::span<const std::uint8_t>);                            \
    template AttentionPool<T> pool_attention<T>(const Tensor<T>&, const ModelParams<T>&,                             \
                                                std::span<const std::uint8_t>);                                      \
    template void forward<T>(const Batch&, const ModelParams<T>&, const Hyperparams&, Mode, Rng*, ForwardTrace<T>&); \
    template ForwardTrace<T> forward<T>(const Batch&, const ModelParams<T>&, const Hyperparams&, Mode, Rng*);         \
    template double batch_loss<T>(const ForwardTrace<T>&, std::span<const std::size_t>);                             \
    template void backward<T>(const ForwardTrace<T>&, std::span<const std::size_t>, const ModelParams<T>&,          \
                              const Hyperparams&, ModelParams<T>&);                                                  \
    template ModelParams<T> backward<T>(const ForwardTrace<T>&, std::span<const std::size_t>, const ModelParams<T>&, \
                                        const Hyperparams&);                                                         \
    template std::size_t argmax<T>(std::span<const T>);                                                               \
    template std::vector<Prediction> predict<T>(std::span<const std::string>, const CharVocab&,                      \
                                                const ModelParams<T>&, const Hyperparams&, const PredictOptions&);

LIDKIT_INSTANTIATE_MODEL(float)
LIDKIT_INSTANTIATE_MODEL(double)

}  // namespace lidkit
