#include "lidkit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "lidkit/error.hpp"

namespace lidkit {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("learning rate must be >= 0");
    if (!(decay_rate >= 0.0)) throw UsageError("decay rate must be >= 0");
    if (max_epochs == 0) throw UsageError("max_epochs must be >= 1");
    if (patience == 0 || patience > max_epochs) throw UsageError("patience must be in [1, max_epochs]");
    if (!(clip_rate > 0.0)) throw UsageError("clip rate must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout rate must be in [0, 1)");
    if (batch_size == 0) throw UsageError("batch size must be >= 1");
}

template <typename T>
OptimizerState<T> OptimizerState<T>::for_params(const ModelParams<T>& params) {
    OptimizerState s;
    s.m = params;
    for (auto* t : s.m.tensors()) std::fill(t->values.begin(), t->values.end(), T(0));
    s.v = s.m;
    return s;
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, OptimizerState<T>& state, double lr_t) {
    if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
        throw UsageError("adam_step: gradient or optimizer state shape mismatch");
    }
    auto gt = grads.tensors();
    for (std::size_t t = 0; t < gt.size(); ++t) {
        for (T g : gt[t]->values) {
            if (!std::isfinite(g)) {
                throw DataError("non-finite gradient in parameter '" + std::string(ModelParams<T>::kNames[t]) + "'");
            }
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
    const T step = static_cast<T>(lr_t / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(state.eps);

    auto pt = params.tensors();
    auto mt = state.m.tensors();
    auto vt = state.v.tensors();
    for (std::size_t t = 0; t < pt.size(); ++t) {
        T* p = pt[t]->data();
        T* m = mt[t]->data();
        T* v = vt[t]->data();
        const T* g = gt[t]->data();
        const std::size_t begin = t == 0 ? pt[t]->cols : 0;  // PAD row of the embedding
        for (std::size_t i = begin; i < pt[t]->size(); ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            p[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
        }
    }
}

template <typename T>
double global_norm(const ModelParams<T>& grads) {
    double sum = 0.0;
    for (const auto* t : grads.tensors()) {
        for (T g : t->values) sum += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sum);
}

template <typename T>
double clip_gradients(ModelParams<T>& grads, double clip_rate) {
    const double norm = global_norm(grads);
    if (norm > clip_rate) {
        const T scale = static_cast<T>(clip_rate / norm);
        for (auto* t : grads.tensors()) {
            for (T& g : t->values) g *= scale;
        }
    }
    return norm;
}

double decayed_lr(std::size_t epoch, const TrainConfig& cfg) {
    return cfg.lr / (1.0 + cfg.decay_rate * static_cast<double>(epoch));
}

bool TrainReport::same_run(const TrainReport& o) const {
    return languages == o.languages && train_records == o.train_records && valid_records == o.valid_records &&
           epochs == o.epochs && best_epoch == o.best_epoch && best_valid_accuracy == o.best_valid_accuracy &&
           stop_reason == o.stop_reason;
}

std::string TrainReport::to_json(const Hyperparams& hp, const TrainConfig& cfg) const {
    nlohmann::ordered_json j;
    j["languages"] = languages;
    j["train_records"] = train_records;
    j["valid_records"] = valid_records;
    j["best_epoch"] = best_epoch;
    j["best_valid_accuracy"] = best_valid_accuracy;
    j["stop_reason"] = stop_reason;
    j["wall_seconds"] = wall_seconds;
    j["hyperparams"] = {{"embed_dim", hp.embed_dim},       {"conv_filters", hp.conv_filters},
                        {"region", hp.region},             {"hidden_dim", hp.hidden_dim},
                        {"head", std::string(head_name(hp.head))}, {"max_len", hp.max_len}};
    j["config"] = {{"lr", cfg.lr},
                   {"decay_rate", cfg.decay_rate},
                   {"max_epochs", cfg.max_epochs},
                   {"patience", cfg.patience},
                   {"clip_rate", cfg.clip_rate},
                   {"dropout", cfg.dropout},
                   {"batch_size", cfg.batch_size},
                   {"seed", cfg.seed}};
    auto& ep = j["epochs"] = nlohmann::ordered_json::array();
    for (const auto& e : epochs) {
        ep.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"train_loss", e.train_loss},
                      {"valid_accuracy", e.valid_accuracy},
                      {"valid_loss", e.valid_loss}});
    }
    return j.dump(2) + "\n";
}

namespace {

Batch gather(std::span<const Encoded> items, std::span<const std::size_t> gold, std::span<const std::size_t> pick,
             std::vector<std::size_t>& batch_gold) {
    std::vector<Encoded> chosen;
    chosen.reserve(pick.size());
    batch_gold.clear();
    for (std::size_t i : pick) {
        chosen.push_back(items[i]);
        batch_gold.push_back(gold[i]);
    }
    return Batch::from_encoded(chosen);
}

}  // namespace

template <typename T>
SplitScore score_split(std::span<const Encoded> items, std::span<const std::size_t> gold,
                       const ModelParams<T>& params, const Hyperparams& hp, std::size_t batch_size) {
    SplitScore score;
    if (items.empty()) return score;
    ForwardTrace<T> tr;
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t begin = 0; begin < items.size(); begin += batch_size) {
        const std::size_t end = std::min(items.size(), begin + batch_size);
        const Batch batch = Batch::from_encoded(items.subspan(begin, end - begin));
        forward(batch, params, hp, Mode::kInfer, nullptr, tr);
        const auto g = gold.subspan(begin, end - begin);
        loss += batch_loss(tr, g) * static_cast<double>(end - begin);
        for (std::size_t b = 0; b < batch.size(); ++b) correct += argmax(tr.item_probs(b)) == g[b] ? 1 : 0;
    }
    score.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
    score.loss = loss / static_cast<double>(items.size());
    return score;
}

TrainResult train(std::span<const LabeledText> train_set, std::span<const LabeledText> valid_set,
                  const CharVocab& vocab, const std::vector<std::string>& languages, Hyperparams hp,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty() || valid_set.empty()) throw DataError("training and validation splits must be non-empty");
    if (hp.num_languages != languages.size()) throw UsageError("num_languages does not match the language list");
    hp.dropout = cfg.dropout;
    hp.validate();

    const auto start = std::chrono::steady_clock::now();
    const auto train_gold = label_indices(train_set, languages);
    const auto valid_gold = label_indices(valid_set, languages);
    std::vector<Encoded> train_items, valid_items;
    train_items.reserve(train_set.size());
    valid_items.reserve(valid_set.size());
    for (const auto& r : train_set) train_items.push_back(vocab.encode(r.text, hp.max_len));
    for (const auto& r : valid_set) valid_items.push_back(vocab.encode(r.text, hp.max_len));

    Rng rng(cfg.seed);
    auto params = ModelParams<float>::glorot(hp, vocab.table_size(), rng);
    auto state = OptimizerState<float>::for_params(params);

    TrainResult result;
    result.params = params;
    auto& report = result.report;
    report.languages = languages;
    report.train_records = train_set.size();
    report.valid_records = valid_set.size();
    report.stop_reason = "max_epochs";

    std::vector<std::size_t> order(train_items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> batch_gold;
    ForwardTrace<float> tr;
    ModelParams<float> grads;
    double best_loss = 0.0;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = decayed_lr(epoch, cfg);
        rng.shuffle(std::span<std::size_t>(order));

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0, bi = 0; begin < order.size(); begin += cfg.batch_size, ++bi) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            if (end == begin) continue;
            const Batch batch = gather(train_items, train_gold,
                                       std::span<const std::size_t>(order).subspan(begin, end - begin), batch_gold);
            forward(batch, params, hp, Mode::kTrain, &rng, tr);
            const double loss = batch_loss(tr, batch_gold);
            if (!std::isfinite(loss)) {
                throw DataError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(bi));
            }
            backward(tr, batch_gold, params, hp, grads);
            clip_gradients(grads, cfg.clip_rate);
            adam_step(params, grads, state, stats.lr);
            loss_sum += loss * static_cast<double>(end - begin);
            seen += end - begin;
        }
        stats.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;

        const auto score = score_split<float>(valid_items, valid_gold, params, hp, cfg.batch_size);
        stats.valid_accuracy = score.accuracy;
        stats.valid_loss = score.loss;
        report.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);

        const bool improved = epoch == 0 || score.accuracy > report.best_valid_accuracy ||
                              (score.accuracy == report.best_valid_accuracy && score.loss < best_loss);
        if (improved) {
            result.params = params;
            report.best_epoch = epoch;
            report.best_valid_accuracy = score.accuracy;
            best_loss = score.loss;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            report.stop_reason = "patience";
            break;
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

#define LIDKIT_INSTANTIATE_TRAINING(T)                                                                         \
    template struct OptimizerState<T>;                                                                         \
    template void adam_step<T>(ModelParams<T>&, const ModelParams<T>&, OptimizerState<T>&, double);            \
    template double global_norm<T>(const ModelParams<T>&);                                                     \
    template double clip_gradients<T>(ModelParams<T>&, double);                                                \
    template SplitScore score_split<T>(std::span<const Encoded>, std::span<const std::size_t>,                 \
                                       const ModelParams<T>&, const Hyperparams&, std::size_t);

LIDKIT_INSTANTIATE_TRAINING(float)
LIDKIT_INSTANTIATE_TRAINING(double)

}  // namespace lidkit
