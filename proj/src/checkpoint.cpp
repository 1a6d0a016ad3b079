#include "lidkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include <unistd.h>

#include "lidkit/error.hpp"
#include "lidkit/utf8.hpp"

namespace lidkit {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void size(std::size_t v) {
        if (v > 0xffffffffULL) throw UsageError("checkpoint field too large");
        u32(static_cast<std::uint32_t>(v));
    }
    void str(std::string_view s) {
        size(s.size());
        out_.append(s);
    }
    std::string& bytes() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw IntegrityError("checkpoint is truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::size_t kHeaderBytes = 8;
constexpr std::size_t kChecksumBytes = 8;

}  // namespace

std::string serialize_checkpoint(const Classifier& model, const TrainConfig& config) {
    check_shapes(model.params, model.hp);
    if (model.vocab.table_size() != model.params.embedding.rows) {
        throw UsageError("vocabulary size does not match the embedding table");
    }
    if (model.languages.size() != model.hp.num_languages) {
        throw UsageError("language list does not match num_languages");
    }
    Writer w;
    for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u32(kCheckpointVersion);

    const auto& hp = model.hp;
    w.size(hp.embed_dim);
    w.size(hp.conv_filters);
    w.size(hp.region);
    w.size(hp.hidden_dim);
    w.size(hp.num_languages);
    w.u8(static_cast<std::uint8_t>(hp.head));
    w.f64(hp.dropout);
    w.size(hp.max_len);

    w.f64(config.lr);
    w.f64(config.decay_rate);
    w.size(config.max_epochs);
    w.size(config.patience);
    w.f64(config.clip_rate);
    w.f64(config.dropout);
    w.size(config.batch_size);
    w.u64(config.seed);

    w.size(model.vocab.min_freq());
    w.size(model.vocab.size());
    std::string chars;
    for (char32_t c : model.vocab.chars()) utf8::append(chars, c);
    w.str(chars);

    w.size(model.languages.size());
    for (const auto& l : model.languages) w.str(l);

    const auto tensors = model.params.tensors();
    w.size(tensors.size());
    for (const auto* t : tensors) {
        w.size(t->rows);
        w.size(t->cols);
        for (float v : t->values) w.f32(v);
    }

    auto& bytes = w.bytes();
    const auto* payload = reinterpret_cast<const std::uint8_t*>(bytes.data()) + kHeaderBytes;
    w.u64(fnv1a64({payload, bytes.size() - kHeaderBytes}));
    return std::move(bytes);
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes + kChecksumBytes ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw IntegrityError("not a lidkit checkpoint (bad magic)");
    }
    Reader header(bytes.subspan(4, 4));
    const std::uint32_t version = header.u32();
    if (version != kCheckpointVersion) {
        throw IntegrityError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                             std::to_string(kCheckpointVersion) + ")");
    }
    const auto payload = bytes.subspan(kHeaderBytes, bytes.size() - kHeaderBytes - kChecksumBytes);
    Reader tail(bytes.last(kChecksumBytes));
    if (tail.u64() != fnv1a64(payload)) throw IntegrityError("checkpoint checksum mismatch");

    Reader r(payload);
    Checkpoint ck;
    auto& hp = ck.model.hp;
    hp.embed_dim = r.u32();
    hp.conv_filters = r.u32();
    hp.set_region(r.u32());
    hp.hidden_dim = r.u32();
    hp.num_languages = r.u32();
    const std::uint8_t head = r.u8();
    if (head > 1) throw IntegrityError("checkpoint names an unknown head");
    hp.head = static_cast<Head>(head);
    hp.dropout = r.f64();
    hp.max_len = r.u32();

    auto& cfg = ck.config;
    cfg.lr = r.f64();
    cfg.decay_rate = r.f64();
    cfg.max_epochs = r.u32();
    cfg.patience = r.u32();
    cfg.clip_rate = r.f64();
    cfg.dropout = r.f64();
    cfg.batch_size = r.u32();
    cfg.seed = r.u64();

    const std::size_t min_freq = r.u32();
    const std::size_t vocab_size = r.u32();
    const std::u32string chars = utf8::decode(r.str());
    if (chars.size() != vocab_size) throw IntegrityError("checkpoint vocabulary length mismatch");
    try {
        ck.model.vocab = CharVocab(std::vector<char32_t>(chars.begin(), chars.end()), min_freq);
    } catch (const Error& e) {
        throw IntegrityError(std::string("checkpoint vocabulary is invalid: ") + e.what());
    }

    const std::size_t num_langs = r.u32();
    for (std::size_t i = 0; i < num_langs; ++i) ck.model.languages.push_back(r.str());

    auto tensors = ck.model.params.tensors();
    if (r.u32() != tensors.size()) throw IntegrityError("checkpoint tensor count mismatch");
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        const std::size_t rows = r.u32(), cols = r.u32();
        if (cols != 0 && rows > payload.size() / 4 / cols) throw IntegrityError("checkpoint is truncated");
        *tensors[t] = Tensor<float>(rows, cols);
        for (float& v : tensors[t]->values) v = r.f32();
    }
    if (!r.done()) throw IntegrityError("trailing bytes in checkpoint payload");

    try {
        check_shapes(ck.model.params, hp);
    } catch (const Error& e) {
        throw IntegrityError(std::string("checkpoint is inconsistent: ") + e.what());
    }
    if (ck.model.vocab.table_size() != ck.model.params.embedding.rows || num_langs != hp.num_languages) {
        throw IntegrityError("checkpoint is inconsistent: vocabulary or language count does not match tensors");
    }
    return ck;
}

void save_checkpoint(const Classifier& model, const TrainConfig& config, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(model, config);
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw DataError("cannot write checkpoint: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move checkpoint into place: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw DataError("cannot read checkpoint: " + path.string());
    return deserialize_checkpoint(bytes);
}

}  // namespace lidkit
