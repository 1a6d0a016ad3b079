// lidkit: command-line front end (dataset building, training, evaluation,
// prediction, benchmarking and attention inspection).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lidkit/attention_dump.hpp"
#include "lidkit/checkpoint.hpp"
#include "lidkit/corpus.hpp"
#include "lidkit/error.hpp"
#include "lidkit/metrics.hpp"
#include "lidkit/simd/kernels.hpp"
#include "lidkit/training.hpp"
#include "lidkit/utf8.hpp"

namespace {

using namespace lidkit;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw DataError("cannot write " + path);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = normalize_lang_code(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Lines from a file, or stdin when path is empty or "-".
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (!path.empty() && path != "-") {
        file.open(path, std::ios::binary);
        if (!file) throw DataError("cannot open " + path);
        in = &file;
    }
    std::string line;
    while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        fn(line);
    }
}

// Texts from a split file; lines without a tab are taken whole.
std::vector<std::string> read_texts(const std::string& path) {
    std::vector<std::string> texts;
    for_each_line(path, [&](const std::string& line) {
        const auto tab = line.find('\t');
        texts.push_back(tab == std::string::npos ? line : line.substr(tab + 1));
    });
    return texts;
}

struct BuildArgs {
    std::string input, format = "jsonl", languages, name = "dataset", out_dir = ".";
    std::size_t train = 7000, valid = 3000, test = 3000, min_chars = 1;
    std::uint64_t seed = 1;
    JsonlFields fields;
};

int run_build(const BuildArgs& a) {
    SplitSpec spec;
    spec.name = a.name;
    spec.languages = split_csv(a.languages);
    spec.per_lang_train = a.train;
    spec.per_lang_valid = a.valid;
    spec.per_lang_test = a.test;
    spec.seed = a.seed;
    spec.min_chars = a.min_chars;
    FileSource source(a.input, parse_input_format(a.format), a.fields);
    const std::map<std::string, std::string> params{{"input", std::filesystem::path(a.input).filename().string()},
                                                    {"format", a.format},
                                                    {"min_chars", std::to_string(a.min_chars)},
                                                    {"text_field", a.fields.text},
                                                    {"detected_field", a.fields.detected},
                                                    {"declared_field", a.fields.declared}};
    auto manifest = build_balanced_splits(source, spec, a.out_dir, params);
    const auto& st = source.stats();
    std::cerr << "lines " << st.lines << ", malformed " << st.malformed << ", kept " << st.kept << ", dropped "
              << st.dropped << "\n";
    for (const auto& split : kSplitNames) {
        std::cerr << split << ":";
        for (const auto& [lang, n] : manifest.counts[std::string(split)]) std::cerr << " " << lang << "=" << n;
        std::cerr << "\n";
    }
    return 0;
}

struct TrainArgs {
    std::string train, valid, out, report, head = "attention";
    std::size_t embed_dim = 50, filters = 100, region = 5, hidden_dim = 100, min_freq = 5, max_len = kDefaultMaxLen;
    TrainConfig cfg;
    bool quiet = false;
};

int run_train(const TrainArgs& a) {
    const auto train_set = read_split_tsv(a.train);
    const auto valid_set = read_split_tsv(a.valid);
    if (train_set.empty() || valid_set.empty()) throw DataError("training and validation files must be non-empty");
    Classifier model;
    model.vocab = CharVocab::build(train_set, a.min_freq);
    model.languages = collect_languages(train_set);
    auto& hp = model.hp;
    hp.embed_dim = a.embed_dim;
    hp.conv_filters = a.filters;
    hp.set_region(a.region);
    hp.hidden_dim = a.hidden_dim;
    hp.num_languages = model.languages.size();
    hp.head = parse_head(a.head);
    hp.dropout = a.cfg.dropout;
    hp.max_len = a.max_len;
    hp.validate();

    if (!a.quiet) {
        std::cerr << "train " << train_set.size() << " valid " << valid_set.size() << " languages "
                  << model.languages.size() << " vocab " << model.vocab.size() << " head " << head_name(hp.head)
                  << " simd " << simd::isa_name(simd::active_isa()) << "\n";
    }
    const auto on_epoch = [&](const EpochStats& e) {
        if (a.quiet) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "epoch %zu lr %.6f loss %.5f valid_acc %.4f valid_loss %.5f\n", e.epoch + 1,
                      e.lr, e.train_loss, e.valid_accuracy, e.valid_loss);
        std::cerr << buf << std::flush;
    };
    auto result = train(train_set, valid_set, model.vocab, model.languages, hp, a.cfg, on_epoch);
    model.params = std::move(result.params);
    save_checkpoint(model, a.cfg, a.out);
    const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
    write_text(report_path, result.report.to_json(hp, a.cfg));
    if (!a.quiet) {
        std::cerr << "best epoch " << result.report.best_epoch + 1 << " valid_acc " << result.report.best_valid_accuracy
                  << " (" << result.report.stop_reason << ")\n";
    }
    return 0;
}

struct EvalArgs {
    std::string model, test, json;
    std::size_t batch_size = 256, threads = 1;
};

int run_evaluate(const EvalArgs& a) {
    const auto ck = load_checkpoint(a.model);
    const auto test_set = read_split_tsv(a.test);
    const auto r = evaluate(ck.model, test_set, a.batch_size, a.threads);
    std::cout << r.summary_line() << "\n";
    for (const auto& s : r.per_language) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-8s P %.4f  R %.4f  F1 %.4f  n %llu\n", s.language.c_str(), s.precision,
                      s.recall, s.f1, static_cast<unsigned long long>(s.support));
        std::cout << buf;
    }
    if (r.zero_division > 0) std::cerr << "warning: " << r.zero_division << " undefined ratios reported as 0\n";
    if (!a.json.empty()) write_text(a.json, r.to_json());
    return 0;
}

struct PredictArgs {
    std::string model, input;
    std::size_t batch_size = 256, threads = 1;
};

int run_predict(const PredictArgs& a) {
    const auto ck = load_checkpoint(a.model);
    PredictOptions opts;
    opts.batch_size = a.batch_size;
    opts.threads = a.threads;
    const std::size_t chunk = std::max<std::size_t>(a.batch_size * std::max<std::size_t>(a.threads, 1) * 4, 1024);
    std::vector<std::string> lines;
    std::string out;
    char buf[32];
    const auto flush = [&] {
        const auto preds = ck.model.predict(lines, opts);
        out.clear();
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::snprintf(buf, sizeof buf, "\t%.6f\t", preds[i].probs[preds[i].label]);
            out += ck.model.languages[preds[i].label];
            out += buf;
            out += flatten_text(lines[i]);
            out += '\n';
        }
        std::cout << out;
        lines.clear();
    };
    for_each_line(a.input, [&](const std::string& line) {
        lines.push_back(utf8::sanitize(line));
        if (lines.size() >= chunk) flush();
    });
    if (!lines.empty()) flush();
    std::cout.flush();
    return 0;
}

struct BenchArgs {
    std::string model, input, json;
    std::size_t batch_size = 256, repeats = 3, warmup = 2, threads = 1;
};

int run_bench(const BenchArgs& a) {
    const auto ck = load_checkpoint(a.model);
    const auto texts = read_texts(a.input);
    const auto r = bench_throughput(ck.model, texts, a.batch_size, a.warmup, a.repeats, a.threads);
    char buf[200];
    std::snprintf(buf, sizeof buf, "messages %zu batch %zu simd %s: median %.0f msg/s (min %.0f, max %.0f)\n",
                  r.messages, r.batch_size, std::string(simd::isa_name(simd::active_isa())).c_str(), r.median, r.min,
                  r.max);
    std::cout << buf;
    if (!a.json.empty()) write_text(a.json, r.to_json());
    if (!r.labels_stable) throw DataError("predicted labels changed between repeats");
    return 0;
}

struct DumpArgs {
    std::string model, input, out, format = "tsv";
    std::size_t batch_size = 256;
};

int run_dump(const DumpArgs& a) {
    const auto ck = load_checkpoint(a.model);
    const auto format = parse_dump_format(a.format);
    if (ck.model.hp.head != Head::kAttention) {
        throw UsageError("attention-dump needs an attention-head model; this checkpoint uses the " +
                         std::string(head_name(ck.model.hp.head)) + " head");
    }
    std::vector<std::string> texts;
    for_each_line(a.input, [&](const std::string& line) { texts.push_back(line); });
    const auto entries = attention_dump(ck.model, texts, a.batch_size);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty() && a.out != "-") {
        file.open(a.out, std::ios::binary | std::ios::trunc);
        if (!file) throw DataError("cannot write " + a.out);
        out = &file;
    }
    if (format == DumpFormat::kTsv) {
        write_attention_tsv(*out, entries);
    } else {
        write_attention_html(*out, entries);
    }
    out->flush();
    if (!*out) throw DataError("write failed");
    return 0;
}

int run_export_vocab(const std::string& model) {
    const auto ck = load_checkpoint(model);
    std::cout << ck.model.vocab.to_json() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Short-text language identification with a character ngram CNN"};
    app.require_subcommand(1);
    int status = 0;

    BuildArgs build;
    auto* b = app.add_subcommand("build-dataset", "Filter a raw corpus and write balanced train/valid/test splits");
    b->add_option("--input", build.input, "Raw corpus (JSONL or TSV)")->required()->check(CLI::ExistingFile);
    b->add_option("--format", build.format, "jsonl or tsv")->capture_default_str()->envname("LIDKIT_FORMAT");
    b->add_option("--languages", build.languages, "Comma-separated language codes")->required();
    b->add_option("--train", build.train, "Training records per language")->capture_default_str();
    b->add_option("--valid", build.valid, "Validation records per language")->capture_default_str();
    b->add_option("--test", build.test, "Test records per language")->capture_default_str();
    b->add_option("--seed", build.seed, "Sampling seed")->capture_default_str()->envname("LIDKIT_SEED");
    b->add_option("--min-chars", build.min_chars, "Skip texts shorter than this")->capture_default_str();
    b->add_option("--name", build.name, "Output file prefix")->capture_default_str();
    b->add_option("--out-dir", build.out_dir, "Output directory")->capture_default_str();
    b->add_option("--id-field", build.fields.id, "JSON path of the record id")->capture_default_str();
    b->add_option("--text-field", build.fields.text, "JSON path of the text")->capture_default_str();
    b->add_option("--detected-field", build.fields.detected, "JSON path of the detected language")
        ->capture_default_str();
    b->add_option("--declared-field", build.fields.declared, "JSON path of the declared language")
        ->capture_default_str();
    b->callback([&] { status = run_build(build); });

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a model and write a checkpoint plus a JSON report");
    t->add_option("--train", tr.train, "Training split (label TAB text)")->required()->check(CLI::ExistingFile);
    t->add_option("--valid", tr.valid, "Validation split")->required()->check(CLI::ExistingFile);
    t->add_option("--out", tr.out, "Checkpoint path")->required();
    t->add_option("--report", tr.report, "Report path (default: <out>.report.json)");
    t->add_option("--head", tr.head, "attention or maxpool")->capture_default_str()->envname("LIDKIT_HEAD");
    t->add_option("--embed-dim", tr.embed_dim)->capture_default_str()->envname("LIDKIT_EMBED_DIM");
    t->add_option("--filters", tr.filters, "Convolution filters")->capture_default_str()->envname("LIDKIT_FILTERS");
    t->add_option("--region", tr.region, "Region size (odd)")->capture_default_str()->envname("LIDKIT_REGION");
    t->add_option("--hidden-dim", tr.hidden_dim, "Attention hidden size")
        ->capture_default_str()
        ->envname("LIDKIT_HIDDEN_DIM");
    t->add_option("--min-freq", tr.min_freq, "Vocabulary frequency cutoff")
        ->capture_default_str()
        ->envname("LIDKIT_MIN_FREQ");
    t->add_option("--max-len", tr.max_len, "Characters kept per text")->capture_default_str()->envname("LIDKIT_MAX_LEN");
    t->add_option("--lr", tr.cfg.lr)->capture_default_str()->envname("LIDKIT_LR");
    t->add_option("--decay-rate", tr.cfg.decay_rate)->capture_default_str()->envname("LIDKIT_DECAY_RATE");
    t->add_option("--max-epochs", tr.cfg.max_epochs)->capture_default_str()->envname("LIDKIT_MAX_EPOCHS");
    t->add_option("--patience", tr.cfg.patience)->capture_default_str()->envname("LIDKIT_PATIENCE");
    t->add_option("--clip-rate", tr.cfg.clip_rate)->capture_default_str()->envname("LIDKIT_CLIP_RATE");
    t->add_option("--dropout", tr.cfg.dropout)->capture_default_str()->envname("LIDKIT_DROPOUT");
    t->add_option("--batch-size", tr.cfg.batch_size)->capture_default_str()->envname("LIDKIT_BATCH_SIZE");
    t->add_option("--seed", tr.cfg.seed)->capture_default_str()->envname("LIDKIT_SEED");
    t->add_flag("--quiet", tr.quiet, "No per-epoch progress");
    t->callback([&] { status = run_train(tr); });

    EvalArgs ev;
    auto* e = app.add_subcommand("evaluate", "Accuracy, precision, recall, F1 and speed on a labelled split");
    e->add_option("--model", ev.model)->required();
    e->add_option("--test", ev.test)->required()->check(CLI::ExistingFile);
    e->add_option("--json", ev.json, "Also write the full result as JSON");
    e->add_option("--batch-size", ev.batch_size)->capture_default_str()->envname("LIDKIT_BATCH_SIZE");
    e->add_option("--threads", ev.threads)->capture_default_str()->envname("LIDKIT_THREADS");
    e->callback([&] { status = run_evaluate(ev); });

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "Label each input line: label TAB probability TAB text");
    p->add_option("--model", pr.model)->required();
    p->add_option("--input", pr.input, "Input file (default: stdin)");
    p->add_option("--batch-size", pr.batch_size)->capture_default_str()->envname("LIDKIT_BATCH_SIZE");
    p->add_option("--threads", pr.threads)->capture_default_str()->envname("LIDKIT_THREADS");
    p->callback([&] { status = run_predict(pr); });

    BenchArgs be;
    auto* bn = app.add_subcommand("bench", "Measure inference throughput");
    bn->add_option("--model", be.model)->required();
    bn->add_option("--input", be.input, "Texts, one per line (label TAB text accepted)")->required();
    bn->add_option("--batch-size", be.batch_size)->capture_default_str()->envname("LIDKIT_BATCH_SIZE");
    bn->add_option("--repeats", be.repeats)->capture_default_str();
    bn->add_option("--warmup", be.warmup, "Warmup batches")->capture_default_str();
    bn->add_option("--threads", be.threads)->capture_default_str()->envname("LIDKIT_THREADS");
    bn->add_option("--json", be.json, "Also write the result as JSON");
    bn->callback([&] { status = run_bench(be); });

    DumpArgs du;
    auto* d = app.add_subcommand("attention-dump", "Per-character attention weights as TSV or an HTML heatmap");
    d->add_option("--model", du.model)->required();
    d->add_option("--input", du.input, "Texts, one per line (default: stdin)");
    d->add_option("--format", du.format, "tsv or html")->capture_default_str();
    d->add_option("--out", du.out, "Output file (default: stdout)");
    d->add_option("--batch-size", du.batch_size)->capture_default_str();
    d->callback([&] { status = run_dump(du); });

    std::string vocab_model;
    auto* v = app.add_subcommand("export-vocab", "Print the model's character vocabulary as JSON");
    v->add_option("--model", vocab_model)->required();
    v->callback([&] { status = run_export_vocab(vocab_model); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
    } catch (const Error& err) {
        std::cerr << "lidkit: " << err.what() << "\n";
        return static_cast<int>(err.code());
    } catch (const std::exception& err) {
        std::cerr << "lidkit: " << err.what() << "\n";
        return static_cast<int>(ExitCode::kData);
    }
    return status;
}
