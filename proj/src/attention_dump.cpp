#include "lidkit/attention_dump.hpp"

#include <algorithm>
#include <cstdio>

#include "lidkit/error.hpp"
#include "lidkit/utf8.hpp"

namespace lidkit {

DumpFormat parse_dump_format(std::string_view name) {
    if (name == "tsv") return DumpFormat::kTsv;
    if (name == "html") return DumpFormat::kHtml;
    throw UsageError("unknown dump format '" + std::string(name) + "' (expected tsv or html)");
}

std::vector<AttentionEntry> attention_dump(const Classifier& model, std::span<const std::string> texts,
                                           std::size_t batch_size) {
    if (model.hp.head != Head::kAttention) {
        throw UsageError("attention dump needs an attention-head model; this checkpoint uses the " +
                         std::string(head_name(model.hp.head)) + " head");
    }
    PredictOptions opts;
    opts.batch_size = batch_size;
    opts.with_attention = true;
    const auto preds = model.predict(texts, opts);

    std::vector<AttentionEntry> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        AttentionEntry e;
        e.text = utf8::sanitize(texts[i]);
        e.label = model.languages[preds[i].label];
        e.probability = preds[i].probs[preds[i].label];
        e.weights = preds[i].attention;
        const auto cps = utf8::decode(texts[i]);
        for (std::size_t p = 0; p < e.weights.size(); ++p) {
            std::string ch;
            if (p < cps.size()) utf8::append(ch, cps[p]);
            e.chars.push_back(std::move(ch));
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

std::string escape_field(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\t':
                out += "\\t";
                break;
            case '\n':
                out += "\\n";
                break;
            case '\r':
                out += "\\r";
                break;
            case '\\':
                out += "\\\\";
                break;
            default:
                out += c;
        }
    }
    return out;
}

std::string escape_html(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

}  // namespace

void write_attention_tsv(std::ostream& out, std::span<const AttentionEntry> entries) {
    out << "index\tlabel\tprobability\tposition\tchar\tweight\n";
    char buf[64];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        std::snprintf(buf, sizeof buf, "%.6f", e.probability);
        const std::string prob = buf;
        for (std::size_t p = 0; p < e.weights.size(); ++p) {
            std::snprintf(buf, sizeof buf, "%.6f", e.weights[p]);
            out << i << '\t' << e.label << '\t' << prob << '\t' << p << '\t' << escape_field(e.chars[p]) << '\t'
                << buf << '\n';
        }
    }
}

void write_attention_html(std::ostream& out, std::span<const AttentionEntry> entries) {
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>attention</title>\n"
           "<style>body{font-family:sans-serif;margin:2em}"
           ".t{margin:0.6em 0;font-family:monospace;font-size:16px;white-space:pre-wrap}"
           ".t span{padding:1px 0}.meta{color:#555;font-size:12px}</style></head><body>\n";
    char buf[96];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const double top = e.weights.empty() ? 1.0 : *std::max_element(e.weights.begin(), e.weights.end());
        std::snprintf(buf, sizeof buf, "%.4f", e.probability);
        out << "<div class=\"meta\">#" << i << " " << escape_html(e.label) << " p=" << buf << "</div>\n<div class=\"t\">";
        for (std::size_t p = 0; p < e.weights.size(); ++p) {
            const double shade = top > 0.0 ? e.weights[p] / top : 0.0;
            std::snprintf(buf, sizeof buf, "<span style=\"background:rgba(214,39,40,%.3f)\" title=\"%.6f\">", shade,
                          e.weights[p]);
            out << buf << escape_html(e.chars[p]) << "</span>";
        }
        out << "</div>\n";
    }
    out << "</body></html>\n";
}

}  // namespace lidkit
