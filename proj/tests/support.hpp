#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "lidkit/model.hpp"
#include "lidkit/rng.hpp"
#include "lidkit/vocab.hpp"

namespace lidkit::testing {

// d=4, d_cnn=6, m=3, d_hd=5, L=3.
inline Hyperparams tiny_hp(Head head, double dropout = 0.0) {
    Hyperparams hp;
    hp.embed_dim = 4;
    hp.conv_filters = 6;
    hp.set_region(3);
    hp.hidden_dim = 5;
    hp.num_languages = 3;
    hp.head = head;
    hp.dropout = dropout;
    return hp;
}

// Random batch of ids in [1, vocab_rows) with the given lengths.
inline Batch random_batch(std::vector<std::size_t> lengths, std::size_t vocab_rows, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Encoded> items;
    for (std::size_t n : lengths) {
        Encoded e;
        for (std::size_t i = 0; i < n; ++i) e.ids.push_back(static_cast<TokenId>(1 + rng.below(vocab_rows - 1)));
        e.length = n;
        items.push_back(std::move(e));
    }
    return Batch::from_encoded(items);
}

// Random strings over a mixed alphabet, including characters outside any small vocabulary.
inline std::vector<std::string> random_texts(std::size_t count, std::size_t max_chars, std::uint64_t seed) {
    static const std::vector<std::string> alphabet = {"a", "b", "c", "e", "n", "o", "s", "t", " ", "é", "ß",
                                                      "ñ", "ạ", "ư", "ζ", "中", "@", "#", "/", ".", "1", "😀"};
    Rng rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t n = rng.below(max_chars + 1);
        std::string s;
        for (std::size_t k = 0; k < n; ++k) s += alphabet[rng.below(alphabet.size())];
        out.push_back(std::move(s));
    }
    return out;
}

// Glorot weights plus small random biases, over a vocabulary drawn from random_texts.
inline Classifier random_classifier(Head head, std::size_t num_languages = 3, std::uint64_t seed = 11) {
    Classifier c;
    c.hp.head = head;
    c.hp.num_languages = num_languages;
    c.hp.dropout = 0.0;
    std::vector<LabeledText> sample;
    for (auto& t : random_texts(200, 40, seed)) sample.push_back({t, "xx", ""});
    c.vocab = CharVocab::build(sample, 3);
    for (std::size_t l = 0; l < num_languages; ++l) c.languages.push_back("l" + std::to_string(l));
    Rng rng(seed);
    c.params = ModelParams<float>::glorot(c.hp, c.vocab.table_size(), rng);
    for (auto* t : {&c.params.conv_b, &c.params.hidden_b, &c.params.out_b}) {
        for (auto& v : t->values) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lidkit_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lidkit::testing
