#pragma once

// Synthetic corpora shared by unit and acceptance tests.

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/toxtopic.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return TOXTOPIC_TEST_DATA_DIR; }

struct PlantedCorpus {
    toxtopic::Vocabulary vocab;
    std::vector<toxtopic::BowDocument> docs;
    std::vector<std::size_t> source;  // planted topic per doc
    std::vector<std::string> topic_words[2];
};

/// n_docs documents alternating between two disjoint 50-word vocabularies.
/// Each token comes from the document's own source with probability
/// own_share, otherwise from the other source.
inline PlantedCorpus planted_corpus(std::size_t n_docs = 500, std::size_t doc_len = 30,
                                    double own_share = 0.9, std::uint64_t seed = 2024) {
    PlantedCorpus pc;
    for (int t = 0; t < 2; ++t)
        for (int i = 0; i < 50; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%c%03d", t == 0 ? 'p' : 'q', i);
            pc.topic_words[t].push_back(buf);
        }
    toxtopic::Rng rng(seed);
    std::vector<toxtopic::TokenSequence> tokens;
    for (std::size_t d = 0; d < n_docs; ++d) {
        const std::size_t src = d % 2;
        toxtopic::TokenSequence doc;
        for (std::size_t i = 0; i < doc_len; ++i) {
            const std::size_t from = rng.uniform() < own_share ? src : 1 - src;
            doc.push_back(pc.topic_words[from][rng.below(50)]);
        }
        tokens.push_back(std::move(doc));
        pc.source.push_back(src);
    }
    pc.vocab = toxtopic::build_vocab(tokens, 1);
    for (std::size_t d = 0; d < tokens.size(); ++d)
        pc.docs.push_back(toxtopic::to_bow(tokens[d], pc.vocab, d));
    return pc;
}

// Fraction of docs whose dominant topic matches the planted source under the
// better of the two topic labelings.
inline double best_permutation_accuracy(const std::vector<std::size_t>& assigned,
                                        const std::vector<std::size_t>& source) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < assigned.size(); ++i) same += assigned[i] == source[i];
    const std::size_t best = std::max(same, assigned.size() - same);
    return static_cast<double>(best) / static_cast<double>(assigned.size());
}

inline constexpr std::array<std::array<std::string_view, 12>, 3> kTopicVocab{{
    {"apple", "banana", "cherry", "grape", "lemon", "mango", "melon", "peach", "pear", "plum",
     "guava", "kiwi"},
    {"anvil", "hammer", "chisel", "drill", "wrench", "saw", "lathe", "vise", "clamp", "file",
     "rasp", "awl"},
    {"violin", "cello", "flute", "oboe", "harp", "drum", "piano", "organ", "tuba", "horn", "lute",
     "fife"},
}};
inline constexpr std::array<std::string_view, 3> kCueWords{"zorp", "quib", "flarn"};

/// Three disjoint-vocabulary topics, each doc carrying one of three cue
/// words. In topic t, cue j means label (t + j) mod 3: linear inside each
/// topic, but the cyclic pattern is not linearly separable on the pooled data.
inline std::string topic_dependent_csv(std::size_t per_cell = 20, std::uint64_t seed = 99) {
    static const char* labels[] = {"non-toxic", "maybe", "toxic"};
    static const char* genders[] = {"man", "woman", "non-binary"};
    static const char* ethnicities[] = {"asian", "black", "white", "latino/latina"};
    toxtopic::Rng rng(seed);
    std::string out = "instance_id,text,annotator_id,gender,ethnicity,label\n";
    std::uint64_t id = 1;
    for (std::size_t rep = 0; rep < per_cell; ++rep) {
        for (std::size_t t = 0; t < 3; ++t) {
            for (std::size_t j = 0; j < 3; ++j) {
                std::vector<std::string> words;
                for (int w = 0; w < 6; ++w) words.emplace_back(kTopicVocab[t][rng.below(12)]);
                words.emplace_back(kCueWords[j]);
                words.emplace_back(kCueWords[j]);
                rng.shuffle(std::span(words));
                std::string text;
                for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
                const char* label = labels[(t + j) % 3];
                for (int a = 0; a < 3; ++a) {
                    const std::uint64_t ann = (id + static_cast<std::uint64_t>(a)) % 7;
                    out += std::to_string(id) + "," + text + ",ann" + std::to_string(ann) + "," +
                           genders[ann % 3] + "," + ethnicities[ann % 4] + "," + label + "\n";
                }
                ++id;
            }
        }
    }
    return out;
}

inline nlohmann::json topic_dependent_config(const std::filesystem::path& csv_path) {
    return nlohmann::json{
        {"dataset", {{"path", csv_path.string()}, {"test_ratio", 0.2}, {"split_seed", 42}}},
        {"preprocess", {{"min_count", 2}}},
        {"lda", {{"k", 3}, {"iterations", 300}, {"seed", 11}}},
        {"head", {{"learning_rate", 0.5}, {"epochs", 70}, {"batch_size", 32}}},
        {"experiment", {{"seeds", {0, 1, 2, 3, 9}}}},
    };
}

}  // namespace fixtures
