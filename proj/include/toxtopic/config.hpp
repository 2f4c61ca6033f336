#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxtopic/error.hpp"
#include "toxtopic/eval.hpp"
#include "toxtopic/head.hpp"
#include "toxtopic/io.hpp"
#include "toxtopic/lda.hpp"
#include "toxtopic/textprep.hpp"

namespace toxtopic {

// "full" or "topic:<i>".
struct SplitId {
    bool is_topic = false;
    TopicId topic = 0;

    static SplitId full() { return {}; }
    static SplitId of_topic(TopicId t) { return {true, t}; }

    static SplitId parse(std::string_view s) {
        if (s == "full") return full();
        if (s.starts_with("topic:")) {
            if (const auto n = detail::parse_u64(s.substr(6)))
                return of_topic(static_cast<TopicId>(*n));
        }
        throw ValidationError("bad split name '" + std::string(s) +
                              "' (expected \"full\" or \"topic:<i>\")");
    }

    std::string name() const { return is_topic ? "topic:" + std::to_string(topic) : "full"; }
    // Filesystem-safe form used in confusion_<stem>.csv.
    std::string file_stem() const { return is_topic ? "topic_" + std::to_string(topic) : "full"; }

    bool operator==(const SplitId&) const = default;
};

enum class FeatureProvider { tfidf, embeddings };

struct BaselineSource {
    std::string name;
    std::filesystem::path path;
};

struct ExperimentConfig {
    struct Dataset {
        std::filesystem::path path;
        std::vector<std::string> label_map{"non-toxic", "maybe", "toxic"};
        double test_ratio = 0.2;
        std::uint64_t split_seed = 42;
    } dataset;

    struct Preprocess {
        std::string stopwords{kBuiltinStopwordsName};
        std::uint64_t min_count = 2;
    } preprocess;

    LdaConfig lda;

    struct Features {
        FeatureProvider provider = FeatureProvider::tfidf;
        std::optional<std::filesystem::path> embeddings_path;
    } features;

    // The per-run seed comes from experiment.seeds; head.seed is unused.
    TrainConfig head;

    struct Experiment {
        std::vector<std::uint64_t> seeds{0, 1, 2, 3, 9};
        std::vector<SplitId> splits;  // empty in JSON -> topic:0..k-1 then full
        std::vector<DemographicField> demographic_fields{DemographicField::gender,
                                                         DemographicField::ethnicity};
        std::vector<BaselineSource> baselines;
        std::string model_name = "head";
        std::size_t threads = 1;
        bool save_models = false;
    } experiment;

    std::filesystem::path output_dir = "results";

    LabelSchema schema() const { return LabelSchema(dataset.label_map); }

    void validate() const {
        if (dataset.path.empty()) throw ValidationError("config: dataset.path is required");
        schema();
        if (!(dataset.test_ratio > 0.0 && dataset.test_ratio < 1.0))
            throw ValidationError("config: dataset.test_ratio must lie in (0, 1)");
        if (preprocess.min_count < 1) throw ValidationError("config: preprocess.min_count must be >= 1");
        lda.validate();
        head.validate();
        if (features.provider == FeatureProvider::embeddings && !features.embeddings_path)
            throw ValidationError("config: provider \"embeddings\" requires features.embeddings_path");
        if (experiment.seeds.empty()) throw ValidationError("config: experiment.seeds is empty");
        if (std::set(experiment.seeds.begin(), experiment.seeds.end()).size() !=
            experiment.seeds.size())
            throw ValidationError("config: experiment.seeds contains duplicates");
        if (experiment.splits.empty()) throw ValidationError("config: experiment.splits is empty");
        for (std::size_t i = 0; i < experiment.splits.size(); ++i) {
            const auto& s = experiment.splits[i];
            if (s.is_topic && s.topic >= lda.k)
                throw ValidationError("config: split " + s.name() + " needs topic < lda.k (" +
                                      std::to_string(lda.k) + ")");
            for (std::size_t j = 0; j < i; ++j)
                if (experiment.splits[j] == s)
                    throw ValidationError("config: duplicate split " + s.name());
        }
        std::set<std::string_view> names;
        for (const auto& b : experiment.baselines) {
            if (b.name.empty()) throw ValidationError("config: baseline with empty name");
            if (!names.insert(b.name).second)
                throw ValidationError("config: duplicate baseline name " + b.name);
        }
        if (experiment.threads < 1) throw ValidationError("config: experiment.threads must be >= 1");
    }
};

inline std::vector<SplitId> default_splits(std::size_t k) {
    std::vector<SplitId> out;
    for (TopicId t = 0; t < k; ++t) out.push_back(SplitId::of_topic(t));
    out.push_back(SplitId::full());
    return out;
}

namespace detail {

using json = nlohmann::json;

inline void require_object(const json& j, std::string_view where,
                           std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ValidationError("config: " + std::string(where) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError("config: unknown key '" + std::string(where) + "." + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, std::string_view where) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        const auto& v = j.at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ValidationError("config: " + std::string(where) + "." + key +
                                  " must be a non-negative integer");
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError("config: " + std::string(where) + "." + key + ": " + e.what());
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base,
                                     const std::filesystem::path& p) {
    return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace detail

/// Builds a config from a JSON document. Relative paths resolve against
/// base_dir (normally the config file's directory).
inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {}) {
    using detail::read_opt;
    ExperimentConfig cfg;
    detail::require_object(j, "<root>",
                           {"dataset", "preprocess", "lda", "features", "head", "experiment",
                            "output_dir"});

    if (!j.contains("dataset")) throw ValidationError("config: missing 'dataset' section");
    const auto& ds = j.at("dataset");
    detail::require_object(ds, "dataset", {"path", "label_map", "test_ratio", "split_seed"});
    std::string path;
    read_opt(ds, "path", path, "dataset");
    if (path.empty()) throw ValidationError("config: dataset.path is required");
    cfg.dataset.path = detail::resolve(base_dir, path);
    read_opt(ds, "label_map", cfg.dataset.label_map, "dataset");
    read_opt(ds, "test_ratio", cfg.dataset.test_ratio, "dataset");
    read_opt(ds, "split_seed", cfg.dataset.split_seed, "dataset");

    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        detail::require_object(p, "preprocess", {"stopwords", "min_count"});
        read_opt(p, "stopwords", cfg.preprocess.stopwords, "preprocess");
        read_opt(p, "min_count", cfg.preprocess.min_count, "preprocess");
        if (!cfg.preprocess.stopwords.starts_with("builtin:"))
            cfg.preprocess.stopwords = detail::resolve(base_dir, cfg.preprocess.stopwords).string();
    }

    if (j.contains("lda")) {
        const auto& l = j.at("lda");
        detail::require_object(l, "lda",
                               {"k", "alpha", "beta", "iterations", "inference_iterations", "seed"});
        read_opt(l, "k", cfg.lda.k, "lda");
        read_opt(l, "alpha", cfg.lda.alpha, "lda");
        read_opt(l, "beta", cfg.lda.beta, "lda");
        read_opt(l, "iterations", cfg.lda.iterations, "lda");
        read_opt(l, "inference_iterations", cfg.lda.inference_iterations, "lda");
        read_opt(l, "seed", cfg.lda.seed, "lda");
    }

    if (j.contains("features")) {
        const auto& f = j.at("features");
        detail::require_object(f, "features", {"provider", "embeddings_path"});
        std::string provider = "tfidf";
        read_opt(f, "provider", provider, "features");
        if (provider == "tfidf")
            cfg.features.provider = FeatureProvider::tfidf;
        else if (provider == "embeddings")
            cfg.features.provider = FeatureProvider::embeddings;
        else
            throw ValidationError("config: unknown features.provider '" + provider + "'");
        std::string emb;
        read_opt(f, "embeddings_path", emb, "features");
        if (!emb.empty()) cfg.features.embeddings_path = detail::resolve(base_dir, emb);
    }

    if (j.contains("head")) {
        const auto& h = j.at("head");
        detail::require_object(h, "head",
                               {"learning_rate", "warmup_steps", "epochs", "batch_size", "l2"});
        read_opt(h, "learning_rate", cfg.head.learning_rate, "head");
        read_opt(h, "warmup_steps", cfg.head.warmup_steps, "head");
        read_opt(h, "epochs", cfg.head.epochs, "head");
        read_opt(h, "batch_size", cfg.head.batch_size, "head");
        read_opt(h, "l2", cfg.head.l2, "head");
    }

    std::vector<std::string> split_names;
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        detail::require_object(e, "experiment",
                               {"seeds", "splits", "demographic_fields", "baselines", "model_name",
                                "threads", "save_models"});
        read_opt(e, "seeds", cfg.experiment.seeds, "experiment");
        read_opt(e, "splits", split_names, "experiment");
        if (e.contains("demographic_fields")) {
            std::vector<std::string> fields;
            read_opt(e, "demographic_fields", fields, "experiment");
            cfg.experiment.demographic_fields.clear();
            for (const auto& f : fields)
                cfg.experiment.demographic_fields.push_back(parse_demographic_field(f));
        }
        if (e.contains("baselines")) {
            const auto& arr = e.at("baselines");
            if (!arr.is_array()) throw ValidationError("config: experiment.baselines must be an array");
            for (const auto& b : arr) {
                detail::require_object(b, "experiment.baselines[]", {"name", "path"});
                BaselineSource src;
                std::string p;
                read_opt(b, "name", src.name, "experiment.baselines[]");
                read_opt(b, "path", p, "experiment.baselines[]");
                if (p.empty()) throw ValidationError("config: baseline '" + src.name + "' has no path");
                src.path = detail::resolve(base_dir, p);
                cfg.experiment.baselines.push_back(std::move(src));
            }
        }
        read_opt(e, "model_name", cfg.experiment.model_name, "experiment");
        read_opt(e, "threads", cfg.experiment.threads, "experiment");
        read_opt(e, "save_models", cfg.experiment.save_models, "experiment");
    }
    if (split_names.empty()) {
        cfg.experiment.splits = default_splits(cfg.lda.k);
    } else {
        for (const auto& s : split_names) cfg.experiment.splits.push_back(SplitId::parse(s));
    }

    std::string out_dir = cfg.output_dir.string();
    read_opt(j, "output_dir", out_dir, "<root>");
    cfg.output_dir = detail::resolve(base_dir, out_dir);

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

}  // namespace toxtopic
