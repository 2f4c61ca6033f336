#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "toxtopic/config.hpp"
#include "toxtopic/corpus.hpp"
#include "toxtopic/csv.hpp"
#include "toxtopic/eval.hpp"
#include "toxtopic/features.hpp"
#include "toxtopic/head.hpp"
#include "toxtopic/io.hpp"
#include "toxtopic/lda.hpp"
#include "toxtopic/textprep.hpp"

namespace toxtopic {

struct BaselinePredictions {
    std::string name;
    std::map<InstanceId, ClassIndex> preds;
};

inline const std::string_view kBaselineHeader[] = {"instance_id", "label"};

inline BaselinePredictions parse_baselines(std::string_view content, const LabelSchema& schema,
                                           std::string name = {}) {
    const auto records = detail::parse_utf8_csv(content, "baseline predictions");
    detail::check_header(records.front(), kBaselineHeader, "baseline predictions");
    BaselinePredictions out{std::move(name), {}};
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& f = records[r].fields;
        const std::string where = "baseline row " + std::to_string(r);
        if (f.size() != 2)
            throw SchemaError(where + ": expected 2 fields, got " + std::to_string(f.size()));
        const auto id = detail::parse_u64(f[0]);
        if (!id) throw ValidationError(where + ": bad instance_id '" + f[0] + "'");
        const auto label = schema.index_of(f[1]);
        if (!label) throw ValidationError(where + ": unknown label token '" + f[1] + "'");
        if (!out.preds.emplace(*id, *label).second)
            throw ValidationError(where + ": duplicate instance_id " + std::to_string(*id));
    }
    return out;
}

inline BaselinePredictions ingest_baselines(const std::filesystem::path& path,
                                            const LabelSchema& schema, std::string name = {}) {
    return parse_baselines(io::read_file(path), schema, std::move(name));
}

namespace detail {

inline std::string staged_message(std::string_view stage, const std::exception& e) {
    return std::string(stage) + ": " + e.what();
}

// Runs f, prefixing any library error with the stage name and keeping its type.
template <typename F>
auto staged(std::string_view stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const IoError& e) {
        throw IoError(staged_message(stage, e));
    } catch (const SchemaError& e) {
        throw SchemaError(staged_message(stage, e));
    } catch (const EncodingError& e) {
        throw EncodingError(staged_message(stage, e));
    } catch (const FormatError& e) {
        throw FormatError(staged_message(stage, e));
    } catch (const DivergenceError& e) {
        throw DivergenceError(staged_message(stage, e));
    } catch (const ValidationError& e) {
        throw ValidationError(staged_message(stage, e));
    }
}

}  // namespace detail

// Everything up to and including topic assignment; shared read-only by all
// (split, seed) work items.
struct PreparedData {
    LabelSchema schema;
    DatasetSplit split;
    Vocabulary vocab;
    std::vector<BowDocument> train_bow;
    std::vector<BowDocument> test_bow;
    LdaModel lda;
    std::vector<TopicId> train_topic;
    std::vector<TopicId> test_topic;
};

/// Load, label, split, preprocess, fit LDA on the training half and fold in
/// the test half. Training docs use their fitting-time theta.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData d;
    d.schema = detail::staged("config", [&] { return cfg.schema(); });
    const auto records =
        detail::staged("load_dataset", [&] { return load_dataset(cfg.dataset.path, d.schema); });
    const auto instances = detail::staged("derive_gold_labels", [&] { return derive_gold_labels(records); });
    d.split = detail::staged("split_train_test", [&] {
        return split_train_test(instances, cfg.dataset.test_ratio, cfg.dataset.split_seed);
    });

    const auto stop = detail::staged("stopwords", [&] { return load_stopwords(cfg.preprocess.stopwords); });
    std::vector<TokenSequence> train_tokens, test_tokens;
    for (const auto& inst : d.split.train) train_tokens.push_back(preprocess_text(inst.text, stop));
    for (const auto& inst : d.split.test) test_tokens.push_back(preprocess_text(inst.text, stop));
    d.vocab = detail::staged("build_vocab", [&] { return build_vocab(train_tokens, cfg.preprocess.min_count); });
    for (std::size_t i = 0; i < train_tokens.size(); ++i)
        d.train_bow.push_back(to_bow(train_tokens[i], d.vocab, d.split.train[i].instance_id));
    for (std::size_t i = 0; i < test_tokens.size(); ++i)
        d.test_bow.push_back(to_bow(test_tokens[i], d.vocab, d.split.test[i].instance_id));

    d.lda = detail::staged("fit_lda", [&] { return fit_lda(d.train_bow, d.vocab, cfg.lda); });
    for (const auto& theta : d.lda.doc_theta()) d.train_topic.push_back(dominant_topic(theta));
    for (const auto& doc : d.test_bow) {
        const auto theta = infer_theta(d.lda, doc, derive_seed(cfg.lda.seed, doc.instance_id));
        d.test_topic.push_back(dominant_topic(theta));
    }
    return d;
}

// Row indices (into split.train / split.test) belonging to one split.
struct SplitMembers {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline SplitMembers split_members(const PreparedData& d, const SplitId& split) {
    SplitMembers m;
    for (std::size_t i = 0; i < d.split.train.size(); ++i)
        if (!split.is_topic || d.train_topic[i] == split.topic) m.train.push_back(i);
    for (std::size_t i = 0; i < d.split.test.size(); ++i)
        if (!split.is_topic || d.test_topic[i] == split.topic) m.test.push_back(i);
    return m;
}

struct SplitResult {
    SplitId split;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    bool empty = false;  // train or test portion is empty; no metrics

    std::map<std::uint64_t, double> seed_macro_f1;
    std::map<std::uint64_t, double> seed_micro_f1;
    std::optional<SeedAggregate> aggregate;

    std::vector<InstanceId> test_ids;
    std::vector<ClassIndex> test_gold;
    std::map<std::uint64_t, std::vector<ClassIndex>> seed_preds;
    std::vector<ClassIndex> voted;
    ConfusionMatrix confusion;
    PrfReport voted_scores;
    ClassRates voted_rates;
    std::vector<std::pair<DemographicField, std::vector<GroupMetrics>>> demographics;
};

struct ComparisonRow {
    std::string model;
    std::vector<std::optional<double>> f1;  // one per split, config order
};

struct ExperimentReport {
    LabelSchema schema;
    std::vector<std::uint64_t> seeds;  // ascending
    std::vector<DemographicField> demographic_fields;
    std::vector<SplitResult> splits;
    std::vector<ComparisonRow> comparison;
    std::string topics;  // topics.txt body
};

namespace detail {

struct SeedRun {
    std::vector<ClassIndex> preds;
    HeadModel model;
};

inline std::pair<FeatureMatrix, FeatureMatrix> build_features(const ExperimentConfig& cfg,
                                                              const PreparedData& d,
                                                              const SplitMembers& m,
                                                              const EmbeddingTable* table) {
    if (cfg.features.provider == FeatureProvider::tfidf) {
        std::vector<BowDocument> train, test;
        for (auto i : m.train) train.push_back(d.train_bow[i]);
        for (auto i : m.test) test.push_back(d.test_bow[i]);
        const auto model = fit_tfidf(train, d.vocab);
        return {tfidf_features(model, train), tfidf_features(model, test)};
    }
    std::vector<InstanceId> train_ids, test_ids;
    for (auto i : m.train) train_ids.push_back(d.split.train[i].instance_id);
    for (auto i : m.test) test_ids.push_back(d.split.test[i].instance_id);
    return {embedding_features(*table, train_ids), embedding_features(*table, test_ids)};
}

inline SeedRun run_seed(const ExperimentConfig& cfg, const PreparedData& d, const SplitMembers& m,
                        const std::pair<FeatureMatrix, FeatureMatrix>& feats, std::uint64_t seed) {
    std::vector<ClassIndex> labels;
    for (auto i : m.train) labels.push_back(d.split.train[i].gold_label);
    TrainConfig tc = cfg.head;
    tc.seed = seed;
    SeedRun run;
    run.model = train_head(feats.first, labels, d.schema.size(), tc);
    run.preds = predict_all(run.model, feats.second);
    return run;
}

// Runs jobs[0..n) on up to `threads` workers; results land by index so the
// outcome does not depend on scheduling. The first failing job (by index)
// has its exception rethrown.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min(threads, n);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline std::string format_cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", round4(v));
    return buf;
}

inline constexpr std::string_view kMissingCell = "NA";

/// Scores a baseline on every configured split (macro F1 on each split's test
/// portion). Empty splits yield no value.
inline ComparisonRow score_baseline(const BaselinePredictions& baseline, const PreparedData& d,
                                    const std::vector<SplitId>& splits) {
    ComparisonRow row{baseline.name, {}};
    for (const auto& s : splits) {
        const auto m = split_members(d, s);
        if (m.test.empty()) {
            row.f1.push_back(std::nullopt);
            continue;
        }
        std::vector<ClassIndex> preds, golds;
        for (auto i : m.test) {
            const auto& inst = d.split.test[i];
            auto it = baseline.preds.find(inst.instance_id);
            if (it == baseline.preds.end())
                throw ValidationError("baseline '" + baseline.name +
                                      "' has no prediction for test instance_id " +
                                      std::to_string(inst.instance_id));
            preds.push_back(it->second);
            golds.push_back(inst.gold_label);
        }
        row.f1.push_back(prf_scores(confusion_matrix(preds, golds, d.schema.size())).summary.macro_f1);
    }
    return row;
}

struct RunOptions {
    // Overrides experiment.threads when set.
    std::optional<std::size_t> threads;
    // Directory for per-(split, seed) head artifacts; only used when set.
    std::optional<std::filesystem::path> model_dir;
};

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
    cfg.validate();
    const PreparedData d = prepare_data(cfg);
    const std::size_t C = d.schema.size();

    std::unique_ptr<EmbeddingTable> table;
    if (cfg.features.provider == FeatureProvider::embeddings) {
        table = std::make_unique<EmbeddingTable>(detail::staged(
            "load_embeddings", [&] { return load_embeddings(*cfg.features.embeddings_path); }));
    }

    ExperimentReport report;
    report.schema = d.schema;
    report.seeds = cfg.experiment.seeds;
    std::sort(report.seeds.begin(), report.seeds.end());
    report.demographic_fields = cfg.experiment.demographic_fields;
    report.topics = format_topics(d.lda, 5);

    const auto& splits = cfg.experiment.splits;
    std::vector<SplitMembers> members;
    std::vector<std::optional<std::pair<FeatureMatrix, FeatureMatrix>>> features(splits.size());
    for (std::size_t s = 0; s < splits.size(); ++s) {
        members.push_back(split_members(d, splits[s]));
        const auto& m = members.back();
        if (!m.train.empty() && !m.test.empty()) {
            features[s] = detail::staged("features[" + splits[s].name() + "]", [&] {
                return detail::build_features(cfg, d, m, table.get());
            });
        }
    }

    const std::size_t n_seeds = report.seeds.size();
    std::vector<std::optional<detail::SeedRun>> runs(splits.size() * n_seeds);
    detail::parallel_for(runs.size(), opts.threads.value_or(cfg.experiment.threads),
                         [&](std::size_t job) {
                             const std::size_t s = job / n_seeds;
                             if (!features[s]) return;
                             const auto seed = report.seeds[job % n_seeds];
                             runs[job] = detail::staged(
                                 "train_head[" + splits[s].name() + ", seed " +
                                     std::to_string(seed) + "]",
                                 [&] { return detail::run_seed(cfg, d, members[s], *features[s], seed); });
                         });

    for (std::size_t s = 0; s < splits.size(); ++s) {
        const auto& m = members[s];
        SplitResult r;
        r.split = splits[s];
        r.train_size = m.train.size();
        r.test_size = m.test.size();
        r.empty = !features[s].has_value();
        r.confusion = ConfusionMatrix(C);
        for (auto i : m.test) {
            r.test_ids.push_back(d.split.test[i].instance_id);
            r.test_gold.push_back(d.split.test[i].gold_label);
        }
        if (!r.empty) {
            std::vector<std::vector<ClassIndex>> per_seed;
            for (std::size_t k = 0; k < n_seeds; ++k) {
                const auto seed = report.seeds[k];
                const auto& run = *runs[s * n_seeds + k];
                const auto scores = prf_scores(confusion_matrix(run.preds, r.test_gold, C)).summary;
                r.seed_macro_f1[seed] = scores.macro_f1;
                r.seed_micro_f1[seed] = scores.micro_f1;
                r.seed_preds[seed] = run.preds;
                per_seed.push_back(run.preds);
                if (opts.model_dir) {
                    std::filesystem::create_directories(*opts.model_dir);
                    save_head(run.model, *opts.model_dir / ("head_" + r.split.file_stem() + "_seed" +
                                                            std::to_string(seed) + ".bin"));
                }
            }
            r.aggregate = aggregate_seeds(r.seed_macro_f1);
            r.voted = majority_vote(per_seed);
            r.confusion = confusion_matrix(r.voted, r.test_gold, C);
            r.voted_scores = prf_scores(r.confusion);
            r.voted_rates = class_rates(r.confusion);

            std::map<InstanceId, ClassIndex> by_id;
            std::vector<AnnotationRecord> annotations;
            for (std::size_t i = 0; i < m.test.size(); ++i) {
                const auto& inst = d.split.test[m.test[i]];
                by_id[inst.instance_id] = r.voted[i];
                annotations.insert(annotations.end(), inst.annotations.begin(), inst.annotations.end());
            }
            for (auto field : cfg.experiment.demographic_fields)
                r.demographics.emplace_back(field,
                                            demographic_breakdown(by_id, annotations, field, C));
        }
        report.splits.push_back(std::move(r));
    }

    for (const auto& src : cfg.experiment.baselines) {
        const auto b = detail::staged("ingest_baselines[" + src.name + "]",
                                      [&] { return ingest_baselines(src.path, d.schema, src.name); });
        report.comparison.push_back(
            detail::staged("score_baseline[" + src.name + "]", [&] { return score_baseline(b, d, splits); }));
    }
    ComparisonRow own{cfg.experiment.model_name, {}};
    for (const auto& r : report.splits)
        own.f1.push_back(r.aggregate ? std::optional(r.aggregate->mean) : std::nullopt);
    report.comparison.push_back(std::move(own));
    return report;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) {
    return v ? format_cell(*v) : std::string(kMissingCell);
}

}  // namespace detail

inline std::string render_seed_f1(const ExperimentReport& report) {
    std::vector<std::string> header{"split"};
    for (auto s : report.seeds) header.push_back("seed_" + std::to_string(s));
    header.insert(header.end(), {"average", "stdev"});
    std::string out = csv::join_row(header);
    for (const auto& r : report.splits) {
        std::vector<std::string> row{r.split.name()};
        for (auto s : report.seeds) {
            auto it = r.seed_macro_f1.find(s);
            row.push_back(it == r.seed_macro_f1.end() ? std::string(kMissingCell) : format_cell(it->second));
        }
        row.push_back(detail::opt_cell(r.aggregate ? std::optional(r.aggregate->mean) : std::nullopt));
        row.push_back(detail::opt_cell(r.aggregate ? std::optional(r.aggregate->stdev) : std::nullopt));
        out += csv::join_row(row);
    }
    return out;
}

inline std::string render_micro_stats(const ExperimentReport& report) {
    std::string out =
        csv::join_row({"split", "micro_f1", "precision", "recall", "macro_f1", "support"});
    for (const auto& r : report.splits) {
        if (r.empty) {
            const std::string na(kMissingCell);
            out += csv::join_row({r.split.name(), na, na, na, na, std::to_string(r.test_size)});
            continue;
        }
        const auto& s = r.voted_scores.summary;
        out += csv::join_row({r.split.name(), format_cell(s.micro_f1), format_cell(s.precision),
                              format_cell(s.recall), format_cell(s.macro_f1),
                              std::to_string(s.support)});
    }
    return out;
}

inline std::string render_baseline_comparison(const ExperimentReport& report) {
    std::vector<std::string> header{"model"};
    for (const auto& r : report.splits) header.push_back(r.split.name());
    std::string out = csv::join_row(header);
    for (const auto& row : report.comparison) {
        std::vector<std::string> cells{row.model};
        for (const auto& v : row.f1) cells.push_back(detail::opt_cell(v));
        out += csv::join_row(cells);
    }
    return out;
}

inline std::string render_demographic(const ExperimentReport& report, DemographicField field) {
    std::string out =
        csv::join_row({"split", "group", "micro_f1", "precision", "recall", "support"});
    for (const auto& r : report.splits) {
        for (const auto& [f, rows] : r.demographics) {
            if (f != field) continue;
            for (const auto& g : rows) {
                out += csv::join_row({r.split.name(), g.group, format_cell(g.metrics.micro_f1),
                                      format_cell(g.metrics.precision),
                                      format_cell(g.metrics.recall),
                                      std::to_string(g.metrics.support)});
            }
        }
    }
    return out;
}

inline std::string render_confusion(const ExperimentReport& report, const SplitResult& r) {
    std::vector<std::string> header{"gold\\pred"};
    for (const auto& n : report.schema.names()) header.push_back(n);
    std::string out = csv::join_row(header);
    for (ClassIndex g = 0; g < report.schema.size(); ++g) {
        std::vector<std::string> row{report.schema.name(g)};
        for (ClassIndex p = 0; p < report.schema.size(); ++p)
            row.push_back(std::to_string(r.confusion.at(g, p)));
        out += csv::join_row(row);
    }
    return out;
}

/// Writes seed_f1.csv, micro_stats.csv, baseline_comparison.csv,
/// demographic_<field>.csv, confusion_<split>.csv and topics.txt.
inline std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                                      const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& body) {
        const auto path = dir / name;
        io::write_file(path, body);
        written.push_back(path);
    };
    put("seed_f1.csv", render_seed_f1(report));
    put("micro_stats.csv", render_micro_stats(report));
    put("baseline_comparison.csv", render_baseline_comparison(report));
    for (auto field : report.demographic_fields)
        put("demographic_" + std::string(to_string(field)) + ".csv", render_demographic(report, field));
    for (const auto& r : report.splits)
        put("confusion_" + r.split.file_stem() + ".csv", render_confusion(report, r));
    put("topics.txt", report.topics);
    return written;
}

}  // namespace toxtopic
