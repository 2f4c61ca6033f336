// Command-line front end for the topic-split toxicity experiment.
//
//   toxtopic pipeline      --config <file>
//   toxtopic topics        --config <file> --k <n> [--out <dir>]
//   toxtopic eval-baseline --config <file> --name <s> --preds <file>
//   toxtopic export-report --config <file> --out <dir>
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "toxtopic/toxtopic.hpp"

namespace {

using namespace toxtopic;
namespace fs = std::filesystem;

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

void print_summary(const ExperimentReport& report, std::ostream& os) {
    for (const auto& r : report.splits) {
        os << r.split.name() << ": train=" << r.train_size << " test=" << r.test_size;
        if (r.empty) {
            os << " (empty split, no metrics)\n";
            continue;
        }
        os << " macro_f1 avg=" << format_cell(r.aggregate->mean)
           << " stdev=" << format_cell(r.aggregate->stdev)
           << " | voted micro_f1=" << format_cell(r.voted_scores.summary.micro_f1) << "\n";
        for (ClassIndex c = 0; c < report.schema.size(); ++c) {
            const auto& rate = r.voted_rates.per_class[c];
            os << "    " << report.schema.name(c) << ": TPR=" << format_cell(rate.tpr)
               << " TNR=" << format_cell(rate.tnr) << " FPR=" << format_cell(rate.fpr) << "\n";
        }
    }
}

int run_pipeline(const ExperimentConfig& cfg, const fs::path& out_dir) {
    RunOptions opts;
    if (cfg.experiment.save_models) opts.model_dir = out_dir / "models";
    const auto report = run_experiment(cfg, opts);
    const auto files = emit_report(report, out_dir);
    print_summary(report, std::cout);
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    return 0;
}

int run_topics(ExperimentConfig cfg, std::size_t k, const std::optional<fs::path>& out) {
    cfg.lda.k = k;
    cfg.experiment.splits = default_splits(k);
    cfg.validate();
    const auto data = prepare_data(cfg);
    const std::string body = format_topics(data.lda, 5);
    const fs::path dir = out.value_or(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    io::write_file(dir / "topics.txt", body);
    std::cout << body;
    return 0;
}

int run_eval_baseline(const ExperimentConfig& cfg, const std::string& name, const fs::path& preds) {
    const auto data = prepare_data(cfg);
    const auto baseline = ingest_baselines(preds, data.schema, name);
    const auto row = score_baseline(baseline, data, cfg.experiment.splits);
    std::vector<std::string> header{"model"}, cells{row.model};
    for (const auto& s : cfg.experiment.splits) header.push_back(s.name());
    for (const auto& v : row.f1) cells.push_back(v ? format_cell(*v) : std::string(kMissingCell));
    std::cout << csv::join_row(header) << csv::join_row(cells);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topic-split toxicity classification experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t k = 3;
    std::string out_dir;
    std::string name;
    std::string preds_path;

    auto* pipeline = app.add_subcommand("pipeline", "Run the full experiment and write all reports");
    pipeline->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* topics = app.add_subcommand("topics", "Fit LDA on the training data and write topics.txt");
    topics->add_option("--config", config_path, "Experiment config (JSON)")->required();
    topics->add_option("--k", k, "Number of topics")->required()->check(CLI::PositiveNumber);
    topics->add_option("--out", out_dir, "Output directory (default: config output_dir)");

    auto* baseline = app.add_subcommand("eval-baseline", "Score a baseline prediction file per split");
    baseline->add_option("--config", config_path, "Experiment config (JSON)")->required();
    baseline->add_option("--name", name, "Baseline name")->required();
    baseline->add_option("--preds", preds_path, "Prediction CSV (instance_id,label)")->required();

    auto* export_report = app.add_subcommand("export-report", "Run the experiment and write reports to a directory");
    export_report->add_option("--config", config_path, "Experiment config (JSON)")->required();
    export_report->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        const auto cfg = load_config(config_path);
        if (pipeline->parsed()) return run_pipeline(cfg, cfg.output_dir);
        if (topics->parsed())
            return run_topics(cfg, k, out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
        if (baseline->parsed()) return run_eval_baseline(cfg, name, preds_path);
        if (export_report->parsed()) return run_pipeline(cfg, out_dir);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
