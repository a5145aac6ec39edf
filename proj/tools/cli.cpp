#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <thread>
#include <unordered_set>

#include "bankbench/corpus.hpp"
#include "bankbench/embeddings.hpp"
#include "bankbench/harness.hpp"
#include "bankbench/metrics.hpp"
#include "bankbench/sampling.hpp"

namespace bankbench {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out;
    int threads = 0;
};

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw CLI::RequiredError(flag);
    return value;
}

ExperimentConfig experiment_config(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads > 0) {
        cfg.threads = g.threads;
    } else if (g.config.empty() || !read_json_file(g.config).contains("threads")) {
        cfg.threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    }
    return cfg;
}

Corpus load_corpus_logged(const fs::path& dir, std::ostream& err) {
    auto loaded = load_corpus_dir(dir);
    const auto& w = loaded.warnings;
    if (w.total() > 0) {
        err << ordered_json{{"event", "load_warnings"},
                            {"filing_before_period_end", w.filing_before_period_end},
                            {"after_bankruptcy", w.after_bankruptcy},
                            {"duplicate_bankruptcies", w.duplicate_bankruptcies},
                            {"same_year_reports", w.same_year_reports},
                            {"unmatched_bankruptcies", w.unmatched_bankruptcies}}
                   .dump()
            << '\n';
    }
    return std::move(loaded.companies);
}

void print_stats(const CorpusStats& s, std::ostream& out) {
    out << "companies " << s.n_companies << ", reports " << s.n_reports << ", bankruptcies " << s.n_bankruptcies
        << '\n';
    out << std::left << std::setw(6) << "year" << std::right << std::setw(10) << "reports" << std::setw(14)
        << "bankruptcies" << std::setw(11) << "new_firms" << '\n';
    for (int y = s.first_year; y <= s.last_year; ++y) {
        auto at = [y](const std::map<int, std::size_t>& m) { return m.count(y) ? m.at(y) : std::size_t{0}; };
        out << std::left << std::setw(6) << y << std::right << std::setw(10) << at(s.reports_per_year)
            << std::setw(14) << at(s.bankruptcies_per_year) << std::setw(11) << at(s.new_firms_per_year) << '\n';
    }
    out << std::fixed << std::setprecision(1);
    out << "reports/year " << s.reports_per_year_summary.mean << " +- " << s.reports_per_year_summary.std << '\n';
    out << "bankruptcies/year " << s.bankruptcies_per_year_summary.mean << " +- "
        << s.bankruptcies_per_year_summary.std << '\n';
    out << "new firms/year " << s.new_firms_per_year_summary.mean << " +- " << s.new_firms_per_year_summary.std
        << '\n';
    out << "MD&A length " << s.doc_length.mean << " +- " << s.doc_length.std << " tokens\n";
    out.unsetf(std::ios::floatfield);
}

std::map<int, MetricsReport> final_reports(const fs::path& results) {
    std::map<int, MetricsReport> reports;
    const auto dir = results / "final";
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.starts_with("report_") && name.ends_with(".json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto stem = f.stem().string();
        reports[std::stoi(stem.substr(7))] = report_from_json(read_json_file(f));
    }
    if (reports.empty()) throw std::runtime_error("no report_<year>.json in " + dir.string());
    return reports;
}

std::string column_label(const fs::path& results) {
    const auto exp = results / "experiment.json";
    if (!fs::exists(exp)) return results.filename().string();
    const auto j = read_json_file(exp);
    return j.value("model_kind", std::string("?")) + " H=" + std::to_string(j.value("history_len", 1));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bankruptcy prediction benchmark toolkit", "bankbench"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Override the random seed");
    app.add_option("--config", g.config, "Configuration JSON");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--threads", g.threads, "Worker threads (default: available cores)")->check(CLI::NonNegativeNumber);

    std::function<void()> action;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus")->fallthrough();
    synth->callback([&] {
        action = [&] {
            SyntheticConfig sc;
            if (!g.config.empty()) read_json_file(g.config).get_to(sc);
            if (g.seed) sc.rng_seed = *g.seed;
            const fs::path dir = require(g.out, "--out");
            const auto gen = generate_synthetic_with_log(sc);
            write_corpus_dir(gen.companies, dir);
            err << ordered_json{{"event", "synth"},
                                {"companies", gen.companies.size()},
                                {"firm_years", gen.log.firm_years},
                                {"bankruptcies", gen.log.bankruptcies},
                                {"distress_injections", gen.log.distress_injections}}
                       .dump()
                << '\n';
        };
    });

    std::string stats_dir;
    bool stats_json = false;
    auto* stats = app.add_subcommand("stats", "Corpus summary statistics")->fallthrough();
    stats->add_option("corpus", stats_dir, "Corpus directory")->required();
    stats->add_flag("--json", stats_json, "Print JSON instead of a table");
    stats->callback([&] {
        action = [&] {
            const auto s = corpus_stats(load_corpus_logged(stats_dir, err));
            if (stats_json) {
                out << to_json(s).dump(2) << '\n';
            } else {
                print_stats(s, out);
            }
        };
    });

    std::string corpus_dir;
    auto* build = app.add_subcommand("build-dataset", "Write train/validation/test instance files")->fallthrough();
    build->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    build->callback([&] {
        action = [&] {
            const auto cfg = experiment_config(g);
            cfg.split.validate();
            const fs::path dir = require(g.out, "--out");
            fs::create_directories(dir);
            const auto corpus = load_corpus_logged(corpus_dir, err);
            auto emit = [&](const std::string& name, const std::vector<FirmYearInstance>& v) {
                write_instances(v, dir / name);
                std::size_t pos = 0;
                for (const auto& i : v) pos += static_cast<std::size_t>(i.label);
                err << ordered_json{{"event", "dataset"}, {"file", name}, {"instances", v.size()}, {"positives", pos}}
                           .dump()
                    << '\n';
            };
            emit("train_" + std::to_string(cfg.split.train_cutoff_year) + ".jsonl",
                 build_training_set(corpus, cfg.split, cfg.split.train_cutoff_year));
            emit("train_" + std::to_string(cfg.split.final_cutoff_year) + ".jsonl",
                 build_training_set(corpus, cfg.split, cfg.split.final_cutoff_year));
            for (int y : cfg.split.validation_years) {
                emit("val_" + std::to_string(y) + ".jsonl", build_eval_set(corpus, y, cfg.split));
            }
            for (int y : cfg.split.test_years) {
                emit("test_" + std::to_string(y) + ".jsonl", build_eval_set(corpus, y, cfg.split));
            }
        };
    });

    std::string instances_path;
    auto* w2v = app.add_subcommand("train-w2v", "Train skip-gram vectors on an instance file")->fallthrough();
    w2v->add_option("--instances", instances_path, "Training instances (JSONL)")->required();
    w2v->callback([&] {
        action = [&] {
            const auto cfg = experiment_config(g);
            const fs::path dir = require(g.out, "--out");
            fs::create_directories(dir);
            const auto train = read_instances(instances_path);
            TextCache texts;
            texts.warm(train);
            const int cutoff = train.empty() ? 0 : std::max_element(train.begin(), train.end(), [](auto& a, auto& b) {
                                                        return a.year < b.year;
                                                    })->year;
            auto base = fit_w2v_source(train, texts, cfg, cfg.seed, cutoff);
            save_base(base, dir);
            err << ordered_json{{"event", "train-w2v"}, {"vocab", base.w2v->vocab.size()}, {"dim", base.w2v->dim}}
                       .dump()
                << '\n';
        };
    });

    auto* tune_cmd = app.add_subcommand("tune", "Phase 1: hyperparameter search on the validation years")->fallthrough();
    tune_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    tune_cmd->callback([&] {
        action = [&] {
            const auto cfg = experiment_config(g);
            const fs::path dir = require(g.out, "--out");
            cfg.validate();
            fs::create_directories(dir);
            ordered_json cj;
            to_json(cj, cfg);
            write_text(dir / "experiment.json", cj.dump(2) + "\n");
            const auto outcome = tune(load_corpus_logged(corpus_dir, err), cfg, dir);
            out << trial_to_json(outcome.trials[outcome.best]).dump(2) << '\n';
        };
    });

    std::string trial_path;
    auto* train_cmd = app.add_subcommand("train", "Phase 2: refit with the tuned hyperparameters and test")->fallthrough();
    train_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    train_cmd->add_option("--trial", trial_path, "Trial JSON (default: <out>/tuning.json best trial)");
    train_cmd->callback([&] {
        action = [&] {
            const auto cfg = experiment_config(g);
            const fs::path dir = require(g.out, "--out");
            json tj = read_json_file(trial_path.empty() ? dir / "tuning.json" : fs::path(trial_path));
            if (tj.contains("best_trial")) tj = tj.at("best_trial");
            const auto best = trial_from_json(tj);
            const auto reports = train_final(load_corpus_logged(corpus_dir, err), cfg, best, dir);
            ordered_json j = ordered_json::object();
            for (const auto& [year, r] : reports) j[std::to_string(year)] = to_json(r);
            out << j.dump(2) << '\n';
        };
    });

    std::string model_path;
    std::size_t k = 100;
    std::string roc_path, cap_path;
    auto* eval = app.add_subcommand("evaluate", "Score an instance file with a saved model")->fallthrough();
    eval->add_option("--model", model_path, "model.json")->required();
    eval->add_option("--instances", instances_path, "Instances (JSONL)")->required();
    eval->add_option("--k", k, "Cut-off for recall@k")->check(CLI::PositiveNumber);
    eval->add_option("--roc", roc_path, "Also write the ROC curve CSV");
    eval->add_option("--cap", cap_path, "Also write the CAP curve CSV");
    eval->callback([&] {
        action = [&] {
            const auto scorer = load_scorer(model_path);
            const auto instances = read_instances(instances_path);
            TextCache texts;
            texts.warm(instances);
            RankedPredictions p;
            p.scores = scorer->score(instances, texts);
            for (const auto& i : instances) p.labels.push_back(i.label);
            const auto text = to_json(evaluate_predictions(p, k)).dump(2) + "\n";
            if (g.out.empty()) {
                out << text;
            } else {
                write_text(g.out, text);
            }
            if (!roc_path.empty()) write_roc_csv(p, roc_path);
            if (!cap_path.empty()) write_cap_csv(p, cap_path);
        };
    });

    std::vector<std::string> results_dirs;
    auto* report = app.add_subcommand("report", "Markdown table of final test reports")->fallthrough();
    report->add_option("results", results_dirs, "Result directories, one column each")->required();
    report->callback([&] {
        action = [&] {
            std::vector<std::pair<std::string, std::map<int, MetricsReport>>> columns;
            for (const auto& d : results_dirs) columns.emplace_back(column_label(d), final_reports(d));
            const auto md = markdown_report(columns);
            if (g.out.empty()) {
                out << md;
            } else {
                write_text(g.out, md);
            }
        };
    });

    auto* run = app.add_subcommand("run", "Tune, refit and test in one go")->fallthrough();
    run->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    run->callback([&] {
        action = [&] {
            const auto cfg = experiment_config(g);
            const fs::path dir = require(g.out, "--out");
            const auto result = run_experiment(load_corpus_logged(corpus_dir, err), cfg, dir);
            out << read_json_file(dir / "report.json").dump(2) << '\n';
            (void)result;
        };
    });

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    set_progress_sink([&err](const ordered_json& event) { err << event.dump() << '\n'; });
    int code = 0;
    try {
        action();
    } catch (const CLI::RequiredError& e) {
        err << "error: " << e.what() << '\n';
        code = 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        code = 2;
    }
    set_progress_sink(nullptr);
    return code;
}

}  // namespace bankbench
