#include "bankbench/harness.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "bankbench/rng.hpp"

namespace bankbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::function<void(const ordered_json&)> g_progress;
std::mutex g_progress_mutex;

void progress(const ordered_json& event) {
    std::lock_guard lock(g_progress_mutex);
    if (g_progress) g_progress(event);
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

bool is_classical(ModelKind k) { return k == ModelKind::binary || k == ModelKind::tfidf; }

// Seed tags per stage; phase 1 and 2 get distinct streams.
enum : std::uint64_t { kUndersampleTag = 0x10, kSkipgramTag = 0x20, kMlpTag = 0x30 };

struct PhaseData {
    std::vector<FirmYearInstance> train;
    std::map<int, std::vector<FirmYearInstance>> eval;  ///< per year
    TextCache texts;
};

PhaseData prepare_phase(const Corpus& corpus, const ExperimentConfig& cfg, int cutoff, const std::vector<int>& years) {
    PhaseData d;
    d.train = build_training_set(corpus, cfg.split, cutoff);
    d.texts.warm(d.train);
    for (int y : years) {
        d.eval[y] = build_eval_set(corpus, y, cfg.split);
        d.texts.warm(d.eval[y]);
    }
    return d;
}

// Hyperparameter-independent fits for one phase.
struct PhaseBase {
    std::optional<ClassicalBase> classical;
    std::optional<EmbeddingBase> embedding;
};

PhaseBase fit_phase_base(const ExperimentConfig& cfg, const PhaseData& d, int cutoff, std::uint64_t phase,
                         const std::filesystem::path& dir) {
    PhaseBase b;
    if (is_classical(cfg.model_kind)) {
        b.classical = fit_classical_base(cfg.model_kind, d.train, d.texts, cfg,
                                         mix_seed(cfg.seed, kUndersampleTag + phase), cutoff);
        save_base(*b.classical, dir);
    } else if (cfg.model_kind == ModelKind::w2v) {
        b.embedding = fit_w2v_source(d.train, d.texts, cfg, mix_seed(cfg.seed, kSkipgramTag + phase), cutoff);
        save_base(*b.embedding, dir);
    } else {
        b.embedding = load_imported_source(cfg.embedding_table);
    }
    return b;
}

std::vector<FirmYearInstance> concat_years(const std::map<int, std::vector<FirmYearInstance>>& eval) {
    std::vector<FirmYearInstance> all;
    for (const auto& [year, v] : eval) all.insert(all.end(), v.begin(), v.end());
    return all;
}

RankedPredictions ranked(std::vector<double> scores, std::span<const FirmYearInstance> instances) {
    RankedPredictions p;
    p.scores = std::move(scores);
    for (const auto& i : instances) p.labels.push_back(i.label);
    return p;
}

TrialResult run_trial(int id, const Hyperparams& hp, const ExperimentConfig& cfg, const PhaseData& d,
                      const PhaseBase& base, const std::vector<FirmYearInstance>& val_all,
                      const std::filesystem::path& dir) {
    TrialResult t;
    t.id = id;
    t.hyperparams = hp;
    t.artifacts = dir;
    std::unique_ptr<Scorer> scorer;
    if (base.classical) {
        scorer = classical_pipeline(*base.classical, hp, cfg);
    } else {
        auto fit = embedding_pipeline(*base.embedding, d.train, val_all, d.texts, hp, cfg, mix_seed(cfg.seed, kMlpTag));
        t.best_epoch = fit.log.best_epoch;
        scorer = std::move(fit.scorer);
    }
    ordered_json per_year = ordered_json::object();
    for (const auto& [year, instances] : d.eval) {
        auto preds = ranked(scorer->score(instances, d.texts), instances);
        const auto n_pos = preds.positives();
        if (n_pos == 0 || n_pos == preds.size()) continue;  // AUC undefined for this year
        t.val_auc[year] = roc_auc(preds);
        t.val_count[year] = instances.size();
        per_year[std::to_string(year)] = to_json(evaluate_predictions(preds, cfg.recall_k));
    }
    if (t.val_auc.empty()) throw std::runtime_error("no validation year has both classes");
    t.objective = weighted_auc(t.val_auc, t.val_count);

    std::filesystem::create_directories(dir);
    write_json({{"id", id}, {"hyperparams", hp}}, dir / "config.json");
    scorer->save(dir);
    auto report = trial_to_json(t);
    report["metrics"] = per_year;
    write_json(report, dir / "report.json");
    return t;
}

}  // namespace

void set_progress_sink(std::function<void(const ordered_json&)> sink) {
    std::lock_guard lock(g_progress_mutex);
    g_progress = std::move(sink);
}

TuneOutcome tune(const Corpus& corpus, const ExperimentConfig& cfg, const std::filesystem::path& out) {
    cfg.validate();
    const auto trials = enumerate_trials(cfg);
    const int cutoff = cfg.split.train_cutoff_year;

    progress({{"stage", "tune"}, {"event", "prepare"}, {"cutoff", cutoff}});
    const PhaseData d = prepare_phase(corpus, cfg, cutoff, cfg.split.validation_years);
    const PhaseBase base = fit_phase_base(cfg, d, cutoff, 1, out / "phase1");
    const auto val_all = concat_years(d.eval);
    progress({{"stage", "tune"},
              {"event", "ready"},
              {"train_instances", d.train.size()},
              {"validation_instances", val_all.size()},
              {"trials", trials.size()}});

    TuneOutcome outcome;
    outcome.trials.resize(trials.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < trials.size(); i = next++) {
            const auto dir = out / "trials" / std::to_string(i);
            try {
                outcome.trials[i] = run_trial(static_cast<int>(i), trials[i], cfg, d, base, val_all, dir);
            } catch (const std::exception& e) {
                outcome.trials[i].id = static_cast<int>(i);
                outcome.trials[i].hyperparams = trials[i];
                outcome.trials[i].error = e.what();
                outcome.trials[i].artifacts = dir;
            }
            const auto& t = outcome.trials[i];
            progress({{"stage", "tune"},
                      {"trial", i},
                      {"hyperparams", t.hyperparams},
                      {"objective", t.error.empty() ? json(t.objective) : json(nullptr)},
                      {"error", t.error}});
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), trials.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    bool any = false;
    std::string causes;
    for (std::size_t i = 0; i < outcome.trials.size(); ++i) {
        const auto& t = outcome.trials[i];
        if (!t.error.empty()) {
            causes += "\n  trial " + std::to_string(i) + ": " + t.error;
            continue;
        }
        if (!any || t.objective > outcome.trials[outcome.best].objective) outcome.best = i;
        any = true;
    }
    if (!any) throw std::runtime_error("all " + std::to_string(trials.size()) + " trials failed:" + causes);

    ordered_json summary;
    summary["best"] = outcome.best;
    summary["best_trial"] = trial_to_json(outcome.trials[outcome.best]);
    summary["trials"] = ordered_json::array();
    for (const auto& t : outcome.trials) summary["trials"].push_back(trial_to_json(t));
    write_json(summary, out / "tuning.json");
    return outcome;
}

std::map<int, MetricsReport> train_final(const Corpus& corpus, const ExperimentConfig& cfg, const TrialResult& best,
                                         const std::filesystem::path& out) {
    cfg.validate();
    const int cutoff = cfg.split.final_cutoff_year;
    const auto dir = out / "final";
    progress({{"stage", "final"}, {"event", "prepare"}, {"cutoff", cutoff}});
    const PhaseData d = prepare_phase(corpus, cfg, cutoff, cfg.split.test_years);
    const PhaseBase base = fit_phase_base(cfg, d, cutoff, 2, dir);

    std::unique_ptr<Scorer> scorer;
    if (base.classical) {
        scorer = classical_pipeline(*base.classical, best.hyperparams, cfg);
    } else {
        // no holdout remains: train for the epoch count phase 1 picked
        Hyperparams hp = best.hyperparams;
        hp["max_epochs"] = std::max(1, best.best_epoch);
        auto fit = embedding_pipeline(*base.embedding, d.train, {}, d.texts, hp, cfg, mix_seed(cfg.seed, kMlpTag));
        scorer = std::move(fit.scorer);
    }
    scorer->save(dir);
    progress({{"stage", "final"}, {"event", "trained"}, {"train_instances", d.train.size()}});

    std::map<int, MetricsReport> reports;
    for (const auto& [year, instances] : d.eval) {
        auto preds = ranked(scorer->score(instances, d.texts), instances);
        reports[year] = evaluate_predictions(preds, cfg.recall_k);
        write_json(to_json(reports[year]), dir / ("report_" + std::to_string(year) + ".json"));
        write_roc_csv(preds, dir / ("roc_" + std::to_string(year) + ".csv"));
        write_cap_csv(preds, dir / ("cap_" + std::to_string(year) + ".csv"));
        progress({{"stage", "final"}, {"year", year}, {"auc", reports[year].auc}});
    }
    return reports;
}

ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& cfg, const std::filesystem::path& out) {
    std::string stage = "validate";
    ExperimentResult result;
    try {
        cfg.validate();
        std::filesystem::create_directories(out);
        ordered_json cj;
        to_json(cj, cfg);
        write_json(cj, out / "experiment.json");

        stage = "tune";
        result.tuning = tune(corpus, cfg, out);
        stage = "final";
        result.test_reports = train_final(corpus, cfg, result.tuning.trials[result.tuning.best], out);

        stage = "report";
        ordered_json report;
        report["model_kind"] = to_string(cfg.model_kind);
        report["history_len"] = cfg.split.history_len;
        report["seed"] = cfg.seed;
        report["best_trial"] = trial_to_json(result.tuning.trials[result.tuning.best]);
        report["test"] = ordered_json::object();
        for (const auto& [year, r] : result.test_reports) report["test"][std::to_string(year)] = to_json(r);
        write_json(report, out / "report.json");
        write_json({{"stage", "done"}}, out / "status.json");
    } catch (const std::exception& e) {
        try {
            std::filesystem::create_directories(out);
            write_json({{"stage", stage}, {"error", e.what()}}, out / "status.json");
        } catch (...) {
        }
        if (stage == "validate") throw;
        throw std::runtime_error(stage + ": " + e.what());
    }
    return result;
}

}  // namespace bankbench
