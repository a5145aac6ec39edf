#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankbench/corpus.hpp"
#include "bankbench/embeddings.hpp"
#include "bankbench/features.hpp"
#include "bankbench/linear.hpp"
#include "bankbench/metrics.hpp"
#include "bankbench/neural.hpp"
#include "bankbench/sampling.hpp"
#include "bankbench/textprep.hpp"

namespace bankbench {

enum class ModelKind { binary, tfidf, w2v, imported_embedding };
enum class SearchKind { grid, random };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

/// One hyperparameter assignment, e.g. {"C": 1.0} or {"lr": 1e-3, "hidden": 32}.
using Hyperparams = nlohmann::ordered_json;

struct ExperimentConfig {
    ModelKind model_kind = ModelKind::binary;
    SplitSpec split;  ///< split.history_len is H
    SearchKind search = SearchKind::grid;
    int n_trials = 10;  ///< random search only
    /// grid: {"name": [v1, v2, ...]}; random: {"name": {"uniform"|"log_uniform": [lo, hi]}
    /// or {"choice": [...]}}. Defaults are filled in per model kind when null.
    nlohmann::ordered_json space;
    std::uint64_t seed = 0;
    int threads = 1;

    double majority_fraction = 0.9;  ///< undersampling target, classical pipelines
    std::size_t binary_k = 20;
    std::size_t vocab_max_size = Vocabulary::kDefaultMaxSize;
    LogregOptions logreg;  ///< C is taken from the trial
    SkipGramOptions skipgram;
    MlpHyperparams mlp;  ///< base values; trial keys override
    std::string embedding_table;  ///< doc_embeddings.tsv for imported_embedding
    std::size_t recall_k = 100;

    /// Throws std::invalid_argument before any training if inconsistent.
    void validate() const;
    /// The search space with model-kind defaults applied.
    [[nodiscard]] nlohmann::ordered_json effective_space() const;
};

void to_json(nlohmann::ordered_json& j, const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Slot text -> preprocessed tokens, memoised. The missing sentinel maps to
/// ["missing"] untouched. Safe for concurrent reads once warmed.
class TextCache {
public:
    void warm(std::span<const FirmYearInstance> instances);
    /// Throws std::logic_error for a text that was never warmed.
    [[nodiscard]] const TokenizedDoc& get(const std::string& text) const;
    /// Warms if needed; not thread-safe.
    const TokenizedDoc& get_or_add(const std::string& text);

private:
    std::unordered_map<std::string, TokenizedDoc> docs_;
};

/// Which data an artifact was fitted on.
struct FitProvenance {
    int cutoff_year = 0;
    std::size_t n_instances = 0;
    std::optional<Date> max_anchor;  ///< latest window_start among the fitting instances

    friend bool operator==(const FitProvenance&, const FitProvenance&) = default;
};

FitProvenance provenance_of(std::span<const FirmYearInstance> instances, int cutoff_year);

struct LeakageError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Throws LeakageError unless every evaluation anchor is strictly later than
/// the artifact's latest fitting anchor.
void assert_precedes(const FitProvenance& fit, std::span<const FirmYearInstance> eval, const std::string& what);

/// A fitted model able to score instances.
class Scorer {
public:
    virtual ~Scorer() = default;
    [[nodiscard]] virtual ModelKind kind() const = 0;
    /// Probabilities; asserts the fit precedes every instance.
    [[nodiscard]] virtual std::vector<double> score(std::span<const FirmYearInstance> instances,
                                                    const TextCache& texts) const = 0;
    /// Writes model.json (plus any shared artifacts not yet present) into `dir`.
    virtual void save(const std::filesystem::path& dir) const = 0;
    [[nodiscard]] const FitProvenance& provenance() const { return provenance_; }

protected:
    FitProvenance provenance_;
};

/// Hyperparameter-independent state of the classical pipelines for one phase.
struct ClassicalBase {
    ModelKind kind = ModelKind::binary;
    std::shared_ptr<const Vocabulary> vocab;
    std::shared_ptr<const FeatureSpace> space;
    std::vector<SparseVector> vectors;  ///< full feature space
    std::vector<int> labels;
    std::vector<double> chi2;
    FitProvenance provenance;
    std::filesystem::path artifact_dir;  ///< where vocab.tsv / feature_space.tsv were written
};

/// Writes vocab.tsv and feature_space.tsv into `dir` and remembers it so
/// scorers reference the files instead of copying them.
void save_base(ClassicalBase& base, const std::filesystem::path& dir);

/// Undersample -> vocabulary -> feature space -> binary or tf-idf vectors -> chi2.
ClassicalBase fit_classical_base(ModelKind kind, std::span<const FirmYearInstance> train, const TextCache& texts,
                                 const ExperimentConfig& cfg, std::uint64_t seed, int cutoff_year);

/// chi2 top-k (k = binary_k for binary, hp["k"] for tf-idf) then logistic regression with hp["C"].
std::unique_ptr<Scorer> classical_pipeline(const ClassicalBase& base, const Hyperparams& hp,
                                           const ExperimentConfig& cfg);

/// Selected feature grams of a classical scorer, highest chi2 first.
std::vector<std::string> selected_features(const Scorer& scorer);

/// Word vectors or an imported table, shared by all trials of a phase.
struct EmbeddingBase {
    std::shared_ptr<const SkipGramModel> w2v;
    std::shared_ptr<const EmbeddingTable> table;
    FitProvenance provenance;  ///< empty (no anchor) for imported tables
    std::filesystem::path table_path;
    std::filesystem::path artifact_dir;  ///< where vocab.tsv / embeddings.vec were written
};

/// Writes vocab.tsv and embeddings.vec (w2v only) into `dir`.
void save_base(EmbeddingBase& base, const std::filesystem::path& dir);

/// Trains skip-gram on the distinct non-missing slot documents of `train`.
EmbeddingBase fit_w2v_source(std::span<const FirmYearInstance> train, const TextCache& texts,
                               const ExperimentConfig& cfg, std::uint64_t seed, int cutoff_year);
EmbeddingBase load_imported_source(const std::filesystem::path& table_path);

/// One row per instance: slot embeddings concatenated oldest first. Throws
/// std::runtime_error listing keys absent from an imported table.
std::vector<std::vector<double>> embed_instances(const EmbeddingBase& src, std::span<const FirmYearInstance> instances,
                                                 const TextCache& texts);

struct EmbeddingFit {
    std::unique_ptr<Scorer> scorer;
    MlpTrainingLog log;
};

/// Embeds, concatenates and trains the MLP on the full training set. With
/// no validation instances the MLP runs hp["max_epochs"] epochs.
EmbeddingFit embedding_pipeline(const EmbeddingBase& src, std::span<const FirmYearInstance> train,
                                std::span<const FirmYearInstance> val, const TextCache& texts, const Hyperparams& hp,
                                const ExperimentConfig& cfg, std::uint64_t seed);

/// Receives one JSON object per progress event; unset means silent.
void set_progress_sink(std::function<void(const nlohmann::ordered_json&)> sink);

/// Reads a model.json written by Scorer::save.
std::unique_ptr<Scorer> load_scorer(const std::filesystem::path& model_json);

/// Grid cross-product (later keys vary fastest) or n seeded random draws.
std::vector<Hyperparams> enumerate_trials(const ExperimentConfig& cfg);

struct TrialResult {
    int id = 0;
    Hyperparams hyperparams;
    std::map<int, double> val_auc;  ///< per validation year
    std::map<int, std::size_t> val_count;
    double objective = 0.0;
    int best_epoch = 0;  ///< neural models only
    std::string error;   ///< non-empty when the trial failed
    std::filesystem::path artifacts;
};

/// sum_y n_y AUC_y / sum_y n_y
double weighted_auc(const std::map<int, double>& auc, const std::map<int, std::size_t>& counts);

struct TuneOutcome {
    std::vector<TrialResult> trials;
    std::size_t best = 0;  ///< index into trials
};

/// Phase 1: fit on data up to split.train_cutoff_year, score each validation
/// year, keep the best weighted AUC (first trial wins ties). Trial artifacts
/// go to out/trials/<id>/. Throws when every trial fails.
TuneOutcome tune(const Corpus& corpus, const ExperimentConfig& cfg, const std::filesystem::path& out);

struct ExperimentResult {
    TuneOutcome tuning;
    std::map<int, MetricsReport> test_reports;
};

/// Phase 2: refit on data up to split.final_cutoff_year with `hp` (and the
/// tuned epoch count for neural models), report each test year into out/final/.
std::map<int, MetricsReport> train_final(const Corpus& corpus, const ExperimentConfig& cfg, const TrialResult& best,
                                         const std::filesystem::path& out);

/// tune + train_final; also writes out/experiment.json and out/report.json.
/// Failures are rethrown as std::runtime_error prefixed with the stage name.
ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& cfg, const std::filesystem::path& out);

nlohmann::ordered_json trial_to_json(const TrialResult& t);
TrialResult trial_from_json(const nlohmann::json& j);

/// Markdown table in the metric-rows / model-columns layout, one cell per
/// model with "first test year (second test year)".
std::string markdown_report(const std::vector<std::pair<std::string, std::map<int, MetricsReport>>>& columns);

}  // namespace bankbench
