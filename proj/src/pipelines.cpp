#include <algorithm>
#include <fstream>
#include <mutex>
#include <unordered_set>

#include "bankbench/harness.hpp"
#include "bankbench/rng.hpp"

namespace bankbench {

using nlohmann::json;
using nlohmann::ordered_json;

// --- text cache ------------------------------------------------------------------

namespace {

TokenizedDoc slot_tokens(const std::string& text) {
    if (is_missing_slot(text)) return {std::string(kMissingToken)};
    return preprocess(text);
}

}  // namespace

void TextCache::warm(std::span<const FirmYearInstance> instances) {
    for (const auto& inst : instances) {
        for (const auto& slot : inst.history) get_or_add(slot);
    }
}

const TokenizedDoc& TextCache::get(const std::string& text) const {
    auto it = docs_.find(text);
    if (it == docs_.end()) throw std::logic_error("text cache miss");
    return it->second;
}

const TokenizedDoc& TextCache::get_or_add(const std::string& text) {
    auto it = docs_.find(text);
    if (it == docs_.end()) it = docs_.emplace(text, slot_tokens(text)).first;
    return it->second;
}

// --- provenance --------------------------------------------------------------------

FitProvenance provenance_of(std::span<const FirmYearInstance> instances, int cutoff_year) {
    FitProvenance p;
    p.cutoff_year = cutoff_year;
    p.n_instances = instances.size();
    for (const auto& inst : instances) {
        if (!p.max_anchor || *p.max_anchor < inst.window_start) p.max_anchor = inst.window_start;
    }
    return p;
}

void assert_precedes(const FitProvenance& fit, std::span<const FirmYearInstance> eval, const std::string& what) {
    if (!fit.max_anchor) return;
    for (const auto& inst : eval) {
        if (!(*fit.max_anchor < inst.window_start)) {
            throw LeakageError(what + " was fitted on anchors up to " + fit.max_anchor->iso() +
                               " but is asked to score " + inst.cik + "/" + std::to_string(inst.year) +
                               " anchored at " + inst.window_start.iso());
        }
    }
}

namespace {

ordered_json provenance_json(const FitProvenance& p) {
    ordered_json j;
    j["cutoff_year"] = p.cutoff_year;
    j["n_instances"] = p.n_instances;
    j["max_anchor"] = p.max_anchor ? json(p.max_anchor->iso()) : json(nullptr);
    return j;
}

FitProvenance provenance_from_json(const json& j) {
    FitProvenance p;
    j.at("cutoff_year").get_to(p.cutoff_year);
    j.at("n_instances").get_to(p.n_instances);
    if (!j.at("max_anchor").is_null()) p.max_anchor = Date::parse(j.at("max_anchor").get<std::string>());
    return p;
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

// Path of `target` as seen from `from_dir`.
std::string ref(const std::filesystem::path& target, const std::filesystem::path& from_dir) {
    return std::filesystem::relative(target, from_dir).generic_string();
}

std::vector<TokenizedDoc> mapped_slots(const FirmYearInstance& inst, const TextCache& texts, const Vocabulary& vocab) {
    std::vector<TokenizedDoc> slots;
    slots.reserve(inst.history.size());
    for (const auto& s : inst.history) slots.push_back(vocab.apply(texts.get(s)));
    return slots;
}

SparseVector classical_vector(ModelKind kind, const FirmYearInstance& inst, const TextCache& texts,
                              const Vocabulary& vocab, const FeatureSpace& space) {
    const auto grams = extract_history_grams(mapped_slots(inst, texts, vocab));
    return kind == ModelKind::binary ? binarize(grams, space) : tfidf_transform(grams, space);
}

double hp_double(const Hyperparams& hp, const char* key) {
    if (!hp.contains(key)) throw std::invalid_argument(std::string("missing hyperparameter ") + key);
    return hp.at(key).get<double>();
}

// --- classical scorer ------------------------------------------------------------

class ClassicalScorer final : public Scorer {
public:
    ClassicalScorer(ModelKind kind, std::shared_ptr<const Vocabulary> vocab, std::shared_ptr<const FeatureSpace> space,
                    FeatureSelector selector, LogisticModel model, Hyperparams hp, FitProvenance prov,
                    std::filesystem::path artifact_dir)
        : kind_(kind),
          vocab_(std::move(vocab)),
          space_(std::move(space)),
          selector_(std::move(selector)),
          model_(std::move(model)),
          hp_(std::move(hp)),
          artifact_dir_(std::move(artifact_dir)) {
        provenance_ = std::move(prov);
    }

    [[nodiscard]] ModelKind kind() const override { return kind_; }

    [[nodiscard]] std::vector<double> score(std::span<const FirmYearInstance> instances,
                                            const TextCache& texts) const override {
        assert_precedes(provenance_, instances, to_string(kind_) + " model");
        std::vector<double> out;
        out.reserve(instances.size());
        for (const auto& inst : instances) {
            const auto full = classical_vector(kind_, inst, texts, *vocab_, *space_);
            out.push_back(predict_proba(model_, selector_.restrict(full)));
        }
        return out;
    }

    void save(const std::filesystem::path& dir) const override {
        std::filesystem::create_directories(dir);
        std::filesystem::path shared = artifact_dir_.empty() ? dir : artifact_dir_;
        if (artifact_dir_.empty()) {
            vocab_->write_tsv(dir / "vocab.tsv");
            space_->write_tsv(dir / "feature_space.tsv");
        }
        ordered_json j;
        j["model_kind"] = to_string(kind_);
        j["hyperparams"] = hp_;
        json lr;
        to_json(lr, model_);
        j["weights"] = lr["weights"];
        j["bias"] = lr["bias"];
        j["C"] = lr["C"];
        j["selected"] = selector_.selected;
        j["selected_features"] = selected_features();
        j["vocab_ref"] = ref(shared / "vocab.tsv", dir);
        j["feature_space_ref"] = ref(shared / "feature_space.tsv", dir);
        j["provenance"] = provenance_json(provenance_);
        write_json(j, dir / "model.json");
    }

    [[nodiscard]] std::vector<std::string> selected_features() const {
        std::vector<std::uint32_t> order = selector_.selected;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return selector_.scores[a] > selector_.scores[b]; });
        std::vector<std::string> out;
        out.reserve(order.size());
        for (auto id : order) out.push_back(space_->gram(id));
        return out;
    }

    static std::unique_ptr<Scorer> load(const json& j, const std::filesystem::path& dir) {
        const auto kind = parse_model_kind(j.at("model_kind").get<std::string>());
        auto vocab = std::make_shared<const Vocabulary>(Vocabulary::read_tsv(dir / j.at("vocab_ref").get<std::string>()));
        auto space = std::make_shared<const FeatureSpace>(
            FeatureSpace::read_tsv(dir / j.at("feature_space_ref").get<std::string>()));
        FeatureSelector sel;
        j.at("selected").get_to(sel.selected);
        sel.scores.assign(space->size(), 0.0);
        // stored order is by score; keep that ranking for selected_features()
        const auto ranked = j.at("selected_features").get<std::vector<std::string>>();
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (auto id = space->find(ranked[r])) sel.scores[*id] = static_cast<double>(ranked.size() - r);
        }
        for (auto id : sel.selected) {
            if (id >= space->size()) throw std::runtime_error("model.json: selected id outside the feature space");
        }
        LogisticModel m;
        from_json(json{{"weights", j.at("weights")}, {"bias", j.at("bias")}, {"C", j.at("C")}}, m);
        if (m.weights.size() != sel.selected.size()) throw std::runtime_error("model.json: weight count mismatch");
        return std::make_unique<ClassicalScorer>(kind, std::move(vocab), std::move(space), std::move(sel),
                                                 std::move(m), Hyperparams::parse(j.at("hyperparams").dump()),
                                                 provenance_from_json(j.at("provenance")), std::filesystem::path{});
    }

private:
    ModelKind kind_;
    std::shared_ptr<const Vocabulary> vocab_;
    std::shared_ptr<const FeatureSpace> space_;
    FeatureSelector selector_;
    LogisticModel model_;
    Hyperparams hp_;
    std::filesystem::path artifact_dir_;
};

// --- embedding scorer ----------------------------------------------------------------

class EmbeddingScorer final : public Scorer {
public:
    EmbeddingScorer(ModelKind kind, EmbeddingBase base, MlpModel mlp, Hyperparams hp, FitProvenance prov)
        : kind_(kind), base_(std::move(base)), mlp_(std::move(mlp)), hp_(std::move(hp)) {
        provenance_ = std::move(prov);
    }

    [[nodiscard]] ModelKind kind() const override { return kind_; }

    [[nodiscard]] std::vector<double> score(std::span<const FirmYearInstance> instances,
                                            const TextCache& texts) const override {
        assert_precedes(provenance_, instances, to_string(kind_) + " model");
        return predict_mlp(mlp_, embed_instances(base_, instances, texts));
    }

    void save(const std::filesystem::path& dir) const override {
        std::filesystem::create_directories(dir);
        ordered_json j;
        j["model_kind"] = to_string(kind_);
        j["hyperparams"] = hp_;
        j["mlp"] = mlp_to_json(mlp_);
        if (base_.w2v) {
            std::filesystem::path shared = base_.artifact_dir.empty() ? dir : base_.artifact_dir;
            if (base_.artifact_dir.empty()) {
                base_.w2v->vocab.write_tsv(dir / "vocab.tsv");
                base_.w2v->write_vec(dir / "embeddings.vec");
            }
            j["vocab_ref"] = ref(shared / "vocab.tsv", dir);
            j["embeddings_ref"] = ref(shared / "embeddings.vec", dir);
        } else {
            j["embedding_table_ref"] = base_.table_path.generic_string();
        }
        j["provenance"] = provenance_json(provenance_);
        write_json(j, dir / "model.json");
    }

    static std::unique_ptr<Scorer> load(const json& j, const std::filesystem::path& dir) {
        const auto kind = parse_model_kind(j.at("model_kind").get<std::string>());
        EmbeddingBase base;
        if (kind == ModelKind::w2v) {
            const auto vocab = Vocabulary::read_tsv(dir / j.at("vocab_ref").get<std::string>());
            base.w2v = std::make_shared<const SkipGramModel>(
                SkipGramModel::read_vec(dir / j.at("embeddings_ref").get<std::string>(), vocab));
        } else {
            base = load_imported_source(j.at("embedding_table_ref").get<std::string>());
        }
        return std::make_unique<EmbeddingScorer>(kind, std::move(base), mlp_from_json(j.at("mlp")),
                                                 Hyperparams::parse(j.at("hyperparams").dump()),
                                                 provenance_from_json(j.at("provenance")));
    }

private:
    ModelKind kind_;
    EmbeddingBase base_;
    MlpModel mlp_;
    Hyperparams hp_;
};

}  // namespace

// --- classical pipeline ------------------------------------------------------------

ClassicalBase fit_classical_base(ModelKind kind, std::span<const FirmYearInstance> train, const TextCache& texts,
                                 const ExperimentConfig& cfg, std::uint64_t seed, int cutoff_year) {
    if (kind != ModelKind::binary && kind != ModelKind::tfidf) {
        throw std::invalid_argument("classical pipeline needs binary or tfidf");
    }
    const auto sampled = undersample(train, cfg.majority_fraction, seed);

    std::vector<TokenizedDoc> distinct;
    std::unordered_set<std::string_view> seen;
    for (const auto& inst : sampled) {
        for (const auto& s : inst.history) {
            if (seen.insert(s).second) distinct.push_back(texts.get(s));
        }
    }
    ClassicalBase base;
    base.kind = kind;
    base.vocab = std::make_shared<const Vocabulary>(Vocabulary::build(distinct, cfg.vocab_max_size));

    std::vector<GramCounts> grams;
    grams.reserve(sampled.size());
    for (const auto& inst : sampled) grams.push_back(extract_history_grams(mapped_slots(inst, texts, *base.vocab)));
    base.space = std::make_shared<const FeatureSpace>(FeatureSpace::build(grams));

    base.vectors.reserve(sampled.size());
    for (const auto& g : grams) {
        base.vectors.push_back(kind == ModelKind::binary ? binarize(g, *base.space) : tfidf_transform(g, *base.space));
    }
    for (const auto& inst : sampled) base.labels.push_back(inst.label);
    base.chi2 = chi2_scores(base.vectors, base.labels, base.space->size());
    base.provenance = provenance_of(sampled, cutoff_year);
    return base;
}

void save_base(ClassicalBase& base, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    base.vocab->write_tsv(dir / "vocab.tsv");
    base.space->write_tsv(dir / "feature_space.tsv");
    base.artifact_dir = dir;
}

std::unique_ptr<Scorer> classical_pipeline(const ClassicalBase& base, const Hyperparams& hp,
                                           const ExperimentConfig& cfg) {
    const double C = hp_double(hp, "C");
    std::size_t k = cfg.binary_k;
    if (base.kind == ModelKind::tfidf) {
        k = hp.contains("k") ? hp.at("k").get<std::size_t>() : base.space->size();
    }
    // chi2 scores do not depend on k, so reuse the cached ones
    auto sel = select_top_k(base.chi2, k);
    std::vector<SparseVector> xs;
    xs.reserve(base.vectors.size());
    for (const auto& v : base.vectors) xs.push_back(sel.restrict(v));
    LogregOptions opts = cfg.logreg;
    opts.C = C;
    auto model = train_logreg(xs, base.labels, opts);
    return std::make_unique<ClassicalScorer>(base.kind, base.vocab, base.space, std::move(sel), std::move(model), hp,
                                             base.provenance, base.artifact_dir);
}

std::vector<std::string> selected_features(const Scorer& scorer) {
    const auto* c = dynamic_cast<const ClassicalScorer*>(&scorer);
    if (!c) throw std::invalid_argument("selected_features needs a binary or tfidf model");
    return c->selected_features();
}

// --- embedding pipeline ------------------------------------------------------------

EmbeddingBase fit_w2v_source(std::span<const FirmYearInstance> train, const TextCache& texts,
                             const ExperimentConfig& cfg, std::uint64_t seed, int cutoff_year) {
    std::vector<TokenizedDoc> docs;
    std::unordered_set<std::string_view> seen;
    for (const auto& inst : train) {
        for (const auto& s : inst.history) {
            if (!is_missing_slot(s) && seen.insert(s).second) docs.push_back(texts.get(s));
        }
    }
    const auto vocab = Vocabulary::build(docs, cfg.vocab_max_size);
    SkipGramOptions opts = cfg.skipgram;
    opts.seed = seed;
    EmbeddingBase base;
    base.w2v = std::make_shared<const SkipGramModel>(train_skipgram(docs, vocab, opts));
    base.provenance = provenance_of(train, cutoff_year);
    return base;
}

EmbeddingBase load_imported_source(const std::filesystem::path& table_path) {
    EmbeddingBase base;
    base.table = std::make_shared<const EmbeddingTable>(load_embedding_table(table_path));
    base.table_path = table_path;
    return base;
}

void save_base(EmbeddingBase& base, const std::filesystem::path& dir) {
    if (!base.w2v) return;
    std::filesystem::create_directories(dir);
    base.w2v->vocab.write_tsv(dir / "vocab.tsv");
    base.w2v->write_vec(dir / "embeddings.vec");
    base.artifact_dir = dir;
}

std::vector<std::vector<double>> embed_instances(const EmbeddingBase& src, std::span<const FirmYearInstance> instances,
                                                 const TextCache& texts) {
    std::vector<std::vector<double>> rows;
    rows.reserve(instances.size());
    std::vector<std::string> absent;
    std::vector<DocEmbedding> slots;
    for (const auto& inst : instances) {
        slots.clear();
        for (std::size_t s = 0; s < inst.history.size(); ++s) {
            if (src.w2v) {
                slots.push_back(embed_doc(texts.get(inst.history[s]), *src.w2v));
            } else {
                const auto key = inst.slot_key(s);
                auto it = src.table->rows.find(key);
                if (it == src.table->rows.end()) {
                    absent.push_back(key);
                    slots.push_back(DocEmbedding{std::vector<double>(src.table->dim, 0.0), EmbeddingSource::imported});
                } else {
                    slots.push_back(it->second);
                }
            }
        }
        rows.push_back(concat_history(slots));
    }
    if (!absent.empty()) {
        std::string msg = std::to_string(absent.size()) + " doc keys missing from the embedding table:";
        for (std::size_t i = 0; i < absent.size() && i < 20; ++i) msg += ' ' + absent[i];
        if (absent.size() > 20) msg += " ...";
        throw std::runtime_error(msg);
    }
    return rows;
}

EmbeddingFit embedding_pipeline(const EmbeddingBase& src, std::span<const FirmYearInstance> train,
                                std::span<const FirmYearInstance> val, const TextCache& texts, const Hyperparams& hp,
                                const ExperimentConfig& cfg, std::uint64_t seed) {
    if (!src.w2v && !src.table) throw std::invalid_argument("embedding pipeline without a source");
    assert_precedes(src.provenance, val, "embedding source");
    MlpHyperparams mh = cfg.mlp;
    json merged;
    to_json(merged, mh);
    for (const auto& [key, value] : hp.items()) merged[key] = value;
    merged.get_to(mh);

    const auto train_x = embed_instances(src, train, texts);
    const auto val_x = embed_instances(src, val, texts);
    std::vector<int> train_y, val_y;
    for (const auto& i : train) train_y.push_back(i.label);
    for (const auto& i : val) val_y.push_back(i.label);

    auto result = train_mlp(train_x, train_y, val_x, val_y, mh, seed);
    int last_year = src.provenance.cutoff_year;
    for (const auto& i : train) last_year = std::max(last_year, i.year);
    auto prov = provenance_of(train, last_year);
    if (src.provenance.max_anchor && (!prov.max_anchor || *prov.max_anchor < *src.provenance.max_anchor)) {
        prov.max_anchor = src.provenance.max_anchor;
    }
    EmbeddingFit fit;
    fit.log = result.log;
    const auto kind = src.w2v ? ModelKind::w2v : ModelKind::imported_embedding;
    fit.scorer = std::make_unique<EmbeddingScorer>(kind, src, std::move(result.model), hp, prov);
    return fit;
}

std::unique_ptr<Scorer> load_scorer(const std::filesystem::path& model_json) {
    const auto j = read_json(model_json);
    const auto dir = model_json.parent_path();
    const auto kind = parse_model_kind(j.at("model_kind").get<std::string>());
    if (kind == ModelKind::binary || kind == ModelKind::tfidf) return ClassicalScorer::load(j, dir);
    return EmbeddingScorer::load(j, dir);
}

}  // namespace bankbench
