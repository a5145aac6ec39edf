#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "bankbench/harness.hpp"
#include "bankbench/rng.hpp"

namespace bankbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::binary: return "binary";
        case ModelKind::tfidf: return "tfidf";
        case ModelKind::w2v: return "w2v";
        case ModelKind::imported_embedding: return "imported_embedding";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "binary") return ModelKind::binary;
    if (s == "tfidf") return ModelKind::tfidf;
    if (s == "w2v") return ModelKind::w2v;
    if (s == "imported_embedding") return ModelKind::imported_embedding;
    throw std::invalid_argument("unknown model_kind '" + std::string(s) + "'");
}

namespace {

std::set<std::string> allowed_keys(ModelKind k) {
    switch (k) {
        case ModelKind::binary: return {"C"};
        case ModelKind::tfidf: return {"C", "k"};
        default: return {"lr", "weight_decay", "hidden", "dropout", "batch_size", "max_epochs", "patience"};
    }
}

ordered_json default_space(ModelKind k, SearchKind search) {
    switch (k) {
        case ModelKind::binary: return {{"C", {0.01, 0.1, 1.0, 10.0, 100.0}}};
        case ModelKind::tfidf: return {{"C", {0.1, 1.0, 10.0, 100.0}}, {"k", {1000, 10000, 25000}}};
        default: break;
    }
    if (search == SearchKind::random) {
        return {{"lr", {{"log_uniform", {1e-4, 1e-2}}}},
                {"weight_decay", {{"log_uniform", {1e-6, 1e-2}}}},
                {"hidden", {{"choice", {16, 32, 64}}}},
                {"dropout", {{"uniform", {0.0, 0.5}}}}};
    }
    return {{"lr", {1e-3}}, {"weight_decay", {1e-4}}, {"hidden", {32}}, {"dropout", {0.2}}};
}

}  // namespace

ordered_json ExperimentConfig::effective_space() const {
    return space.is_null() ? default_space(model_kind, search) : space;
}

void ExperimentConfig::validate() const {
    split.validate();
    const auto sp = effective_space();
    if (!sp.is_object() || sp.empty()) throw std::invalid_argument("empty hyperparameter space");
    const auto allowed = allowed_keys(model_kind);
    for (const auto& [key, value] : sp.items()) {
        if (!allowed.contains(key)) {
            throw std::invalid_argument("hyperparameter '" + key + "' does not apply to model_kind " +
                                        to_string(model_kind));
        }
        if (search == SearchKind::grid) {
            if (!value.is_array() || value.empty()) {
                throw std::invalid_argument("grid entry '" + key + "' must be a non-empty list");
            }
        } else {
            const bool ok = value.is_object() && value.size() == 1 &&
                            ((value.contains("uniform") || value.contains("log_uniform")) ||
                             (value.contains("choice") && value["choice"].is_array() && !value["choice"].empty()));
            if (!ok) throw std::invalid_argument("random-search entry '" + key + "' needs uniform, log_uniform or choice");
            for (const char* d : {"uniform", "log_uniform"}) {
                if (!value.contains(d)) continue;
                const auto& r = value[d];
                if (!r.is_array() || r.size() != 2 || !(r[0].get<double>() <= r[1].get<double>())) {
                    throw std::invalid_argument("range for '" + key + "' must be [lo, hi]");
                }
                if (std::string(d) == "log_uniform" && !(r[0].get<double>() > 0.0)) {
                    throw std::invalid_argument("log_uniform range for '" + key + "' must be positive");
                }
            }
        }
    }
    if (search == SearchKind::random && n_trials < 1) throw std::invalid_argument("random search needs n_trials >= 1");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(majority_fraction > 0.0 && majority_fraction < 1.0)) {
        throw std::invalid_argument("majority_fraction must lie in (0,1)");
    }
    if (model_kind == ModelKind::binary && binary_k == 0) throw std::invalid_argument("binary_k must be positive");
    if (model_kind == ModelKind::imported_embedding && embedding_table.empty()) {
        throw std::invalid_argument("imported_embedding needs embedding_table");
    }
    if (recall_k == 0) throw std::invalid_argument("recall_k must be positive");
}

void to_json(ordered_json& j, const ExperimentConfig& c) {
    j = ordered_json::object();
    j["model_kind"] = to_string(c.model_kind);
    j["history_len"] = c.split.history_len;
    json split;
    to_json(split, c.split);
    j["split"] = split;
    j["search"] = c.search == SearchKind::grid ? "grid" : "random";
    j["n_trials"] = c.n_trials;
    j["space"] = c.effective_space();
    j["seed"] = c.seed;
    j["majority_fraction"] = c.majority_fraction;
    j["binary_k"] = c.binary_k;
    j["vocab_max_size"] = c.vocab_max_size;
    j["logreg"] = {{"max_iter", c.logreg.max_iter}, {"tol", c.logreg.tol}};
    j["skipgram"] = {{"dim", c.skipgram.dim},         {"window", c.skipgram.window}, {"negatives", c.skipgram.negatives},
                     {"epochs", c.skipgram.epochs},   {"lr", c.skipgram.lr}};
    json mlp;
    to_json(mlp, c.mlp);
    j["mlp"] = mlp;
    j["embedding_table"] = c.embedding_table;
    j["recall_k"] = c.recall_k;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
    };
    if (j.contains("model_kind")) c.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    if (j.contains("split")) j.at("split").get_to(c.split);
    opt("history_len", c.split.history_len);
    if (j.contains("search")) {
        const auto s = j.at("search").get<std::string>();
        if (s == "grid") {
            c.search = SearchKind::grid;
        } else if (s == "random") {
            c.search = SearchKind::random;
        } else {
            throw std::invalid_argument("search must be grid or random");
        }
    }
    opt("n_trials", c.n_trials);
    if (j.contains("space") && !j.at("space").is_null()) c.space = ordered_json::parse(j.at("space").dump());
    opt("seed", c.seed);
    opt("threads", c.threads);
    opt("majority_fraction", c.majority_fraction);
    opt("binary_k", c.binary_k);
    opt("vocab_max_size", c.vocab_max_size);
    if (j.contains("logreg")) {
        const auto& l = j.at("logreg");
        if (l.contains("max_iter")) l.at("max_iter").get_to(c.logreg.max_iter);
        if (l.contains("tol")) l.at("tol").get_to(c.logreg.tol);
    }
    if (j.contains("skipgram")) {
        const auto& s = j.at("skipgram");
        if (s.contains("dim")) s.at("dim").get_to(c.skipgram.dim);
        if (s.contains("window")) s.at("window").get_to(c.skipgram.window);
        if (s.contains("negatives")) s.at("negatives").get_to(c.skipgram.negatives);
        if (s.contains("epochs")) s.at("epochs").get_to(c.skipgram.epochs);
        if (s.contains("lr")) s.at("lr").get_to(c.skipgram.lr);
    }
    if (j.contains("mlp")) j.at("mlp").get_to(c.mlp);
    opt("embedding_table", c.embedding_table);
    opt("recall_k", c.recall_k);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::vector<Hyperparams> enumerate_trials(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto sp = cfg.effective_space();
    std::vector<Hyperparams> out;
    if (cfg.search == SearchKind::grid) {
        out.push_back(Hyperparams::object());
        for (const auto& [key, values] : sp.items()) {
            std::vector<Hyperparams> next;
            for (const auto& partial : out) {
                for (const auto& v : values) {
                    auto h = partial;
                    h[key] = v;
                    next.push_back(std::move(h));
                }
            }
            out = std::move(next);
        }
        return out;
    }
    Rng rng(mix_seed(cfg.seed, 0x40));
    for (int t = 0; t < cfg.n_trials; ++t) {
        Hyperparams h = Hyperparams::object();
        for (const auto& [key, dist] : sp.items()) {
            if (dist.contains("choice")) {
                const auto& ch = dist["choice"];
                h[key] = ch[rng.below(ch.size())];
            } else if (dist.contains("uniform")) {
                h[key] = rng.uniform(dist["uniform"][0].get<double>(), dist["uniform"][1].get<double>());
            } else {
                const double lo = std::log(dist["log_uniform"][0].get<double>());
                const double hi = std::log(dist["log_uniform"][1].get<double>());
                h[key] = std::exp(rng.uniform(lo, hi));
            }
        }
        out.push_back(std::move(h));
    }
    return out;
}

double weighted_auc(const std::map<int, double>& auc, const std::map<int, std::size_t>& counts) {
    double num = 0.0, den = 0.0;
    for (const auto& [year, a] : auc) {
        const auto w = static_cast<double>(counts.at(year));
        num += w * a;
        den += w;
    }
    if (den <= 0.0) throw std::invalid_argument("weighted AUC over no instances");
    return num / den;
}

ordered_json trial_to_json(const TrialResult& t) {
    ordered_json j;
    j["id"] = t.id;
    j["hyperparams"] = t.hyperparams;
    ordered_json per_year = ordered_json::object();
    for (const auto& [year, a] : t.val_auc) {
        per_year[std::to_string(year)] = {{"auc", a}, {"n", t.val_count.count(year) ? t.val_count.at(year) : 0}};
    }
    j["validation"] = per_year;
    j["objective"] = t.objective;
    j["best_epoch"] = t.best_epoch;
    if (!t.error.empty()) j["error"] = t.error;
    return j;
}

TrialResult trial_from_json(const json& j) {
    TrialResult t;
    j.at("id").get_to(t.id);
    t.hyperparams = Hyperparams::parse(j.at("hyperparams").dump());
    if (j.contains("validation")) {
        for (const auto& [year, v] : j.at("validation").items()) {
            t.val_auc[std::stoi(year)] = v.at("auc").get<double>();
            t.val_count[std::stoi(year)] = v.at("n").get<std::size_t>();
        }
    }
    if (j.contains("objective")) j.at("objective").get_to(t.objective);
    if (j.contains("best_epoch")) j.at("best_epoch").get_to(t.best_epoch);
    if (j.contains("error")) j.at("error").get_to(t.error);
    return t;
}

std::string markdown_report(const std::vector<std::pair<std::string, std::map<int, MetricsReport>>>& columns) {
    auto fmt = [](double x) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2) << x;
        return s.str();
    };
    auto cell = [&](const std::map<int, MetricsReport>& reports, auto get) {
        std::string out;
        bool first = true;
        for (const auto& [year, r] : reports) {
            const auto v = fmt(get(r));
            out += first ? v : " (" + v + ")";
            first = false;
        }
        return out;
    };
    std::ostringstream md;
    md << "| |";
    for (const auto& [label, reports] : columns) md << ' ' << label << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
    md << '\n';
    auto row = [&](const std::string& name, auto get) {
        md << "| " << name << " |";
        for (const auto& [label, reports] : columns) md << ' ' << cell(reports, get) << " |";
        md << '\n';
    };
    std::size_t k = 100;
    if (!columns.empty() && !columns.front().second.empty()) k = columns.front().second.begin()->second.k;
    row("AUC", [](const MetricsReport& r) { return r.auc; });
    row("AP", [](const MetricsReport& r) { return r.ap; });
    row("recall@" + std::to_string(k), [](const MetricsReport& r) { return r.recall_at_k; });
    row("CAP", [](const MetricsReport& r) { return r.cap_ratio; });
    for (std::size_t d = 0; d < 5; ++d) {
        row(std::to_string(d + 1), [d](const MetricsReport& r) { return r.cumulative_decile[d]; });
    }
    return md.str();
}

}  // namespace bankbench
