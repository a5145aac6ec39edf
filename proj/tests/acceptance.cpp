// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bankbench/harness.hpp"
#include "oracles.hpp"

using namespace bankbench;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using nlohmann::json;

namespace {

struct Outcome {
    enum Kind { pass, fail, skip } kind = pass;
    std::string detail;
};

class Checks {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    [[nodiscard]] bool ok() const { return failures_.empty(); }
    [[nodiscard]] std::string summary(std::size_t max = 5) const {
        std::string s;
        for (std::size_t i = 0; i < failures_.size() && i < max; ++i) s += (i ? "; " : "") + failures_[i];
        if (failures_.size() > max) s += "; +" + std::to_string(failures_.size() - max) + " more";
        return s;
    }

private:
    std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 3) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- metric oracle suite ----------------------------------------------------

Outcome metric_oracles() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst_auc = 0, worst_ap = 0, worst_cap = 0;
    int tie_free = 0;
    for (int set = 0; set < 500; ++set) {
        const std::size_t n = 2 + rng.below(299);
        const bool ties = set % 2 == 1;
        RankedPredictions p;
        for (std::size_t i = 0; i < n; ++i) {
            p.scores.push_back(ties ? static_cast<double>(rng.below(1 + n / 10)) : rng.uniform());
            p.labels.push_back(rng.bernoulli(0.05 + 0.5 * rng.uniform()) ? 1 : 0);
        }
        p.labels[rng.below(n)] = 1;
        std::size_t neg = rng.below(n);
        while (p.labels[neg] == 1 && p.positives() == n) neg = rng.below(n);
        if (p.positives() == n) p.labels[(neg + 1) % n] = 0;
        if (p.positives() == n) continue;

        worst_auc = std::max(worst_auc, std::abs(roc_auc(p) - oracle::auc(p.scores, p.labels)));
        worst_ap = std::max(worst_ap, std::abs(average_precision(p) - oracle::average_precision(p.scores, p.labels)));
        if (std::set<double>(p.scores.begin(), p.scores.end()).size() == n) {
            ++tie_free;
            worst_cap = std::max(worst_cap, std::abs(cap_ratio(p) - (2 * roc_auc(p) - 1)));
        }
    }
    const double secs = seconds_since(t0);
    Checks c;
    c.expect(worst_auc <= 1e-12, "AUC |d|=" + fmt(worst_auc));
    c.expect(worst_ap <= 1e-12, "AP |d|=" + fmt(worst_ap));
    c.expect(worst_cap <= 1e-12, "CAP |d|=" + fmt(worst_cap));
    c.expect(tie_free >= 200, "only " + std::to_string(tie_free) + " tie-free sets");
    c.expect(secs < 30, "runtime " + fmt(secs) + "s");
    const std::string detail = "500 sets, max|dAUC|=" + fmt(worst_auc) + " max|dAP|=" + fmt(worst_ap) +
                               " max|dCAP|=" + fmt(worst_cap) + " (" + std::to_string(tie_free) +
                               " tie-free), " + fmt(secs) + "s";
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, detail + " | " + c.summary()};
}

// --- gradient checks ----------------------------------------------------------

double rel_err(double fd, double analytic, double floor) {
    return std::abs(fd - analytic) / std::max(floor, std::abs(fd) + std::abs(analytic));
}

double logreg_gradient_check(Rng& rng) {
    const std::size_t dim = 12, n = 60;
    std::vector<SparseVector> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<std::uint32_t, double>> e;
        for (std::uint32_t f = 0; f < dim; ++f) {
            if (rng.bernoulli(0.4)) e.emplace_back(f, rng.uniform(0, 2));
        }
        xs.push_back(SparseVector::from_pairs(e, dim));
        ys.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    ys[0] = 1;
    ys[1] = 0;
    double worst = 0;
    for (double C : {0.05, 1.0, 50.0}) {
        LogisticModel m;
        m.C = C;
        m.bias = rng.uniform(-1, 1);
        for (std::size_t f = 0; f < dim; ++f) m.weights.push_back(rng.uniform(-1, 1));
        const auto g = gradient(m, xs, ys);
        const double h = 1e-6;
        auto probe = [&](double& param, double analytic) {
            const double orig = param;
            param = orig + h;
            const double up = logreg_loss(m, xs, ys);
            param = orig - h;
            const double down = logreg_loss(m, xs, ys);
            param = orig;
            worst = std::max(worst, rel_err((up - down) / (2 * h), analytic, 1e-3));
        };
        for (std::size_t f = 0; f < dim; ++f) probe(m.weights[f], g.weights[f]);
        probe(m.bias, g.bias);
    }
    return worst;
}

double mlp_gradient_check(Rng& rng) {
    struct Config {
        std::size_t in, hidden;
        double dropout, lambda;
    };
    const Config configs[] = {{100, 8, 0.0, 0.0},  {100, 16, 0.2, 1e-3}, {100, 64, 0.5, 1e-2}, {300, 8, 0.1, 1e-4},
                              {300, 32, 0.0, 1e-2}, {300, 64, 0.3, 0.0},  {768, 8, 0.2, 1e-3},  {768, 16, 0.0, 1e-4},
                              {768, 32, 0.4, 1e-2}, {768, 64, 0.1, 1e-3}};
    double worst = 0;
    for (const auto& c : configs) {
        auto m = MlpModel::he_init(c.in, c.hidden, c.dropout, rng);
        for (auto& p : m.params()) p += 0.05 * rng.normal();
        std::vector<std::vector<double>> xs(8, std::vector<double>(c.in));
        for (auto& x : xs) {
            for (auto& v : x) v = rng.normal();
        }
        MlpBatch batch;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            batch.xs.emplace_back(xs[i]);
            batch.ys.push_back(static_cast<int>(i % 2));
        }
        std::vector<DropoutMask> masks;
        if (c.dropout > 0) {
            for (std::size_t i = 0; i < xs.size(); ++i) masks.push_back(draw_mask(m, rng));
        }
        const auto g = backward(m, batch, c.lambda, masks);
        const double h = 1e-6;
        for (int t = 0; t < 50; ++t) {
            // always include the output layer, then random coordinates
            const std::size_t i = t < 5 ? m.n_params() - 1 - static_cast<std::size_t>(t) : rng.below(m.n_params());
            const double orig = m.params()[i];
            m.params()[i] = orig + h;
            const double up = mlp_loss(m, batch, c.lambda, masks);
            m.params()[i] = orig - h;
            const double down = mlp_loss(m, batch, c.lambda, masks);
            m.params()[i] = orig;
            worst = std::max(worst, rel_err((up - down) / (2 * h), g.params[i], 1e-4));
        }
    }
    return worst;
}

double skipgram_gradient_check(Rng& rng) {
    std::vector<TokenizedDoc> docs(1);
    for (int i = 0; i < 40; ++i) docs[0].push_back("tok" + std::to_string(i));
    const std::size_t dim = 100;
    auto m = init_skipgram(Vocabulary::build(docs), dim, 1);
    for (auto& x : m.input_vectors) x = rng.uniform(-0.3, 0.3);
    for (auto& x : m.output_vectors) x = rng.uniform(-0.3, 0.3);
    const auto V = static_cast<std::uint32_t>(m.vocab.size());
    double worst = 0;
    const double h = 1e-5;
    for (int coord = 0; coord < 100; ++coord) {
        const auto center = static_cast<std::uint32_t>(rng.below(V));
        const auto context = static_cast<std::uint32_t>(rng.below(V));
        std::vector<std::uint32_t> neg;
        for (int k = 0; k < 5; ++k) neg.push_back(static_cast<std::uint32_t>(rng.below(V)));
        const auto g = skipgram_pair_gradient(m, center, context, neg);
        const std::size_t j = rng.below(dim);
        const int block = static_cast<int>(rng.below(3));
        double* param;
        double analytic = 0;
        if (block == 0) {
            param = &m.input(center)[j];
            analytic = g.center[j];
        } else {
            const auto id = block == 1 ? context : neg[rng.below(neg.size())];
            param = &m.output(id)[j];
            if (id == context) analytic += g.context[j];
            for (std::size_t k = 0; k < neg.size(); ++k) {
                if (neg[k] == id) analytic += g.negatives[k][j];
            }
        }
        const double orig = *param;
        *param = orig + h;
        const double up = skipgram_pair_loss(m, center, context, neg);
        *param = orig - h;
        const double down = skipgram_pair_loss(m, center, context, neg);
        *param = orig;
        worst = std::max(worst, rel_err((up - down) / (2 * h), analytic, 1e-6));
    }
    return worst;
}

Outcome gradient_checks() {
    const auto t0 = Clock::now();
    Rng rng(99);
    const double lr = logreg_gradient_check(rng);
    const double mlp = mlp_gradient_check(rng);
    const double sg = skipgram_gradient_check(rng);
    const double secs = seconds_since(t0);
    Checks c;
    c.expect(lr <= 1e-6, "logreg rel err " + fmt(lr));
    c.expect(mlp <= 1e-4, "mlp rel err " + fmt(mlp));
    c.expect(sg <= 1e-4, "skip-gram rel err " + fmt(sg));
    c.expect(secs < 60, "runtime " + fmt(secs) + "s");
    const std::string detail = "logreg " + fmt(lr) + ", mlp(10 configs, dims 100/300/768) " + fmt(mlp) +
                               ", skip-gram(100 coords) " + fmt(sg) + ", " + fmt(secs) + "s";
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, detail + " | " + c.summary()};
}

// --- leakage fixture ------------------------------------------------------------

Company fixture_company(const std::string& cik, const std::vector<int>& years, std::optional<Date> bankrupt) {
    Company c;
    c.cik = cik;
    for (int y : years) {
        c.reports.push_back(Report{cik, Date(y - 1, 12, 31), Date(y, 3, 15), "mdna " + cik + " " + std::to_string(y)});
    }
    if (bankrupt) c.bankruptcy = BankruptcyFiling{cik, *bankrupt, Chapter::k11};
    return c;
}

std::vector<int> span_years(int from, int to, std::set<int> skip = {}) {
    std::vector<int> v;
    for (int y = from; y <= to; ++y) {
        if (!skip.contains(y)) v.push_back(y);
    }
    return v;
}

Outcome leakage_fixture() {
    // 20 steady filers, 10 permanent stops after 2013, 10 with gaps in 2012 and
    // 2017, 5 silent in their bankruptcy year, 4 ordinary bankruptcies, and one
    // firm failing between fiscal year end 2016-12-31 and its 2017 filing.
    Corpus corpus;
    auto id = [](char g, int i) { return std::string(1, g) + std::to_string(100 + i); };
    for (int i = 0; i < 20; ++i) corpus.push_back(fixture_company(id('a', i), span_years(2010, 2020), {}));
    for (int i = 0; i < 10; ++i) corpus.push_back(fixture_company(id('b', i), span_years(2010, 2013), {}));
    for (int i = 0; i < 10; ++i) corpus.push_back(fixture_company(id('c', i), span_years(2010, 2020, {2012, 2017}), {}));
    for (int i = 0; i < 5; ++i) corpus.push_back(fixture_company(id('d', i), span_years(2010, 2014), Date(2015, 9, 1)));
    for (int i = 0; i < 4; ++i) corpus.push_back(fixture_company(id('e', i), span_years(2010, 2016), Date(2016, 10, 1)));
    const auto leak = fixture_company("f100", span_years(2010, 2016), Date(2017, 2, 1));
    corpus.push_back(leak);
    std::sort(corpus.begin(), corpus.end(), [](const Company& a, const Company& b) { return a.cik < b.cik; });

    Checks c;
    auto count = [](const std::vector<FirmYearInstance>& v) {
        std::size_t pos = 0;
        for (const auto& i : v) pos += static_cast<std::size_t>(i.label);
        return std::pair{v.size(), pos};
    };
    auto expect_counts = [&](const std::string& what, const std::vector<FirmYearInstance>& v, std::size_t n,
                             std::size_t pos) {
        const auto [got_n, got_pos] = count(v);
        c.expect(got_n == n && got_pos == pos, what + ": " + std::to_string(got_n) + "/" + std::to_string(got_pos) +
                                                   " instances/positives, expected " + std::to_string(n) + "/" +
                                                   std::to_string(pos));
    };

    // hand-counted: per group instances (positives) for 2010..cutoff
    SplitSpec spec;
    spec.all_missing_keep_rate = 1.0;
    // cutoff 2015: a 20*6, b 10*6, c 10*6, d 5*6 (5), e 4*6, f 6
    const auto train = build_training_set(corpus, spec, 2015);
    expect_counts("train<=2015", train, 300, 5);
    // cutoff 2017: a 20*8, b 10*8, c 10*8, d 5*6 (5), e 4*7 (4), f 7 (1)
    const auto final_train = build_training_set(corpus, spec, 2017);
    expect_counts("train<=2017", final_train, 385, 10);
    // 35 single-slot all-missing instances up to 2015 (b 2014-15, c 2012, d 2015): keep round(0.05*35) = 2
    const auto pruned = build_training_set(corpus, SplitSpec{}, 2015);
    std::size_t observed = 0, kept_missing = 0;
    for (const auto& i : pruned) (i.all_missing() ? kept_missing : observed) += 1;
    c.expect(pruned.size() == 267 && observed == 265 && kept_missing == 2,
             "train<=2015 pruned: " + std::to_string(observed) + " observed + " + std::to_string(kept_missing) +
                 " all-missing, expected 265 + 2");

    std::map<int, std::vector<FirmYearInstance>> eval;
    SplitSpec h3;
    h3.history_len = 3;
    for (int y : {2017, 2018, 2019, 2020}) eval[y] = build_eval_set(corpus, y, h3);
    expect_counts("eval 2017", eval[2017], 40, 0);  // a, b (active via 2013), c
    expect_counts("eval 2018", eval[2018], 30, 0);  // b inactive, d/e/f past bankruptcy
    expect_counts("eval 2019", eval[2019], 30, 0);
    expect_counts("eval 2020", eval[2020], 30, 0);

    // the leakage case: no 2017 instance; the 2016 window owns the label
    c.expect(!build_instance(leak, 2017, 1).has_value(), "leakage case produced a 2017 instance");
    const auto leak16 = build_instance(leak, 2016, 1);
    c.expect(leak16 && leak16->label == 1, "leakage firm's 2016 instance is not positive");
    for (const auto& i : eval[2017]) c.expect(i.cik != "f100", "leakage firm in eval 2017");

    // silence scenario: positive with a missing anchor slot
    for (const auto& i : train) {
        if (i.cik[0] == 'd' && i.year == 2015) c.expect(i.label == 1 && i.imputed && i.all_missing(), "silent firm 2015");
    }

    // every slot's report was filed no later than window_start, and texts match
    std::map<std::string, const Company*> by_cik;
    for (const auto& co : corpus) by_cik[co.cik] = &co;
    auto check_slots = [&](const std::vector<FirmYearInstance>& v, const std::string& what) {
        for (const auto& i : v) {
            const auto& co = *by_cik.at(i.cik);
            const int h = static_cast<int>(i.history.size());
            for (int s = 0; s < h; ++s) {
                const Report* r = co.report_filed_in(i.year - h + 1 + s);
                if (is_missing_slot(i.history[s])) {
                    c.expect(r == nullptr, what + " " + i.cik + " slot marked missing although a report exists");
                    continue;
                }
                c.expect(r && r->mdna == i.history[s], what + " " + i.cik + " slot text mismatch");
                if (r) c.expect(r->filing_date <= i.window_start, what + " " + i.cik + " slot after window_start");
                if (r && s + 1 < h) c.expect(r->filing_date < i.window_start, what + " " + i.cik + " early slot");
            }
            if (co.bankruptcy) c.expect(co.bankruptcy->filing_date >= i.window_start, what + " " + i.cik + " post-bankruptcy instance");
        }
    };
    SplitSpec h3_keep = h3;
    h3_keep.all_missing_keep_rate = 1.0;
    const auto train3 = build_training_set(corpus, h3_keep, 2015);
    const auto final3 = build_training_set(corpus, h3_keep, 2017);
    expect_counts("train<=2015 H=3", train3, 300, 5);
    check_slots(train3, "train");
    check_slots(final3, "final");
    for (const auto& [y, v] : eval) check_slots(v, "eval " + std::to_string(y));

    // no interleaving: fitting anchors strictly precede evaluation anchors
    auto max_anchor = [](const std::vector<FirmYearInstance>& v) {
        Date m;
        for (const auto& i : v) m = std::max(m, i.window_start);
        return m;
    };
    auto min_anchor = [](const std::vector<FirmYearInstance>& v) {
        Date m = Date(9999, 12, 31);
        for (const auto& i : v) m = std::min(m, i.window_start);
        return m;
    };
    c.expect(max_anchor(train3) < min_anchor(eval[2017]) && max_anchor(train3) < min_anchor(eval[2018]),
             "phase-1 training anchors reach the validation years");
    c.expect(max_anchor(final3) < min_anchor(eval[2019]) && max_anchor(final3) < min_anchor(eval[2020]),
             "phase-2 training anchors reach the test years");
    try {
        assert_precedes(provenance_of(final3, 2017), eval[2019], "fixture");
    } catch (const LeakageError& e) {
        c.expect(false, e.what());
    }
    bool caught = false;
    try {
        assert_precedes(provenance_of(final3, 2017), eval[2017], "fixture");
    } catch (const LeakageError&) {
        caught = true;
    }
    c.expect(caught, "overlapping evaluation set was not flagged");
    for (const auto& [y, v] : eval) {
        std::set<std::string> ciks;
        for (const auto& i : v) c.expect(ciks.insert(i.cik).second, "duplicate company in eval " + std::to_string(y));
    }

    const std::string detail = "50 companies; train 300/385 (267 pruned), eval 40/30/30/30, leakage case excluded";
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, c.summary()};
}

// --- planted signal ---------------------------------------------------------------

struct PlantedSettings {
    std::size_t n_companies = 2000;
    double base_rate = 0.02;
    std::uint64_t corpus_seed = 3;
    int history_len = 3;
    int threads = 1;
};

SyntheticConfig planted_config(const PlantedSettings& s) {
    SyntheticConfig sc;
    sc.n_companies = s.n_companies;
    sc.first_year = 2009;
    sc.last_year = 2020;
    sc.base_bankruptcy_rate = s.base_rate;
    sc.rng_seed = s.corpus_seed;
    return sc;
}

ExperimentConfig planted_experiment(ModelKind kind, const PlantedSettings& s) {
    json j{{"model_kind", to_string(kind)}, {"history_len", s.history_len}, {"threads", s.threads}};
    if (kind == ModelKind::w2v) j["space"] = {{"lr", {1e-3}}, {"patience", {40}}};
    return config_from_json(j);
}

Outcome planted_signal(const fs::path& work, const PlantedSettings& s) {
    const auto t0 = Clock::now();
    const auto sc = planted_config(s);
    const auto corpus = generate_synthetic(sc);
    Checks c;
    std::string detail = std::to_string(sc.n_companies) + " companies, " +
                         std::to_string(sc.last_year - sc.first_year + 1) + " years, " +
                         std::to_string(sc.distress_lexicon.size()) + "-token lexicon, H=" +
                         std::to_string(s.history_len);

    std::set<std::string> lexicon_lemmas;
    for (const auto& w : sc.distress_lexicon) {
        const auto toks = preprocess(w);
        if (toks.size() == 1) lexicon_lemmas.insert(toks[0]);
    }

    for (auto kind : {ModelKind::binary, ModelKind::tfidf, ModelKind::w2v}) {
        const auto name = to_string(kind);
        const auto cfg = planted_experiment(kind, s);
        const auto tk = Clock::now();
        ExperimentResult r;
        try {
            r = run_experiment(corpus, cfg, work / ("planted_" + name));
        } catch (const std::exception& e) {
            c.expect(false, name + " failed: " + e.what());
            continue;
        }
        detail += " | " + name + ":";
        for (const auto& [year, rep] : r.test_reports) {
            const double achievable = static_cast<double>(std::min<std::size_t>(rep.k, rep.n_pos)) /
                                      static_cast<double>(rep.n_pos);
            detail += " " + std::to_string(year) + " AUC " + fmt(rep.auc) + " R@" + std::to_string(rep.k) + " " +
                      fmt(rep.recall_at_k) + "/" + fmt(0.8 * achievable) + " (P=" + std::to_string(rep.n_pos) + ")";
            c.expect(rep.auc >= 0.90, name + " " + std::to_string(year) + " AUC " + fmt(rep.auc) + " < 0.90");
            c.expect(rep.recall_at_k >= 0.8 * achievable,
                     name + " " + std::to_string(year) + " recall@100 " + fmt(rep.recall_at_k) + " < " +
                         fmt(0.8 * achievable));
        }
        c.expect(r.test_reports.size() == 2, name + " reported " + std::to_string(r.test_reports.size()) + " years");
        if (kind == ModelKind::binary) {
            const auto scorer = load_scorer(work / ("planted_" + name) / "final" / "model.json");
            const auto feats = selected_features(*scorer);
            std::size_t hits = 0;
            for (const auto& f : feats) hits += lexicon_lemmas.contains(f);
            detail += " selected " + std::to_string(hits) + "/" + std::to_string(feats.size()) + " lexicon";
            c.expect(feats.size() == 20, "binary selected " + std::to_string(feats.size()) + " features");
            c.expect(hits >= 15, "binary recovered " + std::to_string(hits) + " < 15 lexicon tokens");
        }
        detail += " (" + fmt(seconds_since(tk), 3) + "s)";
    }
    const double secs = seconds_since(t0);
    detail += " | total " + fmt(secs, 4) + "s";
    c.expect(secs < 600, "runtime " + fmt(secs, 4) + "s >= 600s");
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, detail + " || " + c.summary(10)};
}

// --- determinism ------------------------------------------------------------------------

Outcome determinism(const fs::path& work) {
    SyntheticConfig sc;
    sc.n_companies = 400;
    sc.base_bankruptcy_rate = 0.02;
    sc.doc_length_mean = 80;
    sc.doc_length_std = 15;
    sc.rng_seed = 17;
    const auto corpus = generate_synthetic(sc);
    Checks c;
    std::string detail;
    for (auto kind : {ModelKind::binary, ModelKind::tfidf, ModelKind::w2v}) {
        const auto name = to_string(kind);
        json j{{"model_kind", name}, {"history_len", 3}, {"threads", 1}, {"seed", 5}};
        if (kind == ModelKind::w2v) j["mlp"] = {{"max_epochs", 30}};
        const auto cfg = config_from_json(j);
        const auto a = work / ("determinism_" + name + "_a");
        const auto b = work / ("determinism_" + name + "_b");
        try {
            run_experiment(corpus, cfg, a);
            run_experiment(corpus, cfg, b);
        } catch (const std::exception& e) {
            c.expect(false, name + " failed: " + e.what());
            continue;
        }
        const auto ra = slurp(a / "report.json");
        const auto rb = slurp(b / "report.json");
        c.expect(!ra.empty() && ra == rb, name + " report.json differs");
        detail += (detail.empty() ? "" : ", ") + name + " " + std::to_string(ra.size()) + " bytes identical";
    }
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, c.summary()};
}

// --- real data (conditional) ----------------------------------------------------------

Outcome real_data(const fs::path& work, const std::string& dir, int threads) {
    if (dir.empty() || !fs::exists(fs::path(dir) / "reports.jsonl") || !fs::exists(fs::path(dir) / "bankruptcies.jsonl")) {
        return {Outcome::skip, "no real corpus (set BANKBENCH_REAL_DATA or --real-data to a directory with "
                               "reports.jsonl and bankruptcies.jsonl)"};
    }
    const auto corpus = load_corpus_dir(dir).companies;
    Checks c;
    std::string detail;
    const auto st = corpus_stats(corpus);
    auto within = [&](const std::string& what, double got, double target) {
        detail += what + " " + fmt(got, 5) + " (target " + fmt(target, 5) + "); ";
        c.expect(std::abs(got - target) <= 0.10 * target, what + " " + fmt(got, 5) + " not within 10% of " + fmt(target, 5));
    };
    within("reports/year", st.reports_per_year_summary.mean, 7599);
    within("bankruptcies/year", st.bankruptcies_per_year_summary.mean, 39);
    within("new firms/year", st.new_firms_per_year_summary.mean, 1467);
    within("doc length", st.doc_length.mean, 6492);

    struct Target {
        int h;
        std::map<int, double> auc;
    };
    for (const Target& t : {Target{1, {{2019, 0.88}}}, Target{3, {{2019, 0.95}, {2020, 0.95}}}}) {
        json j{{"model_kind", "w2v"}, {"history_len", t.h}, {"threads", threads}};
        try {
            const auto r = run_experiment(corpus, config_from_json(j), work / ("real_w2v_h" + std::to_string(t.h)));
            for (const auto& [year, target] : t.auc) {
                const double got = r.test_reports.at(year).auc;
                detail += "W2V H=" + std::to_string(t.h) + " " + std::to_string(year) + " AUC " + fmt(got) + "; ";
                c.expect(std::abs(got - target) <= 0.05, "W2V H=" + std::to_string(t.h) + " " +
                                                             std::to_string(year) + " AUC " + fmt(got) +
                                                             " not within 0.05 of " + fmt(target));
            }
        } catch (const std::exception& e) {
            c.expect(false, std::string("W2V run failed: ") + e.what());
        }
    }
    return c.ok() ? Outcome{Outcome::pass, detail} : Outcome{Outcome::fail, detail + "| " + c.summary()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bankbench acceptance suite"};
    std::string work = (fs::temp_directory_path() / "bankbench_acceptance").string();
    std::string real_dir;
    if (const char* env = std::getenv("BANKBENCH_REAL_DATA")) real_dir = env;
    std::vector<std::string> only;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--work", work, "Scratch directory for experiment outputs");
    app.add_option("--real-data", real_dir, "Directory with a real corpus for the conditional criterion");
    app.add_option("--only", only, "Run only the named criteria");
    app.add_option("--threads", threads, "Trial threads for the planted-signal runs");
    PlantedSettings planted;
    app.add_option("--corpus-seed", planted.corpus_seed, "Seed of the planted-signal corpus");
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(work);
    fs::create_directories(work);

    planted.threads = threads;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric-oracles", metric_oracles},
        {"gradient-checks", gradient_checks},
        {"leakage-fixture", leakage_fixture},
        {"planted-signal", [&] { return planted_signal(work, planted); }},
        {"determinism", [&] { return determinism(work); }},
        {"real-data", [&] { return real_data(work, real_dir, threads); }},
    };

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::fail ? "FAIL" : "SKIP";
        failed += o.kind == Outcome::fail;
        std::cout << tag << "  " << name << "  " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
