#include "bankbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "numfmt.hpp"

namespace bankbench {

std::size_t RankedPredictions::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void RankedPredictions::check() const {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels length mismatch");
    if (scores.empty()) throw std::invalid_argument("no predictions");
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0/1");
    }
    for (double s : scores) {
        if (std::isnan(s)) throw std::invalid_argument("NaN score");
    }
}

namespace {

void require_positive(const RankedPredictions& p) {
    p.check();
    if (p.positives() == 0) throw std::invalid_argument("metric needs at least one positive");
}

void require_both(const RankedPredictions& p) {
    require_positive(p);
    if (p.positives() == p.size()) throw std::invalid_argument("metric needs at least one negative");
}

// Indices by descending score, equal scores in input order.
std::vector<std::size_t> descending_order(const RankedPredictions& p) {
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.scores[a] > p.scores[b]; });
    return order;
}

struct Group {
    std::size_t size = 0;
    std::size_t pos = 0;
};

// Tie groups in descending score order.
std::vector<Group> tie_groups(const RankedPredictions& p) {
    const auto order = descending_order(p);
    std::vector<Group> groups;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || p.scores[order[i]] != p.scores[order[i - 1]]) groups.emplace_back();
        ++groups.back().size;
        groups.back().pos += static_cast<std::size_t>(p.labels[order[i]]);
    }
    return groups;
}

}  // namespace

double roc_auc(const RankedPredictions& p) {
    require_both(p);
    // ascending ranks, average over ties
    auto groups = tie_groups(p);
    std::reverse(groups.begin(), groups.end());
    double rank_sum = 0.0;
    double next_rank = 1.0;
    for (const auto& g : groups) {
        const double avg = next_rank + (static_cast<double>(g.size) - 1.0) / 2.0;
        rank_sum += avg * static_cast<double>(g.pos);
        next_rank += static_cast<double>(g.size);
    }
    const auto n_pos = static_cast<double>(p.positives());
    const auto n_neg = static_cast<double>(p.size()) - n_pos;
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double average_precision(const RankedPredictions& p) {
    require_positive(p);
    const auto total_pos = static_cast<double>(p.positives());
    double ap = 0.0, prev_recall = 0.0;
    std::size_t seen = 0, tp = 0;
    for (const auto& g : tie_groups(p)) {
        seen += g.size;
        tp += g.pos;
        const double recall = static_cast<double>(tp) / total_pos;
        ap += (recall - prev_recall) * static_cast<double>(tp) / static_cast<double>(seen);
        prev_recall = recall;
    }
    return ap;
}

double recall_at_k(const RankedPredictions& p, std::size_t k) {
    require_positive(p);
    if (k == 0) throw std::invalid_argument("recall@k needs k >= 1");
    const auto order = descending_order(p);
    k = std::min(k, order.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) hits += static_cast<std::size_t>(p.labels[order[i]]);
    return static_cast<double>(hits) / static_cast<double>(p.positives());
}

std::vector<CurvePoint> cap_curve(const RankedPredictions& p) {
    require_positive(p);
    const auto n = static_cast<double>(p.size());
    const auto total_pos = static_cast<double>(p.positives());
    std::vector<CurvePoint> pts{{0.0, 0.0}};
    std::size_t seen = 0, tp = 0;
    for (const auto& g : tie_groups(p)) {
        seen += g.size;
        tp += g.pos;
        pts.push_back({static_cast<double>(seen) / n, static_cast<double>(tp) / total_pos});
    }
    return pts;
}

std::vector<CurvePoint> roc_curve(const RankedPredictions& p) {
    require_both(p);
    const auto total_pos = static_cast<double>(p.positives());
    const auto total_neg = static_cast<double>(p.size()) - total_pos;
    std::vector<CurvePoint> pts{{0.0, 0.0}};
    std::size_t fp = 0, tp = 0;
    for (const auto& g : tie_groups(p)) {
        tp += g.pos;
        fp += g.size - g.pos;
        pts.push_back({static_cast<double>(fp) / total_neg, static_cast<double>(tp) / total_pos});
    }
    return pts;
}

double cap_ratio(const RankedPredictions& p) {
    require_both(p);
    const auto pts = cap_curve(p);
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
    const double pi = static_cast<double>(p.positives()) / static_cast<double>(p.size());
    const double perfect = 1.0 - pi / 2.0;
    return (area - 0.5) / (perfect - 0.5);
}

std::array<double, 10> decile_ranks(const RankedPredictions& p) {
    require_positive(p);
    const auto order = descending_order(p);
    const std::size_t n = order.size();
    const auto total_pos = static_cast<double>(p.positives());
    std::array<double, 10> out{};
    std::size_t pos = 0, idx = 0;
    for (std::size_t i = 1; i <= 10; ++i) {
        const std::size_t cut = (i * n + 9) / 10;
        for (; idx < cut; ++idx) pos += static_cast<std::size_t>(p.labels[order[idx]]);
        out[i - 1] = static_cast<double>(pos) / total_pos;
    }
    return out;
}

MetricsReport evaluate_predictions(const RankedPredictions& p, std::size_t k) {
    MetricsReport r;
    r.auc = roc_auc(p);
    r.ap = average_precision(p);
    r.k = k;
    r.recall_at_k = recall_at_k(p, k);
    r.cap_ratio = cap_ratio(p);
    r.cumulative_decile = decile_ranks(p);
    r.n = p.size();
    r.n_pos = p.positives();
    return r;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["auc"] = r.auc;
    j["ap"] = r.ap;
    j["k"] = r.k;
    j["recall_at_k"] = r.recall_at_k;
    j["cap_ratio"] = r.cap_ratio;
    j["cumulative_decile"] = r.cumulative_decile;
    j["n"] = r.n;
    j["n_pos"] = r.n_pos;
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    j.at("auc").get_to(r.auc);
    j.at("ap").get_to(r.ap);
    j.at("k").get_to(r.k);
    j.at("recall_at_k").get_to(r.recall_at_k);
    j.at("cap_ratio").get_to(r.cap_ratio);
    j.at("cumulative_decile").get_to(r.cumulative_decile);
    j.at("n").get_to(r.n);
    j.at("n_pos").get_to(r.n_pos);
    return r;
}

namespace {

void write_curve(const std::vector<CurvePoint>& pts, const char* header, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << '\n';
    for (const auto& pt : pts) out << format_double(pt.x) << ',' << format_double(pt.y) << '\n';
}

}  // namespace

void write_roc_csv(const RankedPredictions& p, const std::filesystem::path& path) {
    write_curve(roc_curve(p), "fpr,tpr", path);
}

void write_cap_csv(const RankedPredictions& p, const std::filesystem::path& path) {
    write_curve(cap_curve(p), "frac_ranked,frac_positives", path);
}

}  // namespace bankbench
