#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace bankbench {

/// Scores with parallel 0/1 labels. Higher score = more likely positive.
struct RankedPredictions {
    std::vector<double> scores;
    std::vector<int> labels;

    [[nodiscard]] std::size_t size() const { return scores.size(); }
    [[nodiscard]] std::size_t positives() const;
    /// Throws std::invalid_argument on length mismatch, empty input or a label outside {0,1}.
    void check() const;
};

/// Mann-Whitney with average ranks for ties. Needs both classes.
double roc_auc(const RankedPredictions& p);

/// Sum over descending thresholds of (R_n - R_{n-1}) P_n; equal scores form one threshold.
double average_precision(const RankedPredictions& p);

/// Positives among the k highest scores over all positives. k > n means n.
/// Equal scores keep input order, so earlier instances win the boundary.
double recall_at_k(const RankedPredictions& p, std::size_t k);

/// (A - 1/2) / (A_perfect - 1/2) with A the trapezoidal area under the CAP
/// curve (tie groups form one segment) and A_perfect = 1 - pi/2.
double cap_ratio(const RankedPredictions& p);

/// Cumulative share of positives in the top i tenths, i = 1..10; the i-th
/// cut is at rank ceil(i n / 10). Ties keep input order.
std::array<double, 10> decile_ranks(const RankedPredictions& p);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

/// (fpr, tpr) points from (0,0) to (1,1), one per tie group.
std::vector<CurvePoint> roc_curve(const RankedPredictions& p);
/// (fraction ranked, fraction of positives captured) from (0,0) to (1,1).
std::vector<CurvePoint> cap_curve(const RankedPredictions& p);

struct MetricsReport {
    double auc = 0.0;
    double ap = 0.0;
    std::size_t k = 100;
    double recall_at_k = 0.0;
    double cap_ratio = 0.0;
    std::array<double, 10> cumulative_decile{};
    std::size_t n = 0;
    std::size_t n_pos = 0;
};

MetricsReport evaluate_predictions(const RankedPredictions& p, std::size_t k = 100);

nlohmann::ordered_json to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

/// "fpr,tpr" and "frac_ranked,frac_positives" CSV dumps.
void write_roc_csv(const RankedPredictions& p, const std::filesystem::path& path);
void write_cap_csv(const RankedPredictions& p, const std::filesystem::path& path);

}  // namespace bankbench
