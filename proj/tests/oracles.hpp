#pragma once

// Definition-level metric implementations, quadratic on purpose.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <vector>

namespace oracle {

inline double auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// threshold t over each distinct score, high to low; predicted positive iff s >= t
inline double average_precision(const std::vector<double>& s, const std::vector<int>& y) {
    std::set<double, std::greater<>> thresholds(s.begin(), s.end());
    double total_pos = 0.0;
    for (int v : y) total_pos += v;
    double ap = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        double tp = 0.0, flagged = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= t) {
                flagged += 1.0;
                tp += y[i];
            }
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / flagged);
        prev_recall = recall;
    }
    return ap;
}

inline double cap_ratio(const std::vector<double>& s, const std::vector<int>& y) {
    std::set<double, std::greater<>> thresholds(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double total_pos = 0.0;
    for (int v : y) total_pos += v;
    double area = 0.0, px = 0.0, py = 0.0;
    for (double t : thresholds) {
        double flagged = 0.0, tp = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= t) {
                flagged += 1.0;
                tp += y[i];
            }
        }
        const double x = flagged / n, yy = tp / total_pos;
        area += (x - px) * (yy + py) / 2.0;
        px = x;
        py = yy;
    }
    const double perfect = 1.0 - (total_pos / n) / 2.0;
    return (area - 0.5) / (perfect - 0.5);
}

// 0-based rank: higher scores first, equal scores by input position
inline std::size_t rank_of(const std::vector<double>& s, std::size_t i) {
    std::size_t r = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
    }
    return r;
}

inline double recall_at_k(const std::vector<double>& s, const std::vector<int>& y, std::size_t k) {
    double hit = 0.0, total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        total += y[i];
        if (y[i] == 1 && rank_of(s, i) < k) hit += 1.0;
    }
    return hit / total;
}

inline std::array<double, 10> deciles(const std::vector<double>& s, const std::vector<int>& y) {
    const std::size_t n = s.size();
    std::array<double, 10> out{};
    double total = 0.0;
    for (int v : y) total += v;
    for (std::size_t d = 1; d <= 10; ++d) {
        const std::size_t cut = (d * n + 9) / 10;
        double hit = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] == 1 && rank_of(s, i) < cut) hit += 1.0;
        }
        out[d - 1] = hit / total;
    }
    return out;
}

}  // namespace oracle
