#include "bankbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace bankbench {

double SparseVector::norm() const {
    double ss = 0.0;
    for (double v : values) ss += v * v;
    return std::sqrt(ss);
}

double SparseVector::dot(std::span<const double> dense) const {
    double s = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
    return s;
}

std::vector<double> SparseVector::to_dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
    return out;
}

void SparseVector::check() const {
    if (indices.size() != values.size()) throw std::logic_error("SparseVector: indices/values length mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= dim) throw std::logic_error("SparseVector: index out of range");
        if (k > 0 && indices[k] <= indices[k - 1]) throw std::logic_error("SparseVector: indices not increasing");
    }
}

SparseVector SparseVector::from_pairs(std::vector<std::pair<std::uint32_t, double>> entries, std::size_t dim) {
    std::sort(entries.begin(), entries.end());
    SparseVector v;
    v.dim = dim;
    v.indices.reserve(entries.size());
    v.values.reserve(entries.size());
    for (const auto& [i, x] : entries) {
        if (!v.indices.empty() && v.indices.back() == i) {
            v.values.back() += x;
        } else {
            v.indices.push_back(i);
            v.values.push_back(x);
        }
    }
    return v;
}

GramCounts extract_grams(const TokenizedDoc& doc) {
    GramCounts grams;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        ++grams[doc[i]];
        if (i + 1 < doc.size()) ++grams[doc[i] + ' ' + doc[i + 1]];
    }
    return grams;
}

GramCounts extract_history_grams(std::span<const TokenizedDoc> slots) {
    GramCounts total;
    for (const auto& slot : slots) {
        for (auto& [gram, n] : extract_grams(slot)) total[gram] += n;
    }
    return total;
}

// --- feature space -------------------------------------------------------------

FeatureSpace FeatureSpace::build(std::span<const GramCounts> training_docs) {
    std::unordered_map<std::string, std::uint32_t> df;
    for (const auto& doc : training_docs) {
        for (const auto& entry : doc) ++df[entry.first];
    }
    FeatureSpace fs;
    fs.n_docs_ = training_docs.size();
    fs.grams_.reserve(df.size());
    for (const auto& entry : df) fs.grams_.push_back(entry.first);
    std::sort(fs.grams_.begin(), fs.grams_.end());
    fs.doc_freq_.reserve(fs.grams_.size());
    fs.ids_.reserve(fs.grams_.size());
    for (std::size_t i = 0; i < fs.grams_.size(); ++i) {
        fs.ids_.emplace(fs.grams_[i], static_cast<std::uint32_t>(i));
        fs.doc_freq_.push_back(df.at(fs.grams_[i]));
    }
    return fs;
}

std::optional<std::uint32_t> FeatureSpace::find(std::string_view gram) const {
    if (auto it = ids_.find(std::string(gram)); it != ids_.end()) return it->second;
    return std::nullopt;
}

void FeatureSpace::write_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# n_docs=" << n_docs_ << '\n';
    for (std::size_t i = 0; i < grams_.size(); ++i) out << grams_[i] << '\t' << i << '\t' << doc_freq_[i] << '\n';
}

FeatureSpace FeatureSpace::read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("# n_docs=")) {
        throw std::runtime_error(path.string() + ": missing feature-space header");
    }
    FeatureSpace fs;
    fs.n_docs_ = std::stoull(line.substr(9));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected feature<TAB>id<TAB>doc_freq");
        }
        const auto id = static_cast<std::uint32_t>(std::stoul(line.substr(t1 + 1, t2 - t1 - 1)));
        if (id != fs.grams_.size()) throw std::runtime_error(path.string() + ": ids must be dense and ordered");
        fs.grams_.push_back(line.substr(0, t1));
        fs.doc_freq_.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(t2 + 1))));
        fs.ids_.emplace(fs.grams_.back(), id);
    }
    return fs;
}

// --- transforms ------------------------------------------------------------------

SparseVector binarize(const GramCounts& grams, const FeatureSpace& space) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(grams.size());
    for (const auto& entry : grams) {
        if (auto id = space.find(entry.first)) entries.emplace_back(*id, 1.0);
    }
    return SparseVector::from_pairs(std::move(entries), space.size());
}

double idf(const FeatureSpace& space, std::uint32_t id) {
    const auto n = static_cast<double>(space.n_docs());
    return std::log((1.0 + n) / (1.0 + static_cast<double>(space.doc_freq(id)))) + 1.0;
}

SparseVector tfidf_transform(const GramCounts& grams, const FeatureSpace& space) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(grams.size());
    for (const auto& [gram, tf] : grams) {
        if (auto id = space.find(gram)) entries.emplace_back(*id, static_cast<double>(tf) * idf(space, *id));
    }
    auto v = SparseVector::from_pairs(std::move(entries), space.size());
    const double n = v.norm();
    if (n > 0.0) {
        for (double& x : v.values) x /= n;
    }
    return v;
}

// --- chi-squared selection -----------------------------------------------------------

std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const int> labels, std::size_t dim) {
    if (vectors.size() != labels.size()) throw std::invalid_argument("chi2: vectors/labels length mismatch");
    std::size_t n_pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("chi2: labels must be 0/1");
        n_pos += static_cast<std::size_t>(y);
    }
    if (n_pos == 0 || n_pos == labels.size()) throw std::invalid_argument("chi2: both classes are required");

    std::vector<double> mass_pos(dim, 0.0), mass_neg(dim, 0.0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        auto& mass = labels[i] == 1 ? mass_pos : mass_neg;
        const auto& v = vectors[i];
        for (std::size_t k = 0; k < v.indices.size(); ++k) {
            if (v.values[k] < 0.0) throw std::invalid_argument("chi2: feature values must be non-negative");
            mass[v.indices[k]] += v.values[k];
        }
    }
    const double p_pos = static_cast<double>(n_pos) / static_cast<double>(labels.size());
    const double p_neg = 1.0 - p_pos;
    std::vector<double> scores(dim, 0.0);
    for (std::size_t f = 0; f < dim; ++f) {
        const double total = mass_pos[f] + mass_neg[f];
        if (total <= 0.0) continue;
        const double e_pos = p_pos * total;
        const double e_neg = p_neg * total;
        scores[f] = (mass_pos[f] - e_pos) * (mass_pos[f] - e_pos) / e_pos +
                    (mass_neg[f] - e_neg) * (mass_neg[f] - e_neg) / e_neg;
    }
    return scores;
}

FeatureSelector select_top_k(std::vector<double> scores, std::size_t k) {
    FeatureSelector sel;
    sel.scores = std::move(scores);
    const std::size_t dim = sel.scores.size();
    k = std::min(k, dim);
    std::vector<std::uint32_t> order(dim);
    std::iota(order.begin(), order.end(), 0U);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          return sel.scores[a] != sel.scores[b] ? sel.scores[a] > sel.scores[b] : a < b;
                      });
    sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(sel.selected.begin(), sel.selected.end());
    return sel;
}

FeatureSelector chi2_select(std::span<const SparseVector> vectors, std::span<const int> labels, std::size_t k,
                            std::size_t dim) {
    return select_top_k(chi2_scores(vectors, labels, dim), k);
}

SparseVector FeatureSelector::restrict(const SparseVector& v) const {
    SparseVector out;
    out.dim = selected.size();
    // both index lists ascending: merge
    std::size_t a = 0, b = 0;
    while (a < v.indices.size() && b < selected.size()) {
        if (v.indices[a] < selected[b]) {
            ++a;
        } else if (v.indices[a] > selected[b]) {
            ++b;
        } else {
            out.indices.push_back(static_cast<std::uint32_t>(b));
            out.values.push_back(v.values[a]);
            ++a;
            ++b;
        }
    }
    return out;
}

void FeatureSelector::write_tsv(const std::filesystem::path& path, const FeatureSpace& space) const {
    std::vector<std::uint32_t> order = selected;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    for (auto id : order) out << space.gram(id) << '\t' << scores[id] << '\n';
}

}  // namespace bankbench
