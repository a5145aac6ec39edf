#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bankbench/textprep.hpp"

namespace bankbench {

/// Indices strictly increasing and < dim; values parallel to indices.
struct SparseVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::size_t dim = 0;

    [[nodiscard]] std::size_t nnz() const { return indices.size(); }
    [[nodiscard]] double norm() const;
    [[nodiscard]] double dot(std::span<const double> dense) const;
    [[nodiscard]] std::vector<double> to_dense() const;
    /// Throws std::logic_error if the structural invariants do not hold.
    void check() const;

    static SparseVector from_pairs(std::vector<std::pair<std::uint32_t, double>> entries, std::size_t dim);

    friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Gram -> occurrence count. Bigrams are "tokA tokB".
using GramCounts = std::unordered_map<std::string, std::uint32_t>;

/// Unigrams plus adjacent bigrams of one document.
GramCounts extract_grams(const TokenizedDoc& doc);

/// Per-slot grams summed over a history; no bigram spans two slots. A missing
/// slot is the one-token document ["missing"].
GramCounts extract_history_grams(std::span<const TokenizedDoc> slots);

/// Training-set gram inventory with document frequencies. Ids follow the
/// lexicographic order of the grams.
class FeatureSpace {
public:
    FeatureSpace() = default;
    static FeatureSpace build(std::span<const GramCounts> training_docs);

    [[nodiscard]] std::size_t size() const { return grams_.size(); }
    [[nodiscard]] std::size_t n_docs() const { return n_docs_; }
    [[nodiscard]] std::optional<std::uint32_t> find(std::string_view gram) const;
    [[nodiscard]] const std::string& gram(std::uint32_t id) const { return grams_.at(id); }
    [[nodiscard]] std::uint32_t doc_freq(std::uint32_t id) const { return doc_freq_.at(id); }

    /// feature_space.tsv: "# n_docs=<n>" header, then "feature<TAB>id<TAB>doc_freq".
    void write_tsv(const std::filesystem::path& path) const;
    static FeatureSpace read_tsv(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::vector<std::string> grams_;
    std::vector<std::uint32_t> doc_freq_;
    std::size_t n_docs_ = 0;
};

/// Presence indicator over the feature space; unknown grams are ignored.
SparseVector binarize(const GramCounts& grams, const FeatureSpace& space);

/// Smoothed idf: ln((1 + n_docs) / (1 + doc_freq)) + 1.
double idf(const FeatureSpace& space, std::uint32_t id);

/// Raw count times smoothed idf, then L2-normalised. Unseen grams are ignored.
SparseVector tfidf_transform(const GramCounts& grams, const FeatureSpace& space);

/// Chi-squared statistic per feature between the feature mass summed per
/// class and the class-proportional expectation. Features with zero total
/// mass score 0. Requires both labels and non-negative values.
std::vector<double> chi2_scores(std::span<const SparseVector> vectors, std::span<const int> labels, std::size_t dim);

struct FeatureSelector {
    std::vector<double> scores;
    std::vector<std::uint32_t> selected;  ///< ascending ids

    /// Maps a vector onto the selected features, new dim = selected.size().
    [[nodiscard]] SparseVector restrict(const SparseVector& v) const;
    /// "feature<TAB>score" for the selected features, highest score first.
    void write_tsv(const std::filesystem::path& path, const FeatureSpace& space) const;
};

/// Top-k by score, ties to the lower id; k is clamped to the score count.
FeatureSelector select_top_k(std::vector<double> scores, std::size_t k);

/// Top-k by chi-squared score; ties go to the lower id. Throws
/// std::invalid_argument when a class is absent.
FeatureSelector chi2_select(std::span<const SparseVector> vectors, std::span<const int> labels, std::size_t k,
                            std::size_t dim);

}  // namespace bankbench
