#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bankbench/textprep.hpp"

namespace bankbench {

struct SkipGramOptions {
    std::size_t dim = 100;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;  ///< decays linearly to lr * 1e-4 over the run
    std::uint64_t seed = 1;
};

/// Word vectors over a vocabulary, row-major |V| x dim.
struct SkipGramModel {
    Vocabulary vocab;
    std::size_t dim = 0;
    std::vector<double> input_vectors;
    std::vector<double> output_vectors;

    [[nodiscard]] std::span<const double> input(std::uint32_t id) const {
        return {input_vectors.data() + static_cast<std::size_t>(id) * dim, dim};
    }
    [[nodiscard]] std::span<const double> output(std::uint32_t id) const {
        return {output_vectors.data() + static_cast<std::size_t>(id) * dim, dim};
    }
    [[nodiscard]] std::span<double> input(std::uint32_t id) {
        return {input_vectors.data() + static_cast<std::size_t>(id) * dim, dim};
    }
    [[nodiscard]] std::span<double> output(std::uint32_t id) {
        return {output_vectors.data() + static_cast<std::size_t>(id) * dim, dim};
    }

    /// embeddings.vec: "N d" header, then "token v1 ... vd" per line (input vectors).
    void write_vec(const std::filesystem::path& path) const;
    /// Restores the input vectors; rows must follow `vocab` order. Output
    /// vectors are not stored and come back as zeros.
    static SkipGramModel read_vec(const std::filesystem::path& path, const Vocabulary& vocab);
};

struct SkipGramTrace {
    std::vector<double> epoch_loss;  ///< mean per-pair loss over each epoch
    std::uint64_t pairs = 0;
};

/// Uniform(+-0.5/dim) input vectors, zero output vectors, drawn from `seed`.
SkipGramModel init_skipgram(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

/// Skip-gram with negative sampling from unigram^0.75 noise. Docs are
/// vocabulary-mapped and treated as separate sentences. Sequential and
/// deterministic for a given seed. Throws std::invalid_argument when the
/// corpus holds no token.
SkipGramModel train_skipgram(std::span<const TokenizedDoc> docs, const Vocabulary& vocab, const SkipGramOptions& opts,
                             SkipGramTrace* trace = nullptr);

/// -log s(u_ctx . v_ctr) - sum_neg log s(-u_neg . v_ctr)
double skipgram_pair_loss(const SkipGramModel& model, std::uint32_t center, std::uint32_t context,
                          std::span<const std::uint32_t> negatives);

struct SkipGramPairGradient {
    std::vector<double> center;                  ///< d loss / d v_center
    std::vector<double> context;                 ///< d loss / d u_context
    std::vector<std::vector<double>> negatives;  ///< one row per negative draw
};

SkipGramPairGradient skipgram_pair_gradient(const SkipGramModel& model, std::uint32_t center, std::uint32_t context,
                                            std::span<const std::uint32_t> negatives);

double cosine(std::span<const double> a, std::span<const double> b);

enum class EmbeddingSource { trained_w2v, imported };

struct DocEmbedding {
    std::vector<double> vector;
    EmbeddingSource source = EmbeddingSource::trained_w2v;
};

/// Mean input vector over token occurrences. Tokens are mapped through the
/// model vocabulary (unknown -> _UNK_); an empty doc gives the zero vector.
DocEmbedding embed_doc(const TokenizedDoc& doc, const SkipGramModel& model);

/// Oldest slot first; throws std::invalid_argument on a dimension mismatch.
std::vector<double> concat_history(std::span<const DocEmbedding> slots);

struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, DocEmbedding> rows;
};

/// doc_embeddings.tsv: "dim=<d>" header, then "doc_key<TAB>v1<TAB>...<TAB>vd".
/// Errors name the file and line.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
/// Keys are written sorted.
void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path);

}  // namespace bankbench
