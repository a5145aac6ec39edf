#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bankbench {

inline constexpr std::string_view kUnkToken = "_UNK_";
/// Sentinel standing in for a missing annual report, both as a history slot
/// text and as a vocabulary token.
inline constexpr std::string_view kMissingToken = "missing";

/// Lowercase tokens, none empty, none containing whitespace.
using TokenizedDoc = std::vector<std::string>;

/// Lowercases (ASCII) and splits on non-alphanumeric characters. Non-ASCII
/// letters stay inside tokens; Unicode punctuation and spaces separate.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view token);

/// Suffix rules only, iterated to a fixed point. Exposed so the exception
/// table can be regenerated against it.
std::string rule_lemma(std::string_view word);

/// Exception lookup first, then the suffix rules. lemmatize(lemmatize(w)) == lemmatize(w).
std::string lemmatize(std::string_view word);

/// lowercase -> tokenize -> drop stopwords -> drop numeric-only and 1-char
/// tokens -> lemmatize. Lemmas that collapse onto a stopword are dropped too,
/// which keeps the pipeline idempotent on its own rejoined output.
TokenizedDoc preprocess(std::string_view text);

/// Capped token inventory built from training documents only.
class Vocabulary {
public:
    static constexpr std::size_t kDefaultMaxSize = 50'000;

    Vocabulary() = default;

    /// Ranks tokens by total occurrence count (ties: lexicographic), keeps the
    /// top `max_size`, then appends the `_UNK_` and `missing` specials.
    static Vocabulary build(std::span<const TokenizedDoc> training_docs,
                            std::size_t max_size = kDefaultMaxSize);

    [[nodiscard]] std::size_t size() const { return id_to_token_.size(); }
    [[nodiscard]] std::size_t max_size() const { return max_size_; }
    [[nodiscard]] std::optional<std::uint32_t> find(std::string_view token) const;
    /// Id of the token, or of `_UNK_` when absent.
    [[nodiscard]] std::uint32_t id_or_unk(std::string_view token) const;
    [[nodiscard]] const std::string& token(std::uint32_t id) const { return id_to_token_.at(id); }
    [[nodiscard]] std::uint64_t frequency(std::uint32_t id) const { return frequency_.at(id); }
    [[nodiscard]] std::uint32_t unk_id() const { return unk_id_; }
    [[nodiscard]] std::uint32_t missing_id() const { return missing_id_; }
    [[nodiscard]] const std::vector<std::string>& tokens() const { return id_to_token_; }

    /// Replaces out-of-vocabulary tokens by `_UNK_`, preserving order.
    [[nodiscard]] TokenizedDoc apply(const TokenizedDoc& doc) const;
    [[nodiscard]] std::vector<std::uint32_t> to_ids(const TokenizedDoc& doc) const;

    /// vocab.tsv: "# max_size=<n>\tspecials=_UNK_,missing" header, then
    /// "token<TAB>frequency" in rank order.
    void write_tsv(const std::filesystem::path& path) const;
    static Vocabulary read_tsv(const std::filesystem::path& path);

private:
    void add(std::string token, std::uint64_t freq);

    std::unordered_map<std::string, std::uint32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<std::uint64_t> frequency_;
    std::size_t max_size_ = kDefaultMaxSize;
    std::uint32_t unk_id_ = 0;
    std::uint32_t missing_id_ = 0;
};

/// Free-function spelling of Vocabulary::apply.
inline TokenizedDoc apply_vocab(const TokenizedDoc& doc, const Vocabulary& vocab) {
    return vocab.apply(doc);
}

}  // namespace bankbench
