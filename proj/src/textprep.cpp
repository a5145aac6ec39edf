#include "bankbench/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "bundled_data.hpp"

namespace bankbench {

namespace {

bool ascii_alnum(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Code points outside ASCII that act as separators: Latin-1 punctuation,
// general punctuation, arrows/symbols, CJK punctuation, BOM, replacement char.
bool unicode_separator(char32_t cp) {
    return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
           (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x2190 && cp <= 0x2BFF) ||
           (cp >= 0x3000 && cp <= 0x303F) || cp == 0xFEFF || cp == 0xFFFD;
}

// Decodes one UTF-8 sequence starting at text[i]; returns its length, or 0
// for an invalid lead/continuation byte.
std::size_t utf8_decode(std::string_view text, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > text.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(text[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    return len;
}

struct Lexicon {
    std::unordered_set<std::string> stopwords;
    std::unordered_map<std::string, std::string> exceptions;
};

const Lexicon& lexicon() {
    static const Lexicon lex = [] {
        Lexicon l;
        const std::string_view sw = detail::stopwords_data();
        std::size_t pos = 0;
        while (pos < sw.size()) {
            auto end = sw.find('\n', pos);
            if (end == std::string_view::npos) end = sw.size();
            if (end > pos) l.stopwords.emplace(sw.substr(pos, end - pos));
            pos = end + 1;
        }
        const std::string_view ex = detail::lemma_exceptions_data();
        pos = 0;
        while (pos < ex.size()) {
            auto end = ex.find('\n', pos);
            if (end == std::string_view::npos) end = ex.size();
            const auto line = ex.substr(pos, end - pos);
            pos = end + 1;
            if (line.empty() || line.front() == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string_view::npos) continue;
            l.exceptions.emplace(line.substr(0, tab), line.substr(tab + 1));
        }
        return l;
    }();
    return lex;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view s, std::string_view suffix) { return s.ends_with(suffix); }

bool all_lower_alpha(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// Restores the base form after an -ed/-ing strip: undoubles a final double
// consonant, otherwise re-adds a silent 'e' for endings that need one.
std::string repair_stem(std::string stem) {
    const std::size_t n = stem.size();
    const char last = stem[n - 1];
    const char prev = stem[n - 2];
    if (last == prev && !is_vowel(last) && last != 'l' && last != 's' && last != 'z') {
        stem.pop_back();
        return stem;
    }
    const std::string_view s = stem;
    const bool needs_e = [&] {
        if (ends_with(s, "bl") || ends_with(s, "iz") || ends_with(s, "yz") || ends_with(s, "uir") ||
            ends_with(s, "dg") || ends_with(s, "rg") || ends_with(s, "ang") || ends_with(s, "eng")) {
            return true;
        }
        if (last == 'v' || last == 'c' || last == 'u') return true;
        if (last == 'g' && prev == 'a') return true;
        if ((ends_with(s, "at") || ends_with(s, "ur") || ends_with(s, "ir")) && n >= 3 &&
            !is_vowel(stem[n - 3])) {
            return true;
        }
        if (last == 's' && prev != 's' && prev != 'u' &&
            (prev == 'a' || prev == 'e' || prev == 'i' || prev == 'o' || prev == 'n' ||
             prev == 'r' || prev == 'p')) {
            return true;
        }
        // short consonant-vowel-consonant stems: mak(e), fil(e), shar(e)
        const bool cvc = !is_vowel(stem[n - 3]) && is_vowel(prev) && !is_vowel(last) &&
                         last != 'w' && last != 'x' && last != 'y';
        if (cvc && n == 3) return true;
        if (cvc && n == 4 && !is_vowel(stem[0])) return true;
        return false;
    }();
    if (needs_e) stem.push_back('e');
    return stem;
}

// One application of the suffix rules; returns the input when none applies.
std::string rule_step(std::string_view w) {
    const std::size_t n = w.size();
    if (n < 4) return std::string(w);
    if (ends_with(w, "sses")) return std::string(w.substr(0, n - 2));
    if (ends_with(w, "ies") && n > 4) return std::string(w.substr(0, n - 3)) + "y";
    if (ends_with(w, "xes") || ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "zzes")) {
        return std::string(w.substr(0, n - 2));
    }
    if (ends_with(w, "s")) {
        if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return std::string(w);
        return std::string(w.substr(0, n - 1));
    }
    if (ends_with(w, "ied") && n > 4) return std::string(w.substr(0, n - 3)) + "y";
    if (ends_with(w, "eed")) return std::string(w);
    if (ends_with(w, "ed")) {
        const auto stem = w.substr(0, n - 2);
        if (stem.size() >= 3 && has_vowel(stem)) return repair_stem(std::string(stem));
        return std::string(w);
    }
    if (ends_with(w, "ing")) {
        const auto stem = w.substr(0, n - 3);
        if (stem.size() >= 3 && has_vowel(stem)) return repair_stem(std::string(stem));
        return std::string(w);
    }
    return std::string(w);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (ascii_alnum(c)) {
                current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c));
            } else {
                flush();
            }
            ++i;
            continue;
        }
        char32_t cp = 0;
        const std::size_t len = utf8_decode(text, i, cp);
        if (len == 0) {
            flush();
            ++i;
            continue;
        }
        if (unicode_separator(cp)) {
            flush();
        } else {
            current.append(text.substr(i, len));
        }
        i += len;
    }
    flush();
    return tokens;
}

bool is_stopword(std::string_view token) {
    return lexicon().stopwords.contains(std::string(token));
}

std::string rule_lemma(std::string_view word) {
    std::string current(word);
    if (!all_lower_alpha(current)) return current;
    while (true) {
        std::string next = rule_step(current);
        if (next == current) return current;
        current = std::move(next);
    }
}

std::string lemmatize(std::string_view word) {
    const auto& exceptions = lexicon().exceptions;
    std::string current(word);
    if (auto it = exceptions.find(current); it != exceptions.end()) return it->second;
    if (!all_lower_alpha(current)) return current;
    while (true) {
        std::string next = rule_step(current);
        if (next == current) return current;
        if (auto it = exceptions.find(next); it != exceptions.end()) return it->second;
        current = std::move(next);
    }
}

TokenizedDoc preprocess(std::string_view text) {
    TokenizedDoc out;
    for (auto& token : tokenize(text)) {
        if (token.size() < 2 || is_stopword(token)) continue;
        if (std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            continue;
        }
        std::string lemma = lemmatize(token);
        if (lemma.size() < 2 || is_stopword(lemma)) continue;
        out.push_back(std::move(lemma));
    }
    return out;
}

// --- Vocabulary -------------------------------------------------------------

void Vocabulary::add(std::string token, std::uint64_t freq) {
    const auto id = static_cast<std::uint32_t>(id_to_token_.size());
    token_to_id_.emplace(token, id);
    id_to_token_.push_back(std::move(token));
    frequency_.push_back(freq);
}

Vocabulary Vocabulary::build(std::span<const TokenizedDoc> training_docs, std::size_t max_size) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : training_docs) {
        for (const auto& tok : doc) ++counts[tok];
    }
    // specials are added separately, never ranked
    counts.erase(std::string(kUnkToken));
    counts.erase(std::string(kMissingToken));

    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    const std::size_t keep = std::min(max_size, ranked.size());
    auto by_rank = [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                      by_rank);
    ranked.resize(keep);

    Vocabulary v;
    v.max_size_ = max_size;
    v.id_to_token_.reserve(keep + 2);
    for (auto& [tok, freq] : ranked) v.add(tok, freq);
    v.unk_id_ = static_cast<std::uint32_t>(v.size());
    v.add(std::string(kUnkToken), 0);
    v.missing_id_ = static_cast<std::uint32_t>(v.size());
    v.add(std::string(kMissingToken), 0);
    return v;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
    if (auto it = token_to_id_.find(std::string(token)); it != token_to_id_.end()) return it->second;
    return std::nullopt;
}

std::uint32_t Vocabulary::id_or_unk(std::string_view token) const {
    return find(token).value_or(unk_id_);
}

TokenizedDoc Vocabulary::apply(const TokenizedDoc& doc) const {
    TokenizedDoc out;
    out.reserve(doc.size());
    for (const auto& tok : doc) {
        out.push_back(token_to_id_.contains(tok) ? tok : std::string(kUnkToken));
    }
    return out;
}

std::vector<std::uint32_t> Vocabulary::to_ids(const TokenizedDoc& doc) const {
    std::vector<std::uint32_t> ids;
    ids.reserve(doc.size());
    for (const auto& tok : doc) ids.push_back(id_or_unk(tok));
    return ids;
}

void Vocabulary::write_tsv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# max_size=" << max_size_ << "\tspecials=" << kUnkToken << ',' << kMissingToken << '\n';
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        out << id_to_token_[i] << '\t' << frequency_[i] << '\n';
    }
}

Vocabulary Vocabulary::read_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("# max_size=")) {
        throw std::runtime_error(path.string() + ": missing vocab header");
    }
    Vocabulary v;
    v.max_size_ = std::stoull(line.substr(11, line.find('\t') - 11));
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>frequency");
        }
        v.add(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
    }
    const auto unk = v.find(kUnkToken);
    const auto missing = v.find(kMissingToken);
    if (!unk || !missing) throw std::runtime_error(path.string() + ": specials absent");
    v.unk_id_ = *unk;
    v.missing_id_ = *missing;
    return v;
}

}  // namespace bankbench
