#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankbench/date.hpp"

namespace bankbench {

enum class Chapter : int { k7 = 7, k11 = 11 };

/// One annual report: fiscal period end, SEC filing date, MD&A text.
struct Report {
    std::string cik;
    Date period_end;
    Date filing_date;
    std::string mdna;

    friend bool operator==(const Report&, const Report&) = default;
};

struct BankruptcyFiling {
    std::string cik;
    Date filing_date;
    Chapter chapter = Chapter::k11;

    friend bool operator==(const BankruptcyFiling&, const BankruptcyFiling&) = default;
};

/// Reports are strictly increasing in filing_date, at most one per calendar
/// year, and all precede the bankruptcy filing when there is one.
struct Company {
    std::string cik;
    std::vector<Report> reports;
    std::optional<BankruptcyFiling> bankruptcy;

    [[nodiscard]] const Report* report_filed_in(int year) const;
    /// Latest report with filing_date <= `date`.
    [[nodiscard]] const Report* latest_report_until(Date date) const;
    [[nodiscard]] int first_report_year() const { return reports.front().filing_date.year(); }

    friend bool operator==(const Company&, const Company&) = default;
};

/// Companies sorted by cik. Immutable once built.
using Corpus = std::vector<Company>;

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadWarnings {
    std::size_t filing_before_period_end = 0;  ///< rejected records
    std::size_t after_bankruptcy = 0;          ///< reports on/after the company's bankruptcy
    std::size_t duplicate_bankruptcies = 0;    ///< later filings for an already-seen cik
    std::size_t same_year_reports = 0;         ///< extra reports in an already-covered calendar year
    std::size_t unmatched_bankruptcies = 0;    ///< filings for a cik without reports

    [[nodiscard]] std::size_t total() const {
        return filing_before_period_end + after_bankruptcy + duplicate_bankruptcies + same_year_reports +
               unmatched_bankruptcies;
    }
};

struct LoadedCorpus {
    Corpus companies;
    LoadWarnings warnings;
};

/// Reads reports.jsonl and bankruptcies.jsonl and joins them on cik.
/// Throws CorpusError naming file and line for malformed input or a
/// duplicate (cik, filing_date) report.
LoadedCorpus load_corpus(const std::filesystem::path& reports_path,
                         const std::filesystem::path& bankruptcies_path);

void write_corpus(const Corpus& companies, const std::filesystem::path& reports_path,
                  const std::filesystem::path& bankruptcies_path);

/// Directory convenience: <dir>/reports.jsonl and <dir>/bankruptcies.jsonl.
LoadedCorpus load_corpus_dir(const std::filesystem::path& dir);
void write_corpus_dir(const Corpus& companies, const std::filesystem::path& dir);

// --- synthetic corpora ------------------------------------------------------

struct MissingMechanisms {
    double permanent_stop = 0.02;          ///< per firm-year: stop reporting for good
    double random_gap = 0.03;              ///< per firm-year: skip one report
    double pre_bankruptcy_silence = 0.15;  ///< per bankruptcy: no report in the bankruptcy year
};

struct SyntheticConfig {
    std::size_t n_companies = 2000;
    int first_year = 2009;
    int last_year = 2020;
    double base_bankruptcy_rate = 0.005;
    std::vector<std::string> distress_lexicon = default_distress_lexicon();
    double distress_injection_rate = 0.9;
    MissingMechanisms missing_mechanisms;
    double doc_length_mean = 150.0;
    double doc_length_std = 30.0;
    std::uint64_t rng_seed = 7;

    // generator shape parameters
    std::size_t background_vocab_size = 30'000;
    double zipf_exponent = 1.0;
    double entry_rate = 0.2;  ///< fraction of firms entering after the first year
    std::size_t distress_sentences = 3;
    std::size_t distress_tokens_per_sentence = 3;

    /// Throws std::invalid_argument on degenerate settings.
    void validate() const;

    static std::vector<std::string> default_distress_lexicon();
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);

/// Realized counts of the stochastic events, for calibration checks.
struct GenerationLog {
    std::size_t firm_years = 0;
    std::size_t bankruptcies = 0;
    std::size_t stop_opportunities = 0;
    std::size_t stops = 0;
    std::size_t gap_opportunities = 0;
    std::size_t gaps = 0;
    std::size_t silence_opportunities = 0;
    std::size_t silences = 0;
    std::size_t distress_candidates = 0;  ///< final pre-bankruptcy reports eligible for injection
    std::size_t distress_injections = 0;
};

struct SyntheticCorpus {
    Corpus companies;
    GenerationLog log;
    std::vector<std::string> background_vocabulary;
};

/// Deterministic in `config.rng_seed`.
SyntheticCorpus generate_synthetic_with_log(const SyntheticConfig& config);
Corpus generate_synthetic(const SyntheticConfig& config);

// --- statistics ---------------------------------------------------------------

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation; 0 for a single value
};

MeanStd mean_std(const std::vector<double>& values);

struct CorpusStats {
    int first_year = 0;
    int last_year = 0;
    std::map<int, std::size_t> reports_per_year;
    std::map<int, std::size_t> bankruptcies_per_year;
    std::map<int, std::size_t> new_firms_per_year;
    MeanStd reports_per_year_summary;
    MeanStd bankruptcies_per_year_summary;
    MeanStd new_firms_per_year_summary;
    MeanStd doc_length;  ///< whitespace-delimited tokens per MD&A
    std::size_t n_companies = 0;
    std::size_t n_reports = 0;
    std::size_t n_bankruptcies = 0;
};

/// Throws std::invalid_argument on an empty corpus.
CorpusStats corpus_stats(const Corpus& companies);

nlohmann::json to_json(const CorpusStats& stats);

}  // namespace bankbench
