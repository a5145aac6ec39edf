#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankbench/corpus.hpp"
#include "bankbench/date.hpp"

namespace bankbench {

/// One-year prediction window anchored at a (possibly imputed) filing date.
struct PredictionWindow {
    Date start;
    bool imputed = false;

    [[nodiscard]] Date end() const { return start.plus_years(1); }
};

/// Window for `year`: the filing date of the report filed that year, or the
/// latest earlier filing date moved into `year` (Feb-29 becomes Feb-28).
/// None when the company has no report filed by the end of `year`.
std::optional<PredictionWindow> determine_window(const Company& company, int year);

/// A (company, year) sample. `history` holds H slots, oldest first; a slot
/// without a report carries exactly kMissingToken.
struct FirmYearInstance {
    std::string cik;
    int year = 0;
    Date window_start;
    Date window_end;
    int label = 0;
    bool imputed = false;
    std::vector<std::string> history;

    [[nodiscard]] bool all_missing() const;
    [[nodiscard]] std::size_t missing_slots() const;
    /// Key of one history slot in the shared embedding-table format, "cik:year:slot".
    [[nodiscard]] std::string slot_key(std::size_t slot) const;

    friend bool operator==(const FirmYearInstance&, const FirmYearInstance&) = default;
};

bool is_missing_slot(std::string_view text);

/// None when no window exists or the company went bankrupt before the window
/// starts (the instance would leak the outcome).
std::optional<FirmYearInstance> build_instance(const Company& company, int year, int history_len);

struct SplitSpec {
    int train_cutoff_year = 2015;  ///< tuning-phase training data: filings up to Dec 31 of this year
    int final_cutoff_year = 2017;  ///< final-model training data
    std::vector<int> validation_years{2017, 2018};
    std::vector<int> test_years{2019, 2020};
    int history_len = 1;
    double all_missing_keep_rate = 0.05;
    int validation_activity_window = 5;
    std::uint64_t rng_seed = 0;

    /// Throws std::invalid_argument on an inconsistent split.
    void validate() const;
};

void to_json(nlohmann::json& j, const SplitSpec& s);
void from_json(const nlohmann::json& j, SplitSpec& s);

/// Every valid firm-year from each firm's first report year through
/// `cutoff_year`, then a seeded prune of the instances whose whole history is
/// missing down to round(keep_rate * count). Throws on an empty result.
std::vector<FirmYearInstance> build_training_set(const Corpus& companies, const SplitSpec& spec, int cutoff_year);
inline std::vector<FirmYearInstance> build_training_set(const Corpus& companies, const SplitSpec& spec) {
    return build_training_set(companies, spec, spec.train_cutoff_year);
}

/// Removes a seeded sample of the all-missing instances, keeping
/// round(keep_rate * count) of them. Order of survivors is preserved.
std::vector<FirmYearInstance> prune_all_missing(std::vector<FirmYearInstance> instances, double keep_rate,
                                                std::uint64_t seed);

/// One instance per company that filed at least one report in the
/// `validation_activity_window` years ending at `year`. Never pruned.
std::vector<FirmYearInstance> build_eval_set(const Corpus& companies, int year, const SplitSpec& spec);

/// Keeps every positive and a seeded sample of negatives so that negatives
/// make up `target_majority_frac` of the result (9 negatives per positive at
/// 0.90). Throws when there are no positives.
std::vector<FirmYearInstance> undersample(std::span<const FirmYearInstance> instances,
                                          double target_majority_frac, std::uint64_t seed);

nlohmann::ordered_json instance_to_json(const FirmYearInstance& inst);
FirmYearInstance instance_from_json(const nlohmann::json& j);
void write_instances(std::span<const FirmYearInstance> instances, const std::filesystem::path& path);
std::vector<FirmYearInstance> read_instances(const std::filesystem::path& path);

}  // namespace bankbench
