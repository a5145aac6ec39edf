#include "bankbench/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bankbench/rng.hpp"
#include "bankbench/textprep.hpp"

namespace bankbench {

using nlohmann::json;

std::optional<PredictionWindow> determine_window(const Company& company, int year) {
    if (const Report* r = company.report_filed_in(year)) return PredictionWindow{r->filing_date, false};
    const Report* latest = company.latest_report_until(Date::end_of_year(year));
    if (latest == nullptr) return std::nullopt;
    return PredictionWindow{latest->filing_date.with_year(year), true};
}

bool is_missing_slot(std::string_view text) { return text == kMissingToken; }

bool FirmYearInstance::all_missing() const {
    return std::all_of(history.begin(), history.end(), [](const std::string& s) { return is_missing_slot(s); });
}

std::size_t FirmYearInstance::missing_slots() const {
    return static_cast<std::size_t>(
        std::count_if(history.begin(), history.end(), [](const std::string& s) { return is_missing_slot(s); }));
}

std::string FirmYearInstance::slot_key(std::size_t slot) const {
    return cik + ":" + std::to_string(year) + ":" + std::to_string(slot);
}

std::optional<FirmYearInstance> build_instance(const Company& company, int year, int history_len) {
    if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
    const auto window = determine_window(company, year);
    if (!window) return std::nullopt;
    if (company.bankruptcy && company.bankruptcy->filing_date < window->start) return std::nullopt;

    FirmYearInstance inst;
    inst.cik = company.cik;
    inst.year = year;
    inst.window_start = window->start;
    inst.window_end = window->end();
    inst.imputed = window->imputed;
    inst.label = company.bankruptcy && company.bankruptcy->filing_date < inst.window_end ? 1 : 0;
    inst.history.reserve(static_cast<std::size_t>(history_len));
    for (int y = year - history_len + 1; y <= year; ++y) {
        const Report* r = company.report_filed_in(y);
        inst.history.push_back(r ? r->mdna : std::string(kMissingToken));
    }
    return inst;
}

void SplitSpec::validate() const {
    if (validation_years.empty() || test_years.empty()) {
        throw std::invalid_argument("split needs validation and test years");
    }
    const int min_val = *std::min_element(validation_years.begin(), validation_years.end());
    const int min_test = *std::min_element(test_years.begin(), test_years.end());
    if (!(train_cutoff_year < min_val)) throw std::invalid_argument("train_cutoff_year must precede validation years");
    if (!(min_val <= min_test)) throw std::invalid_argument("validation years must not follow test years");
    if (!(final_cutoff_year < min_test)) throw std::invalid_argument("final_cutoff_year must precede test years");
    if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
    if (!(all_missing_keep_rate >= 0.0 && all_missing_keep_rate <= 1.0)) {
        throw std::invalid_argument("all_missing_keep_rate must lie in [0,1]");
    }
    if (validation_activity_window < 1) throw std::invalid_argument("validation_activity_window must be >= 1");
}

void to_json(json& j, const SplitSpec& s) {
    j = json{{"train_cutoff_year", s.train_cutoff_year},
             {"final_cutoff_year", s.final_cutoff_year},
             {"validation_years", s.validation_years},
             {"test_years", s.test_years},
             {"history_len", s.history_len},
             {"all_missing_keep_rate", s.all_missing_keep_rate},
             {"validation_activity_window", s.validation_activity_window},
             {"rng_seed", s.rng_seed}};
}

void from_json(const json& j, SplitSpec& s) {
    s = SplitSpec{};
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("train_cutoff_year", s.train_cutoff_year);
    opt("final_cutoff_year", s.final_cutoff_year);
    opt("validation_years", s.validation_years);
    opt("test_years", s.test_years);
    opt("history_len", s.history_len);
    opt("all_missing_keep_rate", s.all_missing_keep_rate);
    opt("validation_activity_window", s.validation_activity_window);
    opt("rng_seed", s.rng_seed);
}

std::vector<FirmYearInstance> prune_all_missing(std::vector<FirmYearInstance> instances, double keep_rate,
                                                std::uint64_t seed) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].all_missing()) candidates.push_back(i);
    }
    const auto keep = static_cast<std::size_t>(std::llround(keep_rate * static_cast<double>(candidates.size())));
    Rng rng(seed);
    std::vector<bool> drop(instances.size(), false);
    for (auto i : candidates) drop[i] = true;
    for (auto k : sample_indices(candidates.size(), keep, rng)) drop[candidates[k]] = false;

    std::vector<FirmYearInstance> out;
    out.reserve(instances.size() - (candidates.size() - keep));
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!drop[i]) out.push_back(std::move(instances[i]));
    }
    return out;
}

std::vector<FirmYearInstance> build_training_set(const Corpus& companies, const SplitSpec& spec, int cutoff_year) {
    std::vector<FirmYearInstance> all;
    for (const auto& company : companies) {
        if (company.reports.empty() || company.first_report_year() > cutoff_year) continue;
        for (int y = company.first_report_year(); y <= cutoff_year; ++y) {
            if (auto inst = build_instance(company, y, spec.history_len)) all.push_back(std::move(*inst));
        }
    }
    auto kept = prune_all_missing(std::move(all), spec.all_missing_keep_rate,
                                  spec.rng_seed ^ static_cast<std::uint64_t>(cutoff_year));
    if (kept.empty()) {
        throw std::runtime_error("training set for cutoff " + std::to_string(cutoff_year) + " is empty");
    }
    return kept;
}

std::vector<FirmYearInstance> build_eval_set(const Corpus& companies, int year, const SplitSpec& spec) {
    std::vector<FirmYearInstance> out;
    const int first_active = year - spec.validation_activity_window + 1;
    for (const auto& company : companies) {
        const bool active = std::any_of(company.reports.begin(), company.reports.end(), [&](const Report& r) {
            const int y = r.filing_date.year();
            return y >= first_active && y <= year;
        });
        if (!active) continue;
        if (auto inst = build_instance(company, year, spec.history_len)) out.push_back(std::move(*inst));
    }
    return out;
}

std::vector<FirmYearInstance> undersample(std::span<const FirmYearInstance> instances, double target_majority_frac,
                                          std::uint64_t seed) {
    if (!(target_majority_frac > 0.0 && target_majority_frac < 1.0)) {
        throw std::invalid_argument("target_majority_frac must lie in (0,1)");
    }
    std::vector<std::size_t> negatives;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].label == 1) {
            ++positives;
        } else {
            negatives.push_back(i);
        }
    }
    if (positives == 0) throw std::invalid_argument("undersample: no positive instances");
    const auto wanted = static_cast<std::size_t>(
        std::llround(static_cast<double>(positives) * target_majority_frac / (1.0 - target_majority_frac)));

    std::vector<bool> keep(instances.size(), true);
    if (negatives.size() > wanted) {
        for (auto i : negatives) keep[i] = false;
        Rng rng(seed);
        for (auto k : sample_indices(negatives.size(), wanted, rng)) keep[negatives[k]] = true;
    }
    std::vector<FirmYearInstance> out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (keep[i]) out.push_back(instances[i]);
    }
    return out;
}

nlohmann::ordered_json instance_to_json(const FirmYearInstance& inst) {
    nlohmann::ordered_json j;
    j["cik"] = inst.cik;
    j["year"] = inst.year;
    j["window_start"] = inst.window_start.iso();
    j["window_end"] = inst.window_end.iso();
    j["label"] = inst.label;
    j["history"] = inst.history;
    j["imputed"] = inst.imputed;
    return j;
}

FirmYearInstance instance_from_json(const json& j) {
    FirmYearInstance inst;
    inst.cik = j.at("cik").get<std::string>();
    inst.year = j.at("year").get<int>();
    inst.window_start = Date::parse(j.at("window_start").get<std::string>());
    inst.window_end = Date::parse(j.at("window_end").get<std::string>());
    inst.label = j.at("label").get<int>();
    inst.history = j.at("history").get<std::vector<std::string>>();
    inst.imputed = j.value("imputed", false);
    if (inst.label != 0 && inst.label != 1) throw std::invalid_argument("label must be 0 or 1");
    return inst;
}

void write_instances(std::span<const FirmYearInstance> instances, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& inst : instances) {
        out << instance_to_json(inst).dump() << '\n';
    }
}

std::vector<FirmYearInstance> read_instances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<FirmYearInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(instance_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace bankbench
