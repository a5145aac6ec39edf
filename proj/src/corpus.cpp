#include "bankbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "bankbench/rng.hpp"
#include "bankbench/textprep.hpp"

namespace bankbench {

using nlohmann::json;

const Report* Company::report_filed_in(int year) const {
    for (const auto& r : reports) {
        if (r.filing_date.year() == year) return &r;
        if (r.filing_date.year() > year) break;
    }
    return nullptr;
}

const Report* Company::latest_report_until(Date date) const {
    const Report* best = nullptr;
    for (const auto& r : reports) {
        if (r.filing_date > date) break;
        best = &r;
    }
    return best;
}

// --- ingestion ----------------------------------------------------------------

namespace {

std::string where(const std::filesystem::path& path, std::size_t lineno) {
    return path.filename().string() + ":" + std::to_string(lineno);
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CorpusError(where(path, lineno) + ": malformed JSON: " + e.what());
        }
        if (!obj.is_object()) throw CorpusError(where(path, lineno) + ": expected a JSON object");
        try {
            fn(obj, lineno);
        } catch (const CorpusError&) {
            throw;
        } catch (const std::exception& e) {
            throw CorpusError(where(path, lineno) + ": " + e.what());
        }
    }
}

Date date_field(const json& obj, const char* key) {
    return Date::parse(obj.at(key).get<std::string>());
}

}  // namespace

LoadedCorpus load_corpus(const std::filesystem::path& reports_path,
                         const std::filesystem::path& bankruptcies_path) {
    LoadedCorpus result;
    auto& warn = result.warnings;

    std::map<std::string, std::vector<Report>> reports_by_cik;
    std::unordered_set<std::string> seen_keys;
    for_each_json_line(reports_path, [&](const json& obj, std::size_t lineno) {
        Report r{obj.at("cik").get<std::string>(), date_field(obj, "period_of_report"),
                 date_field(obj, "filing_date"), obj.at("mdna").get<std::string>()};
        if (!seen_keys.insert(r.cik + '\x1f' + r.filing_date.iso()).second) {
            throw CorpusError(where(reports_path, lineno) + ": duplicate report for cik " + r.cik +
                              " filed " + r.filing_date.iso());
        }
        if (r.filing_date < r.period_end) {
            ++warn.filing_before_period_end;
            return;
        }
        reports_by_cik[r.cik].push_back(std::move(r));
    });

    std::map<std::string, BankruptcyFiling> filings;
    for_each_json_line(bankruptcies_path, [&](const json& obj, std::size_t lineno) {
        const int chapter = obj.at("chapter").get<int>();
        if (chapter != 7 && chapter != 11) {
            throw CorpusError(where(bankruptcies_path, lineno) + ": chapter must be 7 or 11");
        }
        BankruptcyFiling f{obj.at("cik").get<std::string>(), date_field(obj, "filing_date"),
                           static_cast<Chapter>(chapter)};
        auto [it, inserted] = filings.emplace(f.cik, f);
        if (!inserted) {
            ++warn.duplicate_bankruptcies;
            if (f.filing_date < it->second.filing_date) it->second = f;
        }
    });

    for (auto& [cik, reports] : reports_by_cik) {
        std::sort(reports.begin(), reports.end(),
                  [](const Report& a, const Report& b) { return a.filing_date < b.filing_date; });
        Company company{cik, {}, std::nullopt};
        if (auto it = filings.find(cik); it != filings.end()) company.bankruptcy = it->second;
        int last_year = std::numeric_limits<int>::min();
        for (auto& r : reports) {
            if (company.bankruptcy && r.filing_date >= company.bankruptcy->filing_date) {
                ++warn.after_bankruptcy;
                continue;
            }
            if (r.filing_date.year() == last_year) {
                ++warn.same_year_reports;  // keep the earliest of the year
                continue;
            }
            last_year = r.filing_date.year();
            company.reports.push_back(std::move(r));
        }
        if (!company.reports.empty()) result.companies.push_back(std::move(company));
    }
    for (const auto& [cik, f] : filings) {
        if (!reports_by_cik.contains(cik)) ++warn.unmatched_bankruptcies;
    }
    return result;
}

void write_corpus(const Corpus& companies, const std::filesystem::path& reports_path,
                  const std::filesystem::path& bankruptcies_path) {
    std::ofstream reports(reports_path);
    std::ofstream filings(bankruptcies_path);
    if (!reports || !filings) throw CorpusError("cannot write corpus files");
    for (const auto& c : companies) {
        for (const auto& r : c.reports) {
            nlohmann::ordered_json obj;
            obj["cik"] = r.cik;
            obj["period_of_report"] = r.period_end.iso();
            obj["filing_date"] = r.filing_date.iso();
            obj["mdna"] = r.mdna;
            reports << obj.dump() << '\n';
        }
        if (c.bankruptcy) {
            nlohmann::ordered_json obj;
            obj["cik"] = c.bankruptcy->cik;
            obj["filing_date"] = c.bankruptcy->filing_date.iso();
            obj["chapter"] = static_cast<int>(c.bankruptcy->chapter);
            filings << obj.dump() << '\n';
        }
    }
}

LoadedCorpus load_corpus_dir(const std::filesystem::path& dir) {
    return load_corpus(dir / "reports.jsonl", dir / "bankruptcies.jsonl");
}

void write_corpus_dir(const Corpus& companies, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_corpus(companies, dir / "reports.jsonl", dir / "bankruptcies.jsonl");
}

// --- synthetic configuration --------------------------------------------------

std::vector<std::string> SyntheticConfig::default_distress_lexicon() {
    return {"waiver",      "restructuring", "severance",   "subordinated",   "covenant",
            "indenture",   "lender",        "forbearance", "insolvency",     "delisting",
            "impairment",  "bankruptcy",    "receivership", "delinquency",   "default",
            "liquidity",   "noncompliance", "acceleration", "foreclosure",   "turnaround"};
}

void SyntheticConfig::validate() const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    };
    if (n_companies == 0) throw std::invalid_argument("n_companies must be positive");
    if (distress_lexicon.empty()) throw std::invalid_argument("distress_lexicon is empty");
    if (last_year - first_year + 1 < 6) throw std::invalid_argument("year_range must span at least 6 years");
    prob(base_bankruptcy_rate, "base_bankruptcy_rate");
    prob(distress_injection_rate, "distress_injection_rate");
    prob(missing_mechanisms.permanent_stop, "missing_mechanisms.permanent_stop");
    prob(missing_mechanisms.random_gap, "missing_mechanisms.random_gap");
    prob(missing_mechanisms.pre_bankruptcy_silence, "missing_mechanisms.pre_bankruptcy_silence");
    prob(entry_rate, "entry_rate");
    if (!(doc_length_mean >= 1.0) || !(doc_length_std >= 0.0)) {
        throw std::invalid_argument("doc_length_mean must be >= 1 and doc_length_std >= 0");
    }
    if (background_vocab_size < 100) throw std::invalid_argument("background_vocab_size must be >= 100");
    if (distress_tokens_per_sentence == 0) throw std::invalid_argument("distress_tokens_per_sentence must be >= 1");
}

void to_json(json& j, const SyntheticConfig& c) {
    j = json{{"n_companies", c.n_companies},
             {"year_range", {c.first_year, c.last_year}},
             {"base_bankruptcy_rate", c.base_bankruptcy_rate},
             {"distress_lexicon", c.distress_lexicon},
             {"distress_injection_rate", c.distress_injection_rate},
             {"missing_mechanisms",
              {{"permanent_stop", c.missing_mechanisms.permanent_stop},
               {"random_gap", c.missing_mechanisms.random_gap},
               {"pre_bankruptcy_silence", c.missing_mechanisms.pre_bankruptcy_silence}}},
             {"doc_length_mean", c.doc_length_mean},
             {"doc_length_std", c.doc_length_std},
             {"rng_seed", c.rng_seed},
             {"background_vocab_size", c.background_vocab_size},
             {"zipf_exponent", c.zipf_exponent},
             {"entry_rate", c.entry_rate},
             {"distress_sentences", c.distress_sentences},
             {"distress_tokens_per_sentence", c.distress_tokens_per_sentence}};
}

void from_json(const json& j, SyntheticConfig& c) {
    c = SyntheticConfig{};
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("n_companies", c.n_companies);
    if (j.contains("year_range")) {
        const auto& yr = j.at("year_range");
        c.first_year = yr.at(0).get<int>();
        c.last_year = yr.at(1).get<int>();
    }
    opt("base_bankruptcy_rate", c.base_bankruptcy_rate);
    opt("distress_lexicon", c.distress_lexicon);
    opt("distress_injection_rate", c.distress_injection_rate);
    if (j.contains("missing_mechanisms")) {
        const auto& m = j.at("missing_mechanisms");
        if (m.contains("permanent_stop")) m.at("permanent_stop").get_to(c.missing_mechanisms.permanent_stop);
        if (m.contains("random_gap")) m.at("random_gap").get_to(c.missing_mechanisms.random_gap);
        if (m.contains("pre_bankruptcy_silence")) {
            m.at("pre_bankruptcy_silence").get_to(c.missing_mechanisms.pre_bankruptcy_silence);
        }
    }
    opt("doc_length_mean", c.doc_length_mean);
    opt("doc_length_std", c.doc_length_std);
    opt("rng_seed", c.rng_seed);
    opt("background_vocab_size", c.background_vocab_size);
    opt("zipf_exponent", c.zipf_exponent);
    opt("entry_rate", c.entry_rate);
    opt("distress_sentences", c.distress_sentences);
    opt("distress_tokens_per_sentence", c.distress_tokens_per_sentence);
}

// --- synthetic generation -------------------------------------------------------

namespace {

constexpr std::string_view kOnsets[] = {"b",  "c",  "d",  "f",  "g",  "h",  "j",  "k",  "l",  "m",
                                        "n",  "p",  "r",  "t",  "v",  "z",  "br", "cl", "dr", "fl",
                                        "gr", "pl", "pr", "st", "tr", "sk", "sp", "qu", "ch", "th"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "io", "ou", "ar", "or", "el"};
constexpr std::string_view kCodas[] = {"", "", "", "n", "m", "t", "k", "p", "x", "l", "nt", "nd", "rk"};

template <std::size_t N>
std::string_view pick(const std::string_view (&arr)[N], Rng& rng) {
    return arr[rng.below(N)];
}

// Pronounceable pseudo-words that pass preprocess unchanged and never collide
// with the planted lexicon.
std::vector<std::string> make_background_vocabulary(std::size_t n, const std::unordered_set<std::string>& reserved,
                                                    Rng& rng) {
    std::vector<std::string> words;
    words.reserve(n);
    std::unordered_set<std::string> seen;
    std::size_t attempts = 0;
    while (words.size() < n) {
        if (++attempts > n * 200) throw std::runtime_error("could not build the background vocabulary");
        const std::size_t syllables = 2 + rng.below(3);
        std::string w;
        for (std::size_t s = 0; s < syllables; ++s) {
            w += pick(kOnsets, rng);
            w += pick(kVowels, rng);
        }
        w += pick(kCodas, rng);
        if (w.size() < 4 || w.size() > 12 || seen.contains(w) || reserved.contains(w)) continue;
        const auto pre = preprocess(w);
        if (pre.size() != 1 || pre.front() != w) continue;
        seen.insert(w);
        words.push_back(std::move(w));
    }
    return words;
}

class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
            cdf_[r] = total;
        }
        for (auto& c : cdf_) c /= total;
    }
    std::size_t operator()(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

struct TextGenerator {
    const std::vector<std::string>& vocab;
    const std::vector<std::string>& lexicon;
    ZipfSampler zipf;
    const SyntheticConfig& cfg;

    std::vector<std::string> sentence(Rng& rng) const {
        const std::size_t len = 8 + rng.below(9);
        std::vector<std::string> words;
        words.reserve(len);
        for (std::size_t i = 0; i < len; ++i) words.push_back(vocab[zipf(rng)]);
        return words;
    }

    std::vector<std::string> distress_sentence(Rng& rng) const {
        auto words = sentence(rng);
        const auto k = std::min(cfg.distress_tokens_per_sentence, words.size());
        for (auto pos : sample_indices(words.size(), k, rng)) words[pos] = lexicon[rng.below(lexicon.size())];
        return words;
    }

    static void append(std::string& text, const std::vector<std::string>& words) {
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (!text.empty()) text += ' ';
            if (i == 0) {
                std::string first = words[i];
                first[0] = static_cast<char>(first[0] - 'a' + 'A');
                text += first;
            } else {
                text += words[i];
            }
        }
        text += '.';
    }

    std::string document(Rng& rng, bool distressed) const {
        const double target = std::max(1.0, std::round(rng.normal(cfg.doc_length_mean, cfg.doc_length_std)));
        auto remaining = static_cast<std::size_t>(target);
        std::vector<std::vector<std::string>> sentences;
        while (remaining > 0) {
            auto s = sentence(rng);
            if (s.size() > remaining) s.resize(remaining);
            remaining -= s.size();
            sentences.push_back(std::move(s));
        }
        if (distressed) {
            for (std::size_t k = 0; k < cfg.distress_sentences; ++k) {
                const auto at = rng.below(sentences.size() + 1);
                sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(at), distress_sentence(rng));
            }
        }
        std::string text;
        for (const auto& s : sentences) append(text, s);
        return text;
    }
};

struct PlannedReport {
    Date filing;
    bool distressed = false;
};

}  // namespace

SyntheticCorpus generate_synthetic_with_log(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticCorpus out;
    auto& log = out.log;
    Rng rng(cfg.rng_seed);
    Rng text_rng(rng.fork());

    std::unordered_set<std::string> reserved;
    for (const auto& w : cfg.distress_lexicon) {
        reserved.insert(w);
        for (const auto& t : preprocess(w)) reserved.insert(t);
    }
    out.background_vocabulary = make_background_vocabulary(cfg.background_vocab_size, reserved, text_rng);
    TextGenerator gen{out.background_vocabulary, cfg.distress_lexicon,
                      ZipfSampler(cfg.background_vocab_size, cfg.zipf_exponent), cfg};

    const auto& mm = cfg.missing_mechanisms;
    const int span = cfg.last_year - cfg.first_year + 1;
    const int width = std::max<int>(10, static_cast<int>(std::to_string(cfg.n_companies).size()));

    for (std::size_t i = 0; i < cfg.n_companies; ++i) {
        std::string cik = std::to_string(i + 1);
        cik.insert(0, static_cast<std::size_t>(width) - cik.size(), '0');

        const int entry = rng.bernoulli(cfg.entry_rate)
                              ? cfg.first_year + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(span - 1)))
                              : cfg.first_year;
        const auto month = static_cast<unsigned>(2 + rng.below(3));
        const auto day = static_cast<unsigned>(1 + rng.below(28));

        std::vector<PlannedReport> planned;
        std::optional<Date> last_filing;
        std::optional<Date> prev_anchor;
        std::optional<BankruptcyFiling> bankruptcy;

        for (int y = entry; y <= cfg.last_year; ++y) {
            if (last_filing) {
                ++log.stop_opportunities;
                if (rng.bernoulli(mm.permanent_stop)) {
                    ++log.stops;
                    break;
                }
            }
            ++log.firm_years;
            const bool bankrupt = rng.bernoulli(cfg.base_bankruptcy_rate);
            const Date filing = Date(y, month, day).plus_days(static_cast<int>(rng.below(21)) - 10);
            bool present = true;
            if (last_filing) {
                if (bankrupt) {
                    ++log.silence_opportunities;
                    if (rng.bernoulli(mm.pre_bankruptcy_silence)) {
                        ++log.silences;
                        present = false;
                    }
                } else {
                    ++log.gap_opportunities;
                    if (rng.bernoulli(mm.random_gap)) {
                        ++log.gaps;
                        present = false;
                    }
                }
            }
            const Date anchor = present ? filing : last_filing->with_year(y);
            if (present) {
                planned.push_back({filing, false});
                last_filing = filing;
            }
            if (bankrupt) {
                // one window only: after this anchor and past the previous window
                Date lo = anchor.plus_days(1);
                if (prev_anchor) lo = std::max(lo, prev_anchor->plus_years(1));
                const Date hi = anchor.plus_years(1).plus_days(-1);
                const auto width_days = static_cast<std::uint64_t>(lo.days_until(hi) + 1);
                const Date when = lo.plus_days(static_cast<int>(rng.below(width_days)));
                bankruptcy = BankruptcyFiling{cik, when, rng.bernoulli(0.7) ? Chapter::k11 : Chapter::k7};
                ++log.bankruptcies;
                break;
            }
            prev_anchor = anchor;
        }

        if (bankruptcy) {
            const std::size_t n_final = std::min<std::size_t>(planned.size(), 1 + rng.below(2));
            for (std::size_t k = planned.size() - n_final; k < planned.size(); ++k) {
                ++log.distress_candidates;
                if (rng.bernoulli(cfg.distress_injection_rate)) {
                    planned[k].distressed = true;
                    ++log.distress_injections;
                }
            }
        }

        Company company{cik, {}, bankruptcy};
        company.reports.reserve(planned.size());
        for (const auto& p : planned) {
            company.reports.push_back(
                Report{cik, Date(p.filing.year() - 1, 12, 31), p.filing, gen.document(text_rng, p.distressed)});
        }
        out.companies.push_back(std::move(company));
    }
    return out;
}

Corpus generate_synthetic(const SyntheticConfig& config) {
    return generate_synthetic_with_log(config).companies;
}

// --- statistics ---------------------------------------------------------------

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd r;
    if (values.empty()) return r;
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return r;
}

namespace {

std::size_t whitespace_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_token) ++n;
        in_token = !space;
    }
    return n;
}

}  // namespace

CorpusStats corpus_stats(const Corpus& companies) {
    if (companies.empty()) throw std::invalid_argument("corpus_stats: empty corpus");
    CorpusStats s;
    s.n_companies = companies.size();
    std::vector<double> lengths;
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (const auto& c : companies) {
        for (const auto& r : c.reports) {
            const int y = r.filing_date.year();
            ++s.reports_per_year[y];
            lo = std::min(lo, y);
            hi = std::max(hi, y);
            lengths.push_back(static_cast<double>(whitespace_tokens(r.mdna)));
        }
        if (!c.reports.empty()) ++s.new_firms_per_year[c.first_report_year()];
        if (c.bankruptcy) {
            ++s.bankruptcies_per_year[c.bankruptcy->filing_date.year()];
            ++s.n_bankruptcies;
        }
    }
    s.n_reports = lengths.size();
    s.first_year = lo;
    s.last_year = hi;
    std::vector<double> reports, bankrupt, fresh;
    for (int y = lo; y <= hi; ++y) {
        auto count = [y](const std::map<int, std::size_t>& m) {
            auto it = m.find(y);
            return static_cast<double>(it == m.end() ? 0 : it->second);
        };
        reports.push_back(count(s.reports_per_year));
        bankrupt.push_back(count(s.bankruptcies_per_year));
        fresh.push_back(count(s.new_firms_per_year));
    }
    s.reports_per_year_summary = mean_std(reports);
    s.bankruptcies_per_year_summary = mean_std(bankrupt);
    s.new_firms_per_year_summary = mean_std(fresh);
    s.doc_length = mean_std(lengths);
    return s;
}

json to_json(const CorpusStats& s) {
    auto per_year = [](const std::map<int, std::size_t>& m) {
        json j = json::object();
        for (const auto& [y, n] : m) j[std::to_string(y)] = n;
        return j;
    };
    auto ms = [](const MeanStd& v) { return json{{"mean", v.mean}, {"std", v.std}}; };
    return json{{"period", {s.first_year, s.last_year}},
                {"n_companies", s.n_companies},
                {"n_reports", s.n_reports},
                {"n_bankruptcies", s.n_bankruptcies},
                {"reports_per_year", ms(s.reports_per_year_summary)},
                {"bankruptcies_per_year", ms(s.bankruptcies_per_year_summary)},
                {"new_firms_per_year", ms(s.new_firms_per_year_summary)},
                {"doc_length_tokens", ms(s.doc_length)},
                {"by_year",
                 {{"reports", per_year(s.reports_per_year)},
                  {"bankruptcies", per_year(s.bankruptcies_per_year)},
                  {"new_firms", per_year(s.new_firms_per_year)}}}};
}

}  // namespace bankbench
