#include <gtest/gtest.h>

#include <set>

#include "bankbench/corpus.hpp"
#include "bankbench/sampling.hpp"
#include "bankbench/textprep.hpp"

using namespace bankbench;

namespace {

Report report(const std::string& cik, Date filed, std::string text) {
    return Report{cik, Date(filed.year() - 1, 12, 31), filed, std::move(text)};
}

Company company(const std::string& cik, std::vector<Date> filings, std::optional<Date> bankrupt = {}) {
    Company c;
    c.cik = cik;
    for (auto d : filings) c.reports.push_back(report(cik, d, "text" + std::to_string(d.year())));
    if (bankrupt) c.bankruptcy = BankruptcyFiling{cik, *bankrupt, Chapter::k11};
    return c;
}

FirmYearInstance all_missing_instance(int i) {
    FirmYearInstance inst;
    inst.cik = std::to_string(i);
    inst.year = 2010;
    inst.history = {std::string(kMissingToken)};
    return inst;
}

}  // namespace

TEST(Window, DirectFiling) {
    const auto c = company("1", {Date(2018, 3, 15)});
    const auto w = determine_window(c, 2018);
    ASSERT_TRUE(w);
    EXPECT_EQ(w->start, Date(2018, 3, 15));
    EXPECT_FALSE(w->imputed);
    EXPECT_EQ(w->end(), Date(2019, 3, 15));
}

TEST(Window, ImputedFromLatestFiling) {
    const auto c = company("1", {Date(2016, 3, 15)});
    const auto w = determine_window(c, 2018);
    ASSERT_TRUE(w);
    EXPECT_EQ(w->start, Date(2018, 3, 15));
    EXPECT_TRUE(w->imputed);
    EXPECT_FALSE(determine_window(c, 2015));
}

TEST(Window, LeapDayAnchor) {
    const auto c = company("1", {Date(2016, 2, 29)});
    EXPECT_EQ(determine_window(c, 2019)->start, Date(2019, 2, 28));
    EXPECT_EQ(determine_window(c, 2020)->start, Date(2020, 2, 29));
}

TEST(Instance, LabelInsideWindow) {
    const auto c = company("1", {Date(2017, 3, 1), Date(2018, 3, 1)}, Date(2018, 6, 1));
    const auto inst = build_instance(c, 2018, 1);
    ASSERT_TRUE(inst);
    EXPECT_EQ(inst->label, 1);
    EXPECT_EQ(build_instance(c, 2017, 1)->label, 0);
    EXPECT_FALSE(build_instance(c, 2019, 1));
}

TEST(Instance, BankruptcyBeforeAnchorFilingIsInvalid) {
    // fiscal 2017 closes, the firm files for bankruptcy, the 10-K never arrives
    const auto c = company("1", {Date(2017, 3, 15)}, Date(2018, 2, 1));
    EXPECT_EQ(build_instance(c, 2017, 1)->label, 1);
    EXPECT_FALSE(build_instance(c, 2018, 1));
}

TEST(Instance, HistoryWithGap) {
    const auto c = company("1", {Date(2014, 3, 1), Date(2016, 3, 1)});
    const auto inst = build_instance(c, 2016, 3);
    ASSERT_TRUE(inst);
    EXPECT_EQ(inst->history, (std::vector<std::string>{"text2014", "missing", "text2016"}));
    EXPECT_EQ(inst->missing_slots(), 1u);
    EXPECT_FALSE(inst->all_missing());
}

TEST(Instance, ImputedAnchorHasMissingLastSlot) {
    const auto c = company("1", {Date(2014, 3, 1)});
    const auto inst = build_instance(c, 2016, 1);
    ASSERT_TRUE(inst);
    EXPECT_TRUE(inst->imputed);
    EXPECT_TRUE(inst->all_missing());
}

TEST(TrainingSet, RespectsCutoff) {
    SyntheticConfig cfg;
    cfg.n_companies = 300;
    const auto corpus = generate_synthetic(cfg);
    SplitSpec spec;
    const auto train = build_training_set(corpus, spec, 2015);
    for (const auto& i : train) {
        EXPECT_LE(i.window_start, Date(2015, 12, 31));
        EXPECT_LE(i.year, 2015);
    }
}

TEST(TrainingSet, KeepRateOneKeepsAll) {
    SyntheticConfig cfg;
    cfg.n_companies = 200;
    const auto corpus = generate_synthetic(cfg);
    SplitSpec spec;
    spec.all_missing_keep_rate = 1.0;
    std::size_t expected = 0;
    for (const auto& c : corpus) {
        if (c.first_report_year() > 2015) continue;
        for (int y = c.first_report_year(); y <= 2015; ++y) expected += build_instance(c, y, 1).has_value();
    }
    EXPECT_EQ(build_training_set(corpus, spec, 2015).size(), expected);
}

TEST(TrainingSet, EmptyIsError) {
    const Corpus corpus{company("1", {Date(2018, 3, 1)})};
    SplitSpec spec;
    EXPECT_THROW(build_training_set(corpus, spec, 2015), std::runtime_error);
}

TEST(Prune, ExactCount) {
    std::vector<FirmYearInstance> v;
    for (int i = 0; i < 1000; ++i) v.push_back(all_missing_instance(i));
    FirmYearInstance kept = all_missing_instance(5000);
    kept.history = {"some text"};
    v.push_back(kept);
    const auto out = prune_all_missing(v, 0.05, 42);
    EXPECT_EQ(out.size(), 51u);
    EXPECT_EQ(out.back(), kept);
    EXPECT_EQ(prune_all_missing(v, 0.05, 42), out);
}

TEST(EvalSet, ActivityFilter) {
    const Corpus corpus{company("old", {Date(2012, 3, 1)}), company("recent", {Date(2014, 3, 1)}),
                        company("every", {Date(2016, 3, 1), Date(2017, 3, 1), Date(2018, 3, 1)})};
    SplitSpec spec;
    const auto eval = build_eval_set(corpus, 2018, spec);
    std::set<std::string> ciks;
    for (const auto& i : eval) ciks.insert(i.cik);
    EXPECT_EQ(ciks, (std::set<std::string>{"recent", "every"}));
    for (const auto& i : eval) {
        if (i.cik == "every") EXPECT_FALSE(i.imputed);
    }
}

TEST(EvalSet, NoDuplicateCompanies) {
    SyntheticConfig cfg;
    cfg.n_companies = 300;
    const auto corpus = generate_synthetic(cfg);
    SplitSpec spec;
    spec.history_len = 3;
    const auto eval = build_eval_set(corpus, 2019, spec);
    std::set<std::string> ciks;
    for (const auto& i : eval) EXPECT_TRUE(ciks.insert(i.cik).second);
}

TEST(Undersample, NinePerPositive) {
    std::vector<FirmYearInstance> v;
    for (int i = 0; i < 5010; ++i) {
        FirmYearInstance inst;
        inst.cik = std::to_string(i);
        inst.label = i < 10 ? 1 : 0;
        v.push_back(inst);
    }
    const auto out = undersample(v, 0.9, 3);
    EXPECT_EQ(out.size(), 100u);
    std::size_t pos = 0;
    for (const auto& i : out) pos += static_cast<std::size_t>(i.label);
    EXPECT_EQ(pos, 10u);
    EXPECT_EQ(undersample(v, 0.9, 3), out);
    EXPECT_NE(undersample(v, 0.9, 4), out);
}

TEST(Undersample, FewNegativesKept) {
    std::vector<FirmYearInstance> v(20);
    for (int i = 0; i < 20; ++i) v[i].label = i < 5 ? 1 : 0;
    EXPECT_EQ(undersample(v, 0.9, 1).size(), 20u);
    for (auto& i : v) i.label = 0;
    EXPECT_THROW(undersample(v, 0.9, 1), std::invalid_argument);
}

TEST(Instances, JsonRoundTrip) {
    const auto c = company("0007", {Date(2014, 3, 1), Date(2016, 3, 1)}, Date(2016, 9, 1));
    const auto inst = *build_instance(c, 2016, 3);
    EXPECT_EQ(instance_from_json(instance_to_json(inst)), inst);
}

TEST(Split, Validate) {
    SplitSpec s;
    EXPECT_NO_THROW(s.validate());
    s.train_cutoff_year = 2017;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Properties, OnePositivePerBankruptcyAndNoneAfter) {
    SyntheticConfig cfg;
    cfg.n_companies = 600;
    cfg.base_bankruptcy_rate = 0.02;
    const auto corpus = generate_synthetic(cfg);
    for (const auto& c : corpus) {
        int positives = 0;
        for (int y = c.first_report_year(); y <= cfg.last_year; ++y) {
            const auto inst = build_instance(c, y, 3);
            if (!inst) continue;
            positives += inst->label;
            if (c.bankruptcy) EXPECT_LE(inst->window_start, c.bankruptcy->filing_date);
            for (std::size_t s = 0; s < 3; ++s) {
                const Report* r = c.report_filed_in(y - 2 + static_cast<int>(s));
                if (r) EXPECT_LE(r->filing_date, inst->window_start);
            }
        }
        EXPECT_EQ(positives, c.bankruptcy ? 1 : 0) << c.cik;
    }
}
