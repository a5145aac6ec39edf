#include "bankbench/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace bankbench {

using namespace std::chrono;

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    for (const char* p = first; p != last; ++p) {
        if (*p < '0' || *p > '9') {
            throw std::invalid_argument("malformed date '" + std::string(text) + "'");
        }
    }
    std::from_chars(first, last, value);
    return value;
}

}  // namespace

Date::Date(int y, unsigned m, unsigned d) {
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date " + std::to_string(y) + "-" +
                                    std::to_string(m) + "-" + std::to_string(d));
    }
    days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const int y = parse_field(text, 0, 4);
    const int m = parse_field(text, 5, 2);
    const int d = parse_field(text, 8, 2);
    return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day{days_}.year()); }
unsigned Date::month() const { return static_cast<unsigned>(year_month_day{days_}.month()); }
unsigned Date::day() const { return static_cast<unsigned>(year_month_day{days_}.day()); }

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
}

Date Date::with_year(int y) const {
    const year_month_day ymd{days_};
    year_month_day moved{std::chrono::year{y}, ymd.month(), ymd.day()};
    if (!moved.ok()) {
        // only Feb-29 can fail
        moved = year_month_day{std::chrono::year{y}, February, std::chrono::day{28}};
    }
    return Date(std::chrono::sys_days{moved});
}

}  // namespace bankbench
