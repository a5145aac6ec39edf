#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace bankbench {

/// Calendar date with day resolution. Thin wrapper over std::chrono::sys_days
/// so dates order, subtract and serialize without time-zone concerns.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed or
    /// non-existent dates.
    static Date parse(std::string_view text);

    [[nodiscard]] int year() const;
    [[nodiscard]] unsigned month() const;
    [[nodiscard]] unsigned day() const;
    [[nodiscard]] std::chrono::sys_days sys_days() const { return days_; }
    [[nodiscard]] std::string iso() const;

    /// Same month/day in another year; Feb-29 maps to Feb-28 in non-leap years.
    [[nodiscard]] Date with_year(int year) const;
    [[nodiscard]] Date plus_years(int years) const { return with_year(year() + years); }
    [[nodiscard]] Date plus_days(int days) const { return Date(days_ + std::chrono::days(days)); }
    [[nodiscard]] long days_until(const Date& other) const {
        return static_cast<long>((other.days_ - days_).count());
    }

    /// Last day of the given calendar year.
    static Date end_of_year(int year) { return Date(year, 12, 31); }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;
    friend constexpr bool operator==(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace bankbench
