#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace clir {

/// Proleptic Gregorian calendar date.
class Date {
  public:
    constexpr Date() = default;

    /// Throws ValidationError for an impossible calendar date.
    Date(int year, unsigned month, unsigned day);

    /// Accepts "YYYY-MM-DD", "YYYY-MM", "M/D/YYYY" and "M/YYYY". Month-only
    /// values resolve to the first day of the month.
    static Date parse(std::string_view text);
    static std::optional<Date> try_parse(std::string_view text);

    static Date from_days(long days);

    int year() const noexcept { return year_; }
    unsigned month() const noexcept { return month_; }
    unsigned day() const noexcept { return day_; }

    /// Days since 1970-01-01.
    long days() const noexcept;

    Date first_of_month() const { return Date(year_, month_, 1); }
    Date add_months(int months) const;

    std::string iso() const;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;
    friend constexpr bool operator==(const Date&, const Date&) = default;

  private:
    int year_ = 1970;
    unsigned month_ = 1;
    unsigned day_ = 1;
};

/// Months elapsed from the month of `from` to the month of `to`.
int months_between(const Date& from, const Date& to) noexcept;

}  // namespace clir
