#include "clir/date.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <vector>

#include "clir/error.hpp"

namespace clir {
namespace {

bool is_leap(int y) noexcept { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) noexcept {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

// Civil-from-days / days-from-civil in the proleptic Gregorian calendar.
long days_from_civil(int y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::optional<std::vector<int>> split_numbers(std::string_view text, char sep) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (true) {
        const auto end = text.find(sep, pos);
        const auto part = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        if (part.empty() || part.size() > 4) return std::nullopt;
        int value = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
        out.push_back(value);
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

bool valid(int y, int m, int d) noexcept {
    return m >= 1 && m <= 12 && d >= 1 && static_cast<unsigned>(d) <= days_in_month(y, static_cast<unsigned>(m));
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) : year_(year), month_(month), day_(day) {
    if (!valid(year, static_cast<int>(month), static_cast<int>(day))) {
        throw ValidationError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                              std::to_string(day));
    }
}

std::optional<Date> Date::try_parse(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    int y = 0, m = 0, d = 1;
    if (text.find('-') != std::string_view::npos) {
        auto parts = split_numbers(text, '-');
        if (!parts || parts->size() < 2 || parts->size() > 3 || text.substr(0, 4).find('-') != std::string_view::npos)
            return std::nullopt;
        y = (*parts)[0];
        m = (*parts)[1];
        if (parts->size() == 3) d = (*parts)[2];
    } else if (text.find('/') != std::string_view::npos) {
        auto parts = split_numbers(text, '/');
        if (!parts || parts->size() < 2 || parts->size() > 3) return std::nullopt;
        m = (*parts)[0];
        if (parts->size() == 3) {
            d = (*parts)[1];
            y = (*parts)[2];
        } else {
            y = (*parts)[1];
        }
        if (y < 1000) return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (!valid(y, m, d)) return std::nullopt;
    return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

Date Date::parse(std::string_view text) {
    if (auto date = try_parse(text)) return *date;
    throw ValidationError("unrecognized date '" + std::string(text) + "'");
}

Date Date::from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date(static_cast<int>(y + (m <= 2)), m, d);
}

long Date::days() const noexcept { return days_from_civil(year_, month_, day_); }

Date Date::add_months(int months) const {
    const int total = year_ * 12 + static_cast<int>(month_) - 1 + months;
    const int y = total >= 0 ? total / 12 : (total - 11) / 12;
    const unsigned m = static_cast<unsigned>(total - y * 12) + 1;
    const unsigned d = std::min(day_, days_in_month(y, m));
    return Date(y, m, d);
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
    return buf;
}

int months_between(const Date& from, const Date& to) noexcept {
    return (to.year() - from.year()) * 12 + static_cast<int>(to.month()) - static_cast<int>(from.month());
}

}  // namespace clir
