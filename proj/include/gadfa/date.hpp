#ifndef GADFA_DATE_HPP
#define GADFA_DATE_HPP

#include <compare>
#include <cstdio>
#include <string>
#include <tuple>

#include "gadfa/util.hpp"

namespace gadfa {

// A calendar day. The whole pipeline works at day granularity; arithmetic
// uses the proleptic Gregorian civil-day number so that "day t+1" crosses
// month and year boundaries correctly.
class Day {
public:
    Day() = default;

    static Day from_iso(const std::string& s) {
        int y = 0, m = 0, d = 0;
        char extra = 0;
        if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3)
            throw ValidationError("invalid date, expected YYYY-MM-DD: '" + s + "'");
        if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m))
            throw ValidationError("invalid calendar day: '" + s + "'");
        Day out;
        out.serial_ = to_serial(y, m, d);
        return out;
    }

    std::string to_iso() const {
        auto [y, m, d] = from_serial(serial_);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        return buf;
    }

    int month() const { return std::get<1>(from_serial(serial_)); }
    int day_of_month() const { return std::get<2>(from_serial(serial_)); }

    Day operator+(int days) const {
        Day out;
        out.serial_ = serial_ + days;
        return out;
    }
    Day operator-(int days) const { return *this + (-days); }
    long operator-(const Day& other) const { return serial_ - other.serial_; }

    auto operator<=>(const Day&) const = default;

private:
    static int days_in_month(int y, int m) {
        static const int lens[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (m == 2 && (y % 4 == 0 && (y % 100 != 0 || y % 400 == 0))) return 29;
        return lens[m - 1];
    }

    // Howard Hinnant's days_from_civil.
    static long to_serial(int y, int m, int d) {
        y -= m <= 2;
        const long era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<long>(doe) - 719468;
    }

    static std::tuple<int, int, int> from_serial(long z) {
        z += 719468;
        const long era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long y = static_cast<long>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
    }

    long serial_ = 0;
};

}  // namespace gadfa

#endif
