#pragma once

#include <cstdint>
#include <string>

#include "wam/core/error.hpp"

namespace wam::geo {

// Calendar date with day arithmetic (proleptic Gregorian).
struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    Date() = default;
    Date(int y, int m, int d) : year(y), month(m), day(d) {}

    // days since 1970-01-01 (Hinnant's civil-days algorithm)
    std::int64_t serial() const {
        int y = year;
        const int m = month, d = day;
        y -= m <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                             static_cast<unsigned>(d) - 1u;
        const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static Date from_serial(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        return Date(static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d));
    }

    Date plus_days(int n) const { return from_serial(serial() + n); }

    bool operator==(const Date& o) const {
        return year == o.year && month == o.month && day == o.day;
    }
    bool operator!=(const Date& o) const { return !(*this == o); }
    bool operator<(const Date& o) const { return serial() < o.serial(); }
    bool operator<=(const Date& o) const { return serial() <= o.serial(); }
    bool operator>(const Date& o) const { return o < *this; }
    bool operator>=(const Date& o) const { return o <= *this; }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return std::string(buf);
    }

    static Date parse(const std::string& s) {
        int y = 0, m = 0, d = 0;
        if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
            d > 31)
            throw Error("Date: cannot parse '" + s + "' (expected YYYY-MM-DD)");
        return Date(y, m, d);
    }
};

}  // namespace wam::geo
