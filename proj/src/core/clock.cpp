#include "aescope/core/clock.hpp"

#include "aescope/core/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace aescope {

namespace {

// Days-from-civil / civil-from-days (proleptic Gregorian), H. Hinnant.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::string format_iso8601_ms(std::int64_t epoch_ms) {
    using namespace std::chrono;
    const sys_time<milliseconds> tp{milliseconds{epoch_ms}};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss hms{tp - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
    return buf;
}

std::int64_t parse_iso8601_ms(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    char tail = 0;
    const std::string str(text);
    if (str.size() != 24 ||
        std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &y, &mo, &d, &h, &mi, &s, &ms, &tail) != 8 ||
        tail != 'Z' || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59) {
        throw Error(ErrorCode::invalid_value, "not an ISO-8601 UTC millisecond timestamp: '" + str + "'");
    }
    const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    const std::int64_t out = ((days * 24 + h) * 60 + mi) * 60000 + s * 1000 + ms;
    if (format_iso8601_ms(out) != str) {
        throw Error(ErrorCode::invalid_value, "invalid calendar date: '" + str + "'");
    }
    return out;
}

std::int64_t InstrumentClock::now_ms() const {
    if (mode_ == Mode::wall) {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
    return now_ms_;
}

void InstrumentClock::advance_seconds(double seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) return;
    carry_ms_ += seconds * 1000.0;
    const double whole = std::floor(carry_ms_);
    now_ms_ += static_cast<std::int64_t>(whole);
    carry_ms_ -= whole;
}

}  // namespace aescope
