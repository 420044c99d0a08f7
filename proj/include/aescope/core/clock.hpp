#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aescope {

/// "YYYY-MM-DDTHH:MM:SS.mmmZ" for a UTC instant in milliseconds since the epoch.
std::string format_iso8601_ms(std::int64_t epoch_ms);

/// Inverse of format_iso8601_ms; throws Error(invalid_value) on any other layout.
std::int64_t parse_iso8601_ms(std::string_view text);

/// Instrument time. In simulated mode the clock starts at a configured instant
/// and advances only by simulated operation durations, so replays carry
/// identical timestamps. Wall mode reads the system clock.
class InstrumentClock {
public:
    enum class Mode { simulated, wall };

    explicit InstrumentClock(Mode mode = Mode::simulated, std::int64_t start_ms = kDefaultStartMs)
        : mode_(mode), now_ms_(start_ms) {}

    std::int64_t now_ms() const;
    std::string now_iso() const { return format_iso8601_ms(now_ms()); }

    /// Accumulates simulated time; sub-millisecond remainders carry over.
    void advance_seconds(double seconds);

    Mode mode() const { return mode_; }

    static constexpr std::int64_t kDefaultStartMs = 1704067200000;  // 2024-01-01T00:00:00Z

private:
    Mode mode_;
    std::int64_t now_ms_;
    double carry_ms_ = 0.0;
};

}  // namespace aescope
