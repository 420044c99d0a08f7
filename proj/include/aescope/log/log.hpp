#pragma once

#include "aescope/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aescope::log {

struct LogRecord {
    std::int64_t seq = 0;    // 1-based, contiguous
    std::string ts;          // ISO-8601 UTC, millisecond precision
    std::string op;
    json params = json::object();
    std::string status = "ok";  // "ok" or "error:<code>"
    std::optional<std::string> dataset_ref;

    bool ok() const { return status == "ok"; }
    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// One canonical line including the trailing '\n':
/// {"seq":N,"ts":"..","op":"..","params":{sorted},"status":"..","dataset_ref":null|".."}
std::string format_record(const LogRecord& r);

/// Strict inverse of format_record for a single line without its '\n'.
/// Anything that does not re-serialize to the same bytes is rejected.
/// Throws Error(malformed_line) with data {line}.
LogRecord parse_record(std::string_view line, std::size_t line_no = 1);

/// Every record of a log text. Throws Error(malformed_line) or Error(sequence_violation).
std::vector<LogRecord> parse_log(std::string_view text);
std::vector<LogRecord> parse_log_file(const std::filesystem::path& path);

/// Append-only record sink. With a path, each record is written and flushed
/// before write() returns; without one the log lives in memory only.
class ExperimentLog {
public:
    ExperimentLog() = default;
    /// Opens (creating or truncating) `path`.
    explicit ExperimentLog(const std::filesystem::path& path);

    /// Throws Error(sequence_gap) unless r.seq == last seq + 1, Error(storage_failure) on I/O errors.
    void write(const LogRecord& r);
    /// Fills in the next seq and writes.
    LogRecord append(std::string op, json params, std::string status, std::optional<std::string> dataset_ref,
                            std::string ts);

    std::vector<LogRecord> records() const;
    std::size_t size() const;
    std::int64_t last_seq() const;
    /// Concatenated canonical lines.
    std::string text() const;
    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    mutable std::mutex mu_;
    std::vector<LogRecord> records_;
    std::optional<std::filesystem::path> path_;
    std::ofstream out_;
};

/// Deterministic English, one sentence per record, every parameter with units.
std::string summarize_log(const std::vector<LogRecord>& records);

/// Unit label derived from a parameter-name suffix ("_khz" -> "kHz"), or "".
std::string unit_for(std::string_view param);

}  // namespace aescope::log
