#include "aescope/core/clock.hpp"
#include "aescope/core/error.hpp"
#include "aescope/log/log.hpp"

#include "random_records.hpp"
#include "tmpdir.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>

using namespace aescope;
using namespace aescope::log;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invalid_value;
}

}  // namespace

TEST_CASE("record lines have the canonical field order", "[log]") {
    LogRecord r;
    r.seq = 3;
    r.ts = "2024-01-01T00:00:01.024Z";
    r.op = "tip_control";
    r.params = {{"y_um", 5.0}, {"x_um", 10.0}, {"speed_um_s", 10.0}};
    CHECK(format_record(r) ==
          "{\"seq\":3,\"ts\":\"2024-01-01T00:00:01.024Z\",\"op\":\"tip_control\",\"params\":{\"speed_um_s\":10.0,"
          "\"x_um\":10.0,\"y_um\":5.0},\"status\":\"ok\",\"dataset_ref\":null}\n");
    r.dataset_ref = "ds-000004";
    r.status = "error:out_of_window";
    const auto line = format_record(r);
    CHECK(line.find("\"status\":\"error:out_of_window\",\"dataset_ref\":\"ds-000004\"}") != std::string::npos);
}

TEST_CASE("parse and write are inverse on 1000 random records", "[log][property]") {
    const auto records = fixtures::random_records(2024, 1000);
    std::string text;
    for (const auto& r : records) text += format_record(r);
    const auto parsed = parse_log(text);
    REQUIRE(parsed.size() == records.size());
    CHECK(parsed == records);
    std::string again;
    for (const auto& r : parsed) again += format_record(r);
    CHECK(again == text);
}

TEST_CASE("non-canonical lines are rejected", "[log]") {
    LogRecord r;
    r.seq = 1;
    r.ts = "2024-01-01T00:00:00.000Z";
    r.op = "set_tip_bias";
    r.params = {{"voltage_v", 2.0}};
    std::string line = format_record(r);
    line.pop_back();
    CHECK_NOTHROW(parse_record(line));

    const std::vector<std::string> bad{
        line + " ",
        "{\"ts\":\"2024-01-01T00:00:00.000Z\",\"seq\":1,\"op\":\"set_tip_bias\",\"params\":{\"voltage_v\":2.0},"
        "\"status\":\"ok\",\"dataset_ref\":null}",
        "{\"seq\":1,\"ts\":\"2024-01-01T00:00:00.000Z\",\"op\":\"set_tip_bias\",\"params\":{\"voltage_v\":2},"
        "\"status\":\"ok\",\"dataset_ref\":null,\"extra\":1}",
        "{\"seq\":1,\"ts\":\"2024-01-01 00:00:00\",\"op\":\"set_tip_bias\",\"params\":{},\"status\":\"ok\","
        "\"dataset_ref\":null}",
        "{\"seq\":0,\"ts\":\"2024-01-01T00:00:00.000Z\",\"op\":\"set_tip_bias\",\"params\":{},\"status\":\"ok\","
        "\"dataset_ref\":null}",
        "{\"seq\":1,\"ts\":\"2024-01-01T00:00:00.000Z\",\"op\":\"set_tip_bias\",\"params\":{},\"status\":\"failed\","
        "\"dataset_ref\":null}",
        "{\"seq\":1,\"ts\":\"2024-01-01T00:00:00.000Z\",\"op\":\"set_tip_bias\",\"params\":[],\"status\":\"ok\","
        "\"dataset_ref\":null}",
        "not json",
    };
    for (const auto& b : bad) {
        INFO(b);
        CHECK(code_of([&] { parse_record(b); }) == ErrorCode::malformed_line);
    }
}

TEST_CASE("log text must be contiguous and newline-terminated", "[log]") {
    auto records = fixtures::random_records(5, 3);
    std::string text;
    for (const auto& r : records) text += format_record(r);
    CHECK(code_of([&] { parse_log(text.substr(0, text.size() - 1)); }) == ErrorCode::malformed_line);
    records[2].seq = 4;
    std::string gap;
    for (const auto& r : records) gap += format_record(r);
    CHECK(code_of([&] { parse_log(gap); }) == ErrorCode::sequence_violation);
    CHECK(parse_log("").empty());
}

TEST_CASE("experiment log writes through to its file", "[log]") {
    TempDir tmp;
    const auto path = tmp / "run.log";
    ExperimentLog log(path);
    const auto records = fixtures::random_records(9, 20);
    for (const auto& r : records) log.write(r);
    CHECK(parse_log_file(path) == records);
    CHECK(log.text() == [&] {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }());

    auto late = records.back();
    late.seq += 2;
    CHECK(code_of([&] { log.write(late); }) == ErrorCode::sequence_gap);
    const auto appended = log.append("set_tip_bias", {{"voltage_v", 1.5}}, "ok", std::nullopt, records.back().ts);
    CHECK(appended.seq == 21);
    CHECK(log.last_seq() == 21);
}

TEST_CASE("summary is one deterministic sentence per record with units", "[log]") {
    LogRecord a;
    a.seq = 1;
    a.ts = "2024-01-01T00:00:00.000Z";
    a.op = "tip_control";
    a.params = {{"x_um", 10.0}, {"y_um", 5.0}, {"speed_um_s", 10.0}};
    LogRecord b;
    b.seq = 2;
    b.ts = "2024-01-01T00:00:01.000Z";
    b.op = "apply_pulse";
    b.params = {{"voltage_v", 12.0}, {"duration_ms", 10.0}};
    b.status = "error:range_exceeded";
    const std::string expected =
        "Step 1 (2024-01-01T00:00:00.000Z): The tip was moved with speed 10 \xC2\xB5m/s, x 10 \xC2\xB5m, y 5 "
        "\xC2\xB5m.\n"
        "Step 2 (2024-01-01T00:00:01.000Z): A DC pulse was applied at the current tip position with duration 10 ms, "
        "voltage 12 V. It failed with error range_exceeded.\n";
    CHECK(summarize_log({a, b}) == expected);
    CHECK(summarize_log({}) == "No operations were recorded.");
    CHECK(unit_for("center_frequency_khz") == "kHz");
    CHECK(unit_for("num_bins").empty());
}
