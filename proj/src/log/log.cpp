#include "aescope/log/log.hpp"

#include "aescope/core/clock.hpp"
#include "aescope/core/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace aescope::log {

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& why) {
    throw Error(ErrorCode::malformed_line, "log line " + std::to_string(line_no) + ": " + why,
                json{{"line", line_no}});
}

bool valid_status(const std::string& s) {
    if (s == "ok") return true;
    if (s.rfind("error:", 0) != 0 || s.size() == 6) return false;
    return s.find_first_of(" \t\r\n") == std::string::npos;
}

std::string dump(const json& j) {
    try {
        return j.dump();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::storage_failure, std::string("record is not serializable: ") + e.what());
    }
}

std::string number_text(const json& v) {
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
    return buf;
}

std::string value_text(const json& v) {
    if (v.is_number()) return number_text(v);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
    if (v.is_null()) return "none";
    if (v.is_array()) {
        const bool pairs = !v.empty() && std::all_of(v.begin(), v.end(), [](const json& e) {
            return e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number();
        });
        if (pairs && v.size() > 8) return std::to_string(v.size()) + " points";
        if (v.size() > 8 && v[0].is_number() && v.back().is_number()) {
            return std::to_string(v.size()) + " values from " + number_text(v[0]) + " to " + number_text(v.back());
        }
        if (v.size() > 8) return std::to_string(v.size()) + " entries";
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ", ";
            out += pairs ? "(" + number_text(v[i][0]) + ", " + number_text(v[i][1]) + ")" : value_text(v[i]);
        }
        return out + "]";
    }
    std::string out = "(";
    bool first = true;
    for (const auto& [k, sub] : v.items()) {
        if (!first) out += ", ";
        first = false;
        out += k + " " + value_text(sub);
    }
    return out + ")";
}

struct Suffix {
    const char* suffix;
    const char* unit;
};

constexpr Suffix kSuffixes[] = {{"_um_s", "\xC2\xB5m/s"}, {"_khz", "kHz"}, {"_hz", "Hz"}, {"_um", "\xC2\xB5m"},
                                {"_ms", "ms"},            {"_rad", "rad"}, {"_px", "px"}, {"_v", "V"},
                                {"_s", "s"}};

const std::map<std::string, std::string, std::less<>> kNamedUnits = {
    {"start", "\xC2\xB5m"}, {"end", "\xC2\xB5m"},         {"locations", "\xC2\xB5m"},
    {"center", "\xC2\xB5m"}, {"region", "\xC2\xB5m"},      {"bias_waveform", "V"},
};

bool ends_with(std::string_view s, std::string_view suf) {
    return s.size() > suf.size() && s.substr(s.size() - suf.size()) == suf;
}

std::string display_name(std::string_view param) {
    std::string name(param);
    for (const auto& s : kSuffixes) {
        if (ends_with(param, s.suffix)) {
            name.resize(param.size() - std::string_view(s.suffix).size());
            break;
        }
    }
    for (auto& c : name) {
        if (c == '_') c = ' ';
    }
    return name;
}

std::string describe_params(const json& params) {
    if (!params.is_object() || params.empty()) return "no parameters";
    std::string out;
    bool first = true;
    for (const auto& [k, v] : params.items()) {
        if (!first) out += ", ";
        first = false;
        out += display_name(k) + " " + value_text(v);
        const auto unit = unit_for(k);
        if (!unit.empty()) out += " " + unit;
    }
    return out;
}

std::string lead_for(const std::string& op) {
    static const std::map<std::string, std::string, std::less<>> leads = {
        {"define_be_parms", "Band-excitation parameters were set with"},
        {"tip_control", "The tip was moved with"},
        {"set_tip_bias", "The tip bias was set with"},
        {"set_io_config", "The IO configuration was set with"},
        {"do_line_scan", "A band-excitation line scan was acquired with"},
        {"raster_scan", "A band-excitation raster scan was acquired with"},
        {"do_beps_grid", "BEPS was measured on a grid with"},
        {"do_beps_specific", "BEPS was measured at specific locations with"},
        {"apply_pulse", "A DC pulse was applied at the current tip position with"},
        {"do_trajectory_scan", "A custom-trajectory scan was acquired with"},
    };
    if (auto it = leads.find(op); it != leads.end()) return it->second;
    return "Operation " + op + " was run with";
}

}  // namespace

std::string unit_for(std::string_view param) {
    if (auto it = kNamedUnits.find(param); it != kNamedUnits.end()) return it->second;
    for (const auto& s : kSuffixes) {
        if (ends_with(param, s.suffix)) return s.unit;
    }
    return "";
}

std::string format_record(const LogRecord& r) {
    if (!r.params.is_object()) throw Error(ErrorCode::invalid_params, "log params must be an object");
    std::string line = "{\"seq\":" + std::to_string(r.seq);
    line += ",\"ts\":" + dump(json(r.ts));
    line += ",\"op\":" + dump(json(r.op));
    line += ",\"params\":" + dump(r.params);
    line += ",\"status\":" + dump(json(r.status));
    line += ",\"dataset_ref\":" + (r.dataset_ref ? dump(json(*r.dataset_ref)) : std::string("null"));
    line += "}\n";
    return line;
}

LogRecord parse_record(std::string_view line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        malformed(line_no, std::string("not valid JSON (") + e.what() + ")");
    }
    if (!j.is_object() || j.size() != 6) malformed(line_no, "expected an object with exactly six fields");
    LogRecord r;
    try {
        const auto& seq = j.at("seq");
        if (!seq.is_number_integer() && !seq.is_number_unsigned()) malformed(line_no, "seq must be an integer");
        r.seq = seq.get<std::int64_t>();
        r.ts = j.at("ts").get<std::string>();
        r.op = j.at("op").get<std::string>();
        r.params = j.at("params");
        r.status = j.at("status").get<std::string>();
        const auto& ref = j.at("dataset_ref");
        if (!ref.is_null()) r.dataset_ref = ref.get<std::string>();
    } catch (const json::exception& e) {
        malformed(line_no, std::string("bad field: ") + e.what());
    }
    if (r.seq < 1) malformed(line_no, "seq must be >= 1");
    if (r.op.empty()) malformed(line_no, "op must be non-empty");
    if (!r.params.is_object()) malformed(line_no, "params must be an object");
    if (!valid_status(r.status)) malformed(line_no, "status must be 'ok' or 'error:<code>'");
    try {
        parse_iso8601_ms(r.ts);
    } catch (const Error&) {
        malformed(line_no, "ts is not an ISO-8601 UTC millisecond timestamp");
    }
    std::string canonical;
    try {
        canonical = format_record(r);
    } catch (const Error&) {
        malformed(line_no, "record cannot be re-serialized");
    }
    if (std::string_view(canonical).substr(0, canonical.size() - 1) != line) {
        malformed(line_no, "line is not in canonical form");
    }
    return r;
}

std::vector<LogRecord> parse_log(std::string_view text) {
    std::vector<LogRecord> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) malformed(line_no, "missing line terminator (truncated record)");
        LogRecord r = parse_record(text.substr(pos, nl - pos), line_no);
        const std::int64_t expected = out.empty() ? 1 : out.back().seq + 1;
        if (r.seq != expected) {
            throw Error(ErrorCode::sequence_violation,
                        "log line " + std::to_string(line_no) + ": seq " + std::to_string(r.seq) + ", expected " +
                            std::to_string(expected),
                        json{{"line", line_no}, {"seq", r.seq}, {"expected", expected}});
        }
        out.push_back(std::move(r));
        pos = nl + 1;
    }
    return out;
}

std::vector<LogRecord> parse_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::not_found, "cannot open log file " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_log(text);
}

ExperimentLog::ExperimentLog(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::storage_failure, "cannot open log file " + path.string());
}

void ExperimentLog::write(const LogRecord& r) {
    std::lock_guard lock(mu_);
    const std::int64_t expected = records_.empty() ? 1 : records_.back().seq + 1;
    if (r.seq != expected) {
        throw Error(ErrorCode::sequence_gap,
                    "record seq " + std::to_string(r.seq) + " does not follow " + std::to_string(expected - 1),
                    json{{"seq", r.seq}, {"expected", expected}});
    }
    const std::string line = format_record(r);
    if (path_) {
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.flush();
        if (!out_) throw Error(ErrorCode::storage_failure, "write to " + path_->string() + " failed");
    }
    records_.push_back(r);
}

LogRecord ExperimentLog::append(std::string op, json params, std::string status,
                                       std::optional<std::string> dataset_ref, std::string ts) {
    LogRecord r;
    r.seq = last_seq() + 1;
    r.ts = std::move(ts);
    r.op = std::move(op);
    r.params = std::move(params);
    r.status = std::move(status);
    r.dataset_ref = std::move(dataset_ref);
    write(r);
    return r;
}

std::vector<LogRecord> ExperimentLog::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t ExperimentLog::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::int64_t ExperimentLog::last_seq() const {
    std::lock_guard lock(mu_);
    return records_.empty() ? 0 : records_.back().seq;
}

std::string ExperimentLog::text() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& r : records_) out += format_record(r);
    return out;
}

std::string summarize_log(const std::vector<LogRecord>& records) {
    if (records.empty()) return "No operations were recorded.";
    std::ostringstream os;
    for (const auto& r : records) {
        os << "Step " << r.seq << " (" << r.ts << "): " << lead_for(r.op) << " " << describe_params(r.params) << ".";
        if (!r.ok()) os << " It failed with error " << r.status.substr(6) << ".";
        if (r.dataset_ref) os << " Data were saved as " << *r.dataset_ref << ".";
        os << "\n";
    }
    return os.str();
}

}  // namespace aescope::log
