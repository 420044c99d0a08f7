#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace aescope {

// Stable machine-readable codes. The string form appears in log records
// ("error:<code>") and in gateway error payloads.
enum class ErrorCode {
    invalid_config,
    invalid_value,
    out_of_window,
    range_exceeded,
    be_undefined,
    empty_bias,
    empty_locations,
    invalid_region,
    radius_nonpositive,
    too_few_samples,
    invalid_params,
    trajectory_invalid,
    non_finite,
    no_peak,
    shape_mismatch,
    empty_input,
    missing_channel,
    count_mismatch,
    syntax_error,
    unknown_field,
    duplicate_id,
    binding_error,
    step_failed,
    sequence_gap,
    storage_failure,
    malformed_line,
    sequence_violation,
    empty_guideline,
    client_unreachable,
    unparseable_reply,
    not_found,
    corrupt_channel,
    busy,
    unauthorized,
    not_approved,
    unknown_op,
};

std::string_view to_string(ErrorCode code);
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json data = nullptr)
        : std::runtime_error(message), code_(code), data_(std::move(data)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::json& data() const noexcept { return data_; }

private:
    ErrorCode code_;
    nlohmann::json data_;
};

}  // namespace aescope
