#include "aescope/core/error.hpp"

#include <array>
#include <utility>

namespace aescope {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 36> kNames{{
    {ErrorCode::invalid_config, "invalid_config"},
    {ErrorCode::invalid_value, "invalid_value"},
    {ErrorCode::out_of_window, "out_of_window"},
    {ErrorCode::range_exceeded, "range_exceeded"},
    {ErrorCode::be_undefined, "be_undefined"},
    {ErrorCode::empty_bias, "empty_bias"},
    {ErrorCode::empty_locations, "empty_locations"},
    {ErrorCode::invalid_region, "invalid_region"},
    {ErrorCode::radius_nonpositive, "radius_nonpositive"},
    {ErrorCode::too_few_samples, "too_few_samples"},
    {ErrorCode::invalid_params, "invalid_params"},
    {ErrorCode::trajectory_invalid, "trajectory_invalid"},
    {ErrorCode::non_finite, "non_finite"},
    {ErrorCode::no_peak, "no_peak"},
    {ErrorCode::shape_mismatch, "shape_mismatch"},
    {ErrorCode::empty_input, "empty_input"},
    {ErrorCode::missing_channel, "missing_channel"},
    {ErrorCode::count_mismatch, "count_mismatch"},
    {ErrorCode::syntax_error, "syntax_error"},
    {ErrorCode::unknown_field, "unknown_field"},
    {ErrorCode::duplicate_id, "duplicate_id"},
    {ErrorCode::binding_error, "binding_error"},
    {ErrorCode::step_failed, "step_failed"},
    {ErrorCode::sequence_gap, "sequence_gap"},
    {ErrorCode::storage_failure, "storage_failure"},
    {ErrorCode::malformed_line, "malformed_line"},
    {ErrorCode::sequence_violation, "sequence_violation"},
    {ErrorCode::empty_guideline, "empty_guideline"},
    {ErrorCode::client_unreachable, "client_unreachable"},
    {ErrorCode::unparseable_reply, "unparseable_reply"},
    {ErrorCode::not_found, "not_found"},
    {ErrorCode::corrupt_channel, "corrupt_channel"},
    {ErrorCode::busy, "busy"},
    {ErrorCode::unauthorized, "unauthorized"},
    {ErrorCode::not_approved, "not_approved"},
    {ErrorCode::unknown_op, "unknown_op"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
    for (const auto& [c, name] : kNames) {
        if (c == code) return name;
    }
    return "unknown";
}

ErrorCode error_code_from_string(std::string_view name) {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    throw Error(ErrorCode::invalid_value, "unknown error code '" + std::string(name) + "'");
}

}  // namespace aescope
