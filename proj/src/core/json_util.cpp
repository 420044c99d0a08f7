#include "aescope/core/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace aescope::jsonutil {

namespace {

[[noreturn]] void bad(std::string_view key, const std::string& why) {
    throw Error(ErrorCode::invalid_params, "parameter '" + std::string(key) + "' " + why,
                json{{"param", std::string(key)}});
}

}  // namespace

void require_object(const json& j, std::string_view context) {
    if (!j.is_object()) {
        throw Error(ErrorCode::invalid_params, std::string(context) + ": expected an object");
    }
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
    require_object(j, context);
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw Error(ErrorCode::unknown_field,
                        std::string(context) + ": unknown parameter '" + item.key() + "'",
                        json{{"param", item.key()}});
        }
    }
}

bool is_integral(const json& v) {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9.0e15;
    }
    return false;
}

double number(const json& j, std::string_view key) {
    auto v = optional_number(j, key);
    if (!v) bad(key, "is required");
    return *v;
}

std::optional<double> optional_number(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) bad(key, "must be a number");
    const double d = it->get<double>();
    if (!std::isfinite(d)) bad(key, "must be finite");
    return d;
}

long long integer(const json& j, std::string_view key) {
    auto v = optional_integer(j, key);
    if (!v) bad(key, "is required");
    return *v;
}

std::optional<long long> optional_integer(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!is_integral(*it)) bad(key, "must be an integer");
    if (it->is_number_float()) return static_cast<long long>(it->get<double>());
    return it->get<long long>();
}

std::string string(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) bad(key, "must be a string");
    return it->get<std::string>();
}

bool boolean(const json& j, std::string_view key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) bad(key, "must be a boolean");
    return it->get<bool>();
}

}  // namespace aescope::jsonutil
