#pragma once

#include "aescope/core/error.hpp"
#include "aescope/core/types.hpp"

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace aescope::jsonutil {

// Strict accessors for parameter objects. Failures throw
// Error(invalid_params) naming the offending key.

void require_object(const json& j, std::string_view context);
void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

double number(const json& j, std::string_view key);
std::optional<double> optional_number(const json& j, std::string_view key);
long long integer(const json& j, std::string_view key);
std::optional<long long> optional_integer(const json& j, std::string_view key);
std::string string(const json& j, std::string_view key);
bool boolean(const json& j, std::string_view key, bool fallback);

bool is_integral(const json& v);

}  // namespace aescope::jsonutil
