#pragma once

#include "aescope/core/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace aescope {

/// On-disk element encoding; the in-memory representation is always double.
enum class DType : std::uint8_t { f64 = 1, f32 = 2, i32 = 3, u8 = 4 };

std::string to_string(DType d);
DType dtype_from_string(const std::string& s);
std::size_t dtype_size(DType d);

struct Channel {
    std::vector<std::size_t> shape;
    std::string units;
    DType dtype = DType::f64;
    std::vector<double> data;  // row-major

    std::size_t element_count() const;
    friend bool operator==(const Channel&, const Channel&) = default;
};

/// Canonical channel names.
namespace channels {
inline constexpr const char* topography = "channel1_topography";
inline constexpr const char* amplitude = "amplitude";
inline constexpr const char* phase = "phase";
inline constexpr const char* resonance = "resonance_hz";
inline constexpr const char* q_factor = "q_factor";
inline constexpr const char* raw_spectra = "raw_spectra";
inline constexpr const char* raw_phase = "raw_phase";
inline constexpr const char* frequency = "frequency_hz";
inline constexpr const char* positions = "positions_um";
inline constexpr const char* bias = "bias_v";
}  // namespace channels

/// Hierarchical channel container produced by acquisitions.
struct Dataset {
    std::string id;    // assigned by the repository that stores it
    std::string name;
    std::map<std::string, Channel> channels;
    json metadata = json::object();

    bool has(const std::string& channel) const { return channels.count(channel) != 0; }
    /// Throws Error(missing_channel).
    const Channel& channel(const std::string& name) const;

    bool aborted() const { return metadata.value("aborted", false); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Shapes match element counts; raw spectra imply a frequency axis.
/// Throws Error(shape_mismatch) or Error(missing_channel).
void validate(const Dataset& ds);

}  // namespace aescope
