#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aescope {

using json = nlohmann::json;

struct Point {
    double x_um = 0.0;
    double y_um = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle in sample coordinates, [x0, x1] × [y0, y1].
struct Region {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    friend bool operator==(const Region&, const Region&) = default;
};

enum class ExcitationWaveform { sinc, chirp };

/// Band-excitation drive settings. Seven fields, each with a default.
struct BEParams {
    double center_frequency_khz = 350.0;
    double band_width_khz = 60.0;
    double amplitude_v = 1.0;
    int num_bins = 256;
    int repeats = 4;
    double duration_ms = 4.0;
    ExcitationWaveform waveform = ExcitationWaveform::sinc;

    double f_low_hz() const { return (center_frequency_khz - band_width_khz / 2.0) * 1e3; }
    double f_high_hz() const { return (center_frequency_khz + band_width_khz / 2.0) * 1e3; }

    friend bool operator==(const BEParams&, const BEParams&) = default;
};

/// Any subset of the BEParams fields; unset fields resolve to defaults.
struct BEParamsPartial {
    std::optional<double> center_frequency_khz;
    std::optional<double> band_width_khz;
    std::optional<double> amplitude_v;
    std::optional<int> num_bins;
    std::optional<int> repeats;
    std::optional<double> duration_ms;
    std::optional<ExcitationWaveform> waveform;

    BEParams resolve() const;
};

/// Throws Error(invalid_value) when an invariant is broken.
void validate(const BEParams& be);

struct IOConfig {
    double sample_rate_hz = 4.0e6;
    double output_range_v = 10.0;
    std::vector<std::string> channels{"amplitude", "phase", "topography"};
    friend bool operator==(const IOConfig&, const IOConfig&) = default;
};

void validate(const IOConfig& io);

struct SHOParams {
    double a0 = 1.0;
    double f0_hz = 350.0e3;
    double q_factor = 120.0;
    double phase_offset_rad = 0.0;
    friend bool operator==(const SHOParams&, const SHOParams&) = default;
};

bool satisfies_invariants(const SHOParams& p);

struct BESpectrum {
    std::vector<double> frequency_hz;
    std::vector<double> amplitude;
    std::vector<double> phase_rad;
    std::size_t size() const { return frequency_hz.size(); }
    friend bool operator==(const BESpectrum&, const BESpectrum&) = default;
};

/// Evenly spaced, endpoint-inclusive frequency axis across the BE band.
std::vector<double> frequency_axis(const BEParams& be);

std::string to_string(ExcitationWaveform w);
ExcitationWaveform waveform_from_string(const std::string& s);

// JSON forms. Points are [x, y]; regions are [x0, y0, x1, y1].
void to_json(json& j, const Point& p);
void from_json(const json& j, Point& p);
void to_json(json& j, const Region& r);
void from_json(const json& j, Region& r);
void to_json(json& j, const BEParams& be);
void from_json(const json& j, BEParams& be);
void from_json(const json& j, BEParamsPartial& be);
void to_json(json& j, const IOConfig& io);
void from_json(const json& j, IOConfig& io);
void to_json(json& j, const SHOParams& p);
void to_json(json& j, const BESpectrum& s);
void from_json(const json& j, BESpectrum& s);

}  // namespace aescope
