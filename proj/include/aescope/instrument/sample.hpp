#pragma once

#include "aescope/core/grid.hpp"
#include "aescope/core/types.hpp"

#include <cstdint>

namespace aescope::instrument {

/// Initial polarization layout of the synthetic ferroelectric.
enum class DomainPattern {
    random,      // sign of smoothed seeded white noise
    two_domain,  // left half +1, right half -1
    uniform,     // +1 everywhere
};

struct SampleConfig {
    std::size_t rows = 64;
    std::size_t cols = 64;
    double extent_um = 20.0;
    DomainPattern pattern = DomainPattern::random;

    double a0 = 1.0;
    double f0_hz = 350.0e3;
    double q_factor = 120.0;
    double f0_spread_rel = 0.02;  // per-pixel f0 drawn uniformly in ±spread
    double phase_offset_rad = 0.0;

    double coercive_v = 3.0;
    double switch_radius0_um = 0.1;
    double noise_rel = 0.02;

    int num_bumps = 12;
    double bump_height_um = 0.05;
    double topo_noise_um = 0.001;

    friend bool operator==(const SampleConfig&, const SampleConfig&) = default;
};

/// Throws Error(invalid_config).
void validate(const SampleConfig& cfg);

struct SampleModel {
    SampleConfig config;
    std::uint64_t seed = 0;
    Grid<std::int8_t> polarization;  // exactly ±1
    Image topography_um;
    Grid<SHOParams> sho;

    double pixel_width_um() const { return config.extent_um / static_cast<double>(config.cols); }
    double pixel_height_um() const { return config.extent_um / static_cast<double>(config.rows); }
    Point pixel_center(PixelIndex p) const;
    /// Region whose corners are the first and last pixel centers; a raster with
    /// rows×cols points over it samples every pixel exactly once.
    Region pixel_center_region() const;
};

SampleModel generate_sample(std::uint64_t seed, const SampleConfig& cfg);

std::string to_string(DomainPattern p);
void to_json(json& j, const SampleConfig& cfg);
void from_json(const json& j, SampleConfig& cfg);

}  // namespace aescope::instrument
