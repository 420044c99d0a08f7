#pragma once

#include "aescope/core/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aescope::trajectory {

/// Timed X/Y path for the tip. Positions only: tip bias is instrument state.
struct ScanTrajectory {
    std::vector<Point> samples;
    double sample_rate_hz = 1000.0;
    bool closed = false;
    friend bool operator==(const ScanTrajectory&, const ScanTrajectory&) = default;
};

/// Circle with oscillating radius: r(θ) = r0 + amp·sin(petals·θ).
struct FlowerParams {
    Point center{10.0, 10.0};
    double r0_um = 4.0;
    double amp_um = 1.0;
    int petals = 6;
    int n_samples = 512;
    double sample_rate_hz = 1000.0;
};

enum class SpiralMode { constant_angular_velocity, constant_linear_velocity };

/// Archimedean spiral r(θ) = pitch·θ/2π out to r_max.
struct SpiralParams {
    Point center{10.0, 10.0};
    double r_max_um = 5.0;
    double pitch_um = 0.5;
    SpiralMode mode = SpiralMode::constant_angular_velocity;
    double sample_rate_hz = 1000.0;
    int samples_per_turn = 128;
};

struct RasterParams {
    Region region{0.0, 0.0, 1.0, 1.0};
    int lines = 64;
    int pts_per_line = 64;
    double sample_rate_hz = 1000.0;
    std::optional<Region> window;  // when set, the region must lie inside it
};

ScanTrajectory flower_waveform(const FlowerParams& p);
ScanTrajectory spiral_waveform(const SpiralParams& p);
/// Serpentine: even lines run x0→x1, odd lines x1→x0.
ScanTrajectory raster_waveform(const RasterParams& p);

enum class ViolationKind { out_of_window, speed };

struct Violation {
    std::size_t index = 0;  // sample index; for speed, the second sample of the pair
    ViolationKind kind = ViolationKind::out_of_window;
    double value = 0.0;     // offending speed (um/s) for speed violations
    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every out-of-window sample and every over-speed consecutive pair. Empty means ok.
std::vector<Violation> validate_trajectory(const ScanTrajectory& t, const Region& window, double max_speed_um_s);

/// "x_um,y_um" per line, 9 significant digits, '\n'-terminated, no header.
std::string to_csv(const ScanTrajectory& t);

std::string to_string(SpiralMode m);
std::string to_string(ViolationKind k);

void to_json(json& j, const ScanTrajectory& t);
void from_json(const json& j, ScanTrajectory& t);
void to_json(json& j, const Violation& v);
void from_json(const json& j, FlowerParams& p);
void from_json(const json& j, SpiralParams& p);
void to_json(json& j, const FlowerParams& p);
void to_json(json& j, const SpiralParams& p);

}  // namespace aescope::trajectory
