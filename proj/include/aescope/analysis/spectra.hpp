#pragma once

#include "aescope/core/dataset.hpp"
#include "aescope/core/grid.hpp"
#include "aescope/core/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace aescope::analysis {

/// A stack of spectra, last axis = frequency bins. Shapes [H, W, F] and [N, F] both work.
struct SpectraView {
    std::span<const double> data;
    std::size_t pixels = 0;
    std::size_t bins = 0;

    /// Throws Error(shape_mismatch) unless the channel is at least 2-D and consistent.
    static SpectraView of(const Channel& raw);
    std::span<const double> spectrum(std::size_t pixel) const { return data.subspan(pixel * bins, bins); }
};

/// Per-bin arithmetic mean over all spectra. The phase array is zero-filled:
/// wrapped phases have no meaningful arithmetic mean.
BESpectrum mean_spectrum(const SpectraView& raw, std::span<const double> frequency_hz);

struct StrongestSpectrum {
    std::size_t pixel = 0;  // row-major index
    std::vector<double> amplitude;
    double peak = 0.0;
};

/// Pixel with the largest max-over-bins amplitude; ties go to the smallest index.
/// Throws Error(empty_input).
StrongestSpectrum strongest_spectrum(const SpectraView& raw);

/// Population standard deviation (divisor N) of all heights, no plane removal.
double roughness(std::span<const double> heights);
inline double roughness(const Image& topography) { return roughness(topography.values()); }

struct TimeSeries {
    std::vector<double> t_s;
    std::vector<double> volts;
};

/// Drive waveform over duration_ms at the given sample rate.
/// sinc: A·sinc(π·bw·(t−t0))·cos(2π·fc·(t−t0)), t0 = duration/2.
/// chirp: A·cos of a linear sweep from the lower to the upper band edge.
TimeSeries excitation_waveform(const BEParams& be, double sample_rate_hz);

/// Row-major reshape of a channel. Throws Error(missing_channel) or Error(count_mismatch).
Image extract_channel_image(const Dataset& ds, const std::string& channel, std::size_t rows, std::size_t cols);

}  // namespace aescope::analysis
