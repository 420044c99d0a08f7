#include "aescope/analysis/spectra.hpp"

#include "aescope/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace aescope::analysis {

SpectraView SpectraView::of(const Channel& raw) {
    if (raw.shape.size() < 2 || raw.element_count() != raw.data.size()) {
        throw Error(ErrorCode::shape_mismatch, "spectra must be an array of shape [..., bins]");
    }
    SpectraView v;
    v.data = raw.data;
    v.bins = raw.shape.back();
    v.pixels = v.bins == 0 ? 0 : raw.data.size() / v.bins;
    return v;
}

BESpectrum mean_spectrum(const SpectraView& raw, std::span<const double> frequency_hz) {
    if (raw.bins != frequency_hz.size() || raw.data.size() != raw.pixels * raw.bins) {
        throw Error(ErrorCode::shape_mismatch, "spectra bin count does not match the frequency axis");
    }
    if (raw.pixels == 0) throw Error(ErrorCode::empty_input, "no spectra to average");
    BESpectrum out;
    out.frequency_hz.assign(frequency_hz.begin(), frequency_hz.end());
    out.amplitude.assign(raw.bins, 0.0);
    out.phase_rad.assign(raw.bins, 0.0);
    for (std::size_t p = 0; p < raw.pixels; ++p) {
        const auto s = raw.spectrum(p);
        for (std::size_t k = 0; k < raw.bins; ++k) out.amplitude[k] += s[k];
    }
    for (auto& a : out.amplitude) a /= static_cast<double>(raw.pixels);
    return out;
}

StrongestSpectrum strongest_spectrum(const SpectraView& raw) {
    if (raw.pixels == 0 || raw.bins == 0) throw Error(ErrorCode::empty_input, "no spectra to search");
    StrongestSpectrum best;
    best.peak = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < raw.pixels; ++p) {
        const auto s = raw.spectrum(p);
        double peak = s[0];
        for (double v : s) peak = std::max(peak, v);
        if (peak > best.peak) {
            best.peak = peak;
            best.pixel = p;
        }
    }
    const auto s = raw.spectrum(best.pixel);
    best.amplitude.assign(s.begin(), s.end());
    return best;
}

double roughness(std::span<const double> heights) {
    if (heights.empty()) return 0.0;
    // Deviations from the first sample keep a flat field at exactly zero.
    const double ref = heights.front();
    double mean = 0.0;
    for (double h : heights) mean += h - ref;
    mean /= static_cast<double>(heights.size());
    double ss = 0.0;
    for (double h : heights) ss += (h - ref - mean) * (h - ref - mean);
    return std::sqrt(ss / static_cast<double>(heights.size()));
}

TimeSeries excitation_waveform(const BEParams& be, double sample_rate_hz) {
    validate(be);
    if (!(sample_rate_hz > 2.0 * be.f_high_hz())) {
        throw Error(ErrorCode::invalid_params, "sample rate must exceed twice the upper band edge");
    }
    const double duration = be.duration_ms * 1e-3;
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate_hz));
    const double t0 = duration / 2.0;
    const double bw = be.band_width_khz * 1e3;
    const double fc = be.center_frequency_khz * 1e3;
    const double f_lo = be.f_low_hz();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    TimeSeries ts;
    ts.t_s.resize(n);
    ts.volts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        ts.t_s[i] = t;
        if (be.waveform == ExcitationWaveform::sinc) {
            const double tau = t - t0;
            const double x = std::numbers::pi * bw * tau;
            const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
            ts.volts[i] = be.amplitude_v * sinc * std::cos(two_pi * fc * tau);
        } else {
            ts.volts[i] = be.amplitude_v * std::cos(two_pi * (f_lo * t + 0.5 * bw * t * t / duration));
        }
    }
    return ts;
}

Image extract_channel_image(const Dataset& ds, const std::string& channel, std::size_t rows, std::size_t cols) {
    const Channel& ch = ds.channel(channel);
    if (ch.data.size() != rows * cols) {
        throw Error(ErrorCode::count_mismatch,
                    "channel '" + channel + "' has " + std::to_string(ch.data.size()) + " elements, cannot reshape to " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    }
    return Image(rows, cols, ch.data);
}

}  // namespace aescope::analysis
