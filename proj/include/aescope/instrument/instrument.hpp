#pragma once

#include "aescope/core/clock.hpp"
#include "aescope/core/types.hpp"
#include "aescope/instrument/sample.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace aescope::instrument {

/// Damped-harmonic-oscillator amplitude response at frequency f (drive-normalized).
double sho_amplitude(double f_hz, const SHOParams& p);
/// SHO phase lag, -atan2(f0·f/Q, f0² - f²), in (-π, 0].
double sho_phase(double f_hz, const SHOParams& p);

enum class Status { idle, busy };

struct InstrumentState {
    double tip_x_um = 0.0;
    double tip_y_um = 0.0;
    double tip_bias_v = 0.0;
    std::optional<BEParams> be;  // unset until define_be_parms
    IOConfig io;
    Status status = Status::idle;
};

/// Everything needed to build an instrument besides the seed.
struct InstrumentConfig {
    SampleConfig sample;
    IOConfig io;
    double max_scan_speed_um_s = 2000.0;
    InstrumentClock::Mode clock_mode = InstrumentClock::Mode::simulated;
    std::int64_t clock_start_ms = InstrumentClock::kDefaultStartMs;
};

void to_json(json& j, const InstrumentConfig& cfg);
void to_json(json& j, const InstrumentState& s);
void from_json(const json& j, InstrumentConfig& cfg);

struct SwitchReport {
    double radius_um = 0.0;
    std::size_t pixels_flipped = 0;
};

void to_json(json& j, const SwitchReport& r);

struct BepsLoop {
    std::vector<double> bias_v;
    std::vector<BESpectrum> spectra;        // one off-field spectrum per bias step
    std::vector<std::int8_t> states;        // hysteron state after each step
};

/// Seeded simulation of a band-excitation PFM microscope. A plain value type:
/// copies are independent instruments in identical states.
class VirtualInstrument {
public:
    VirtualInstrument(std::uint64_t seed, const InstrumentConfig& config);

    const SampleModel& sample() const { return sample_; }
    const InstrumentConfig& config() const { return config_; }
    const InstrumentState& state() const { return state_; }
    InstrumentState& state() { return state_; }
    InstrumentClock& clock() { return clock_; }
    const InstrumentClock& clock() const { return clock_; }
    std::uint64_t seed() const { return sample_.seed; }
    std::uint64_t measurement_count() const { return measurement_counter_; }

    bool inside(double x_um, double y_um) const;
    /// Pixel containing the point; throws Error(out_of_window).
    PixelIndex pixel_at(double x_um, double y_um) const;

    BESpectrum measure_be_spectrum(double x_um, double y_um, const BEParams& be);
    SwitchReport apply_dc_pulse_at(double x_um, double y_um, double volts, double duration_ms);
    BepsLoop beps_at(double x_um, double y_um, std::span<const double> bias_v, const BEParams& be);
    double topography_at(double x_um, double y_um) const;

    /// Switching radius r0·sqrt(|v|/Vc - 1), or 0 at or below the coercive voltage.
    double switch_radius_um(double volts) const;

    /// FNV-1a digest over mutable state (polarization, tip, settings, counters).
    std::uint64_t state_hash() const;

private:
    void require_inside(double x_um, double y_um) const;
    void require_in_range(double volts) const;
    BESpectrum spectrum_for(PixelIndex px, const BEParams& be);

    InstrumentConfig config_;
    SampleModel sample_;
    InstrumentState state_;
    InstrumentClock clock_;
    std::uint64_t measurement_counter_ = 0;
};

}  // namespace aescope::instrument
