#include "aescope/instrument/instrument.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"
#include "aescope/instrument/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

namespace aescope::instrument {

namespace {

constexpr std::uint64_t kMeasurementStream = 0x4E01;

class BusyGuard {
public:
    explicit BusyGuard(InstrumentState& s) : state_(s) { state_.status = Status::busy; }
    ~BusyGuard() { state_.status = Status::idle; }
    BusyGuard(const BusyGuard&) = delete;
    BusyGuard& operator=(const BusyGuard&) = delete;

private:
    InstrumentState& state_;
};

struct Fnv1a {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    }
    void f64(double v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
};

std::string describe(double x, double y) {
    std::ostringstream os;
    os << "(" << x << ", " << y << ") um";
    return os.str();
}

}  // namespace

double sho_amplitude(double f_hz, const SHOParams& p) {
    const double f0sq = p.f0_hz * p.f0_hz;
    const double re = f0sq - f_hz * f_hz;
    const double im = p.f0_hz * f_hz / p.q_factor;
    return p.a0 * f0sq / std::sqrt(re * re + im * im);
}

double sho_phase(double f_hz, const SHOParams& p) {
    return -std::atan2(p.f0_hz * f_hz / p.q_factor, p.f0_hz * p.f0_hz - f_hz * f_hz);
}

VirtualInstrument::VirtualInstrument(std::uint64_t seed, const InstrumentConfig& config)
    : config_(config),
      sample_(generate_sample(seed, config.sample)),
      clock_(config.clock_mode, config.clock_start_ms) {
    validate(config.io);
    if (!(config.max_scan_speed_um_s > 0.0)) {
        throw Error(ErrorCode::invalid_config, "max_scan_speed_um_s must be > 0");
    }
    state_.io = config.io;
}

bool VirtualInstrument::inside(double x_um, double y_um) const {
    const double e = sample_.config.extent_um;
    return std::isfinite(x_um) && std::isfinite(y_um) && x_um >= 0.0 && x_um <= e && y_um >= 0.0 && y_um <= e;
}

void VirtualInstrument::require_inside(double x_um, double y_um) const {
    if (!inside(x_um, y_um)) {
        throw Error(ErrorCode::out_of_window,
                    "position " + describe(x_um, y_um) + " is outside the scan window [0, " +
                        std::to_string(sample_.config.extent_um) + "] um",
                    json{{"x_um", x_um}, {"y_um", y_um}});
    }
}

void VirtualInstrument::require_in_range(double volts) const {
    if (!std::isfinite(volts) || std::abs(volts) > state_.io.output_range_v) {
        throw Error(ErrorCode::range_exceeded,
                    "voltage " + std::to_string(volts) + " V exceeds output range +/-" +
                        std::to_string(state_.io.output_range_v) + " V",
                    json{{"volts", volts}, {"output_range_v", state_.io.output_range_v}});
    }
}

PixelIndex VirtualInstrument::pixel_at(double x_um, double y_um) const {
    require_inside(x_um, y_um);
    const auto& cfg = sample_.config;
    auto index = [](double v, double extent, std::size_t n) {
        const auto i = static_cast<std::size_t>(std::floor(v / extent * static_cast<double>(n)));
        return std::min(i, n - 1);
    };
    return {index(y_um, cfg.extent_um, cfg.rows), index(x_um, cfg.extent_um, cfg.cols)};
}

BESpectrum VirtualInstrument::spectrum_for(PixelIndex px, const BEParams& be) {
    const SHOParams& sho = sample_.sho(px.row, px.col);
    const double pol_offset = sample_.polarization(px.row, px.col) > 0 ? 0.0 : std::numbers::pi;

    BESpectrum s;
    s.frequency_hz = frequency_axis(be);
    s.amplitude.resize(s.frequency_hz.size());
    s.phase_rad.resize(s.frequency_hz.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = s.frequency_hz[i];
        s.amplitude[i] = be.amplitude_v * sho_amplitude(f, sho);
        s.phase_rad[i] = pol_offset + sho_phase(f, sho) + sho.phase_offset_rad;
        peak = std::max(peak, s.amplitude[i]);
    }

    const std::uint64_t counter = measurement_counter_++;
    const double sigma = sample_.config.noise_rel * peak;
    if (sigma > 0.0) {
        auto rng = stream_engine(sample_.seed, kMeasurementStream, counter);
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& a : s.amplitude) a = std::max(0.0, a + noise(rng));
    }
    // Each acquisition occupies repeats × duration of drive time.
    clock_.advance_seconds(be.repeats * be.duration_ms * 1e-3);
    return s;
}

BESpectrum VirtualInstrument::measure_be_spectrum(double x_um, double y_um, const BEParams& be) {
    const PixelIndex px = pixel_at(x_um, y_um);
    validate(be);
    BusyGuard busy(state_);
    return spectrum_for(px, be);
}

double VirtualInstrument::switch_radius_um(double volts) const {
    const double vc = sample_.config.coercive_v;
    if (std::abs(volts) <= vc) return 0.0;
    return sample_.config.switch_radius0_um * std::sqrt(std::abs(volts) / vc - 1.0);
}

SwitchReport VirtualInstrument::apply_dc_pulse_at(double x_um, double y_um, double volts, double duration_ms) {
    const PixelIndex tip_px = pixel_at(x_um, y_um);
    require_in_range(volts);
    if (!(duration_ms > 0.0) || !std::isfinite(duration_ms)) {
        throw Error(ErrorCode::invalid_value, "pulse duration_ms must be > 0");
    }
    BusyGuard busy(state_);
    SwitchReport report;
    clock_.advance_seconds(duration_ms * 1e-3);
    if (std::abs(volts) <= sample_.config.coercive_v) return report;

    report.radius_um = switch_radius_um(volts);
    const std::int8_t target = volts > 0.0 ? 1 : -1;
    const double r2 = report.radius_um * report.radius_um;
    auto& pol = sample_.polarization;
    for (std::size_t r = 0; r < pol.rows(); ++r) {
        for (std::size_t c = 0; c < pol.cols(); ++c) {
            const Point p = sample_.pixel_center({r, c});
            const double dx = p.x_um - x_um;
            const double dy = p.y_um - y_um;
            // The pixel under the tip always switches; others when their center lies in the disk.
            const bool hit = (r == tip_px.row && c == tip_px.col) || dx * dx + dy * dy <= r2;
            if (hit && pol(r, c) != target) {
                pol(r, c) = target;
                ++report.pixels_flipped;
            }
        }
    }
    return report;
}

BepsLoop VirtualInstrument::beps_at(double x_um, double y_um, std::span<const double> bias_v, const BEParams& be) {
    const PixelIndex px = pixel_at(x_um, y_um);
    if (bias_v.empty()) throw Error(ErrorCode::empty_bias, "BEPS bias waveform is empty");
    for (double v : bias_v) require_in_range(v);
    validate(be);

    BusyGuard busy(state_);
    BepsLoop loop;
    loop.bias_v.assign(bias_v.begin(), bias_v.end());
    const double vc = sample_.config.coercive_v;
    auto& state = sample_.polarization(px.row, px.col);
    for (double v : bias_v) {
        const std::int8_t drive = v > 0.0 ? 1 : -1;
        if (std::abs(v) >= vc && drive != state) state = drive;
        loop.states.push_back(state);
        loop.spectra.push_back(spectrum_for(px, be));
    }
    return loop;
}

double VirtualInstrument::topography_at(double x_um, double y_um) const {
    const PixelIndex px = pixel_at(x_um, y_um);
    return sample_.topography_um(px.row, px.col);
}

std::uint64_t VirtualInstrument::state_hash() const {
    Fnv1a h;
    h.bytes(sample_.polarization.values().data(), sample_.polarization.size());
    h.f64(state_.tip_x_um);
    h.f64(state_.tip_y_um);
    h.f64(state_.tip_bias_v);
    if (state_.be) {
        h.f64(state_.be->center_frequency_khz);
        h.f64(state_.be->band_width_khz);
        h.f64(state_.be->amplitude_v);
        h.u64(static_cast<std::uint64_t>(state_.be->num_bins));
        h.u64(static_cast<std::uint64_t>(state_.be->repeats));
        h.f64(state_.be->duration_ms);
        h.u64(static_cast<std::uint64_t>(state_.be->waveform));
    }
    h.f64(state_.io.sample_rate_hz);
    h.f64(state_.io.output_range_v);
    for (const auto& c : state_.io.channels) h.bytes(c.data(), c.size());
    h.u64(measurement_counter_);
    h.u64(static_cast<std::uint64_t>(clock_.now_ms()));
    return h.h;
}

void to_json(json& j, const InstrumentConfig& cfg) {
    j = json{{"sample", cfg.sample},
             {"io", cfg.io},
             {"max_scan_speed_um_s", cfg.max_scan_speed_um_s},
             {"clock", cfg.clock_mode == InstrumentClock::Mode::simulated ? "simulated" : "wall"},
             {"clock_start", format_iso8601_ms(cfg.clock_start_ms)}};
}

void from_json(const json& j, InstrumentConfig& cfg) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"sample", "io", "max_scan_speed_um_s", "clock", "clock_start"}, "instrument config");
    InstrumentConfig out;
    if (j.contains("sample")) from_json(j["sample"], out.sample);
    if (j.contains("io")) from_json(j["io"], out.io);
    if (auto v = optional_number(j, "max_scan_speed_um_s")) out.max_scan_speed_um_s = *v;
    if (j.contains("clock")) {
        const auto mode = string(j, "clock");
        if (mode == "simulated") out.clock_mode = InstrumentClock::Mode::simulated;
        else if (mode == "wall") out.clock_mode = InstrumentClock::Mode::wall;
        else throw Error(ErrorCode::invalid_config, "clock must be 'simulated' or 'wall'");
    }
    if (j.contains("clock_start")) out.clock_start_ms = parse_iso8601_ms(string(j, "clock_start"));
    cfg = out;
}

void to_json(json& j, const SwitchReport& r) {
    j = json{{"radius_um", r.radius_um}, {"pixels_flipped", r.pixels_flipped}};
}

void to_json(json& j, const InstrumentState& s) {
    j = json{{"tip", Point{s.tip_x_um, s.tip_y_um}},
             {"tip_bias_v", s.tip_bias_v},
             {"be", s.be ? json(*s.be) : json(nullptr)},
             {"io", s.io},
             {"status", s.status == Status::idle ? "idle" : "busy"}};
}

}  // namespace aescope::instrument
