#include "aescope/core/error.hpp"
#include "aescope/instrument/instrument.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

using namespace aescope;
using namespace aescope::instrument;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

InstrumentConfig noiseless(DomainPattern pattern = DomainPattern::two_domain) {
    InstrumentConfig cfg;
    cfg.sample.pattern = pattern;
    cfg.sample.noise_rel = 0.0;
    cfg.sample.f0_spread_rel = 0.0;
    return cfg;
}

BEParams odd_bins() {
    BEParams be;
    be.num_bins = 257;  // bin 128 sits exactly on the 350 kHz center
    return be;
}

// Independent transfer function: H(f) = a0 f0^2 / (f0^2 - f^2 + i f0 f / Q).
std::complex<double> sho_response(double f, double a0, double f0, double q) {
    return a0 * f0 * f0 / std::complex<double>(f0 * f0 - f * f, f0 * f / q);
}

}  // namespace

TEST_CASE("SHO model matches the complex oscillator response", "[instrument]") {
    const SHOParams p{1.7, 340e3, 95.0, 0.0};
    for (double f = 300e3; f <= 380e3; f += 2.5e3) {
        const auto h = sho_response(f, p.a0, p.f0_hz, p.q_factor);
        CHECK_THAT(sho_amplitude(f, p), WithinRel(std::abs(h), 1e-12));
        CHECK_THAT(sho_phase(f, p), WithinAbs(std::arg(h), 1e-12));
    }
    CHECK_THAT(sho_amplitude(p.f0_hz, p), WithinRel(p.a0 * p.q_factor, 1e-12));
    CHECK_THAT(sho_phase(p.f0_hz, p), WithinAbs(-std::numbers::pi / 2, 1e-12));
}

TEST_CASE("noiseless resonance peak equals a0 times Q", "[instrument]") {
    VirtualInstrument inst(11, noiseless());
    const auto s = inst.measure_be_spectrum(2.0, 2.0, odd_bins());
    REQUIRE(s.frequency_hz[128] == 350e3);
    CHECK_THAT(s.amplitude[128], WithinRel(1.0 * 120.0, 1e-9));
}

TEST_CASE("opposite domains differ by pi in phase at every bin", "[instrument]") {
    VirtualInstrument inst(11, noiseless());
    const auto up = inst.measure_be_spectrum(2.0, 10.0, odd_bins());     // left half: +1
    const auto down = inst.measure_be_spectrum(18.0, 10.0, odd_bins());  // right half: -1
    for (std::size_t i = 0; i < up.size(); ++i) {
        CHECK_THAT(down.phase_rad[i] - up.phase_rad[i], WithinAbs(std::numbers::pi, 1e-9));
        CHECK(down.amplitude[i] == up.amplitude[i]);
    }
}

TEST_CASE("drive amplitude scales the response linearly", "[instrument]") {
    VirtualInstrument inst(11, noiseless());
    auto be = odd_bins();
    const auto a = inst.measure_be_spectrum(5, 5, be);
    be.amplitude_v = 2.5;
    const auto b = inst.measure_be_spectrum(5, 5, be);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(b.amplitude[i], WithinRel(2.5 * a.amplitude[i], 1e-12));
}

TEST_CASE("same seed gives the same sample and measurements", "[instrument]") {
    InstrumentConfig cfg;
    VirtualInstrument a(42, cfg);
    VirtualInstrument b(42, cfg);
    VirtualInstrument c(43, cfg);
    CHECK(a.sample().polarization == b.sample().polarization);
    CHECK(a.sample().topography_um == b.sample().topography_um);
    CHECK(a.sample().polarization != c.sample().polarization);
    CHECK(a.measure_be_spectrum(3, 4, BEParams{}) == b.measure_be_spectrum(3, 4, BEParams{}));
    CHECK(a.state_hash() == b.state_hash());
}

TEST_CASE("polarization is exactly plus or minus one", "[instrument]") {
    VirtualInstrument inst(5, InstrumentConfig{});
    int up = 0;
    for (auto v : inst.sample().polarization.values()) {
        REQUIRE((v == 1 || v == -1));
        up += v == 1;
    }
    CHECK(up > 0);
    CHECK(up < 64 * 64);
}

TEST_CASE("positions outside the window are rejected", "[instrument]") {
    VirtualInstrument inst(1, InstrumentConfig{});
    CHECK(inst.pixel_at(0, 0) == PixelIndex{0, 0});
    CHECK(inst.pixel_at(20, 20) == PixelIndex{63, 63});
    CHECK(inst.pixel_at(0.32, 0.3) == PixelIndex{0, 1});
    try {
        (void)inst.pixel_at(20.01, 3);
        FAIL("expected out_of_window");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::out_of_window);
    }
    CHECK_FALSE(inst.inside(std::nan(""), 1));
}

TEST_CASE("switching radius follows r0 sqrt(|V|/Vc - 1)", "[instrument]") {
    VirtualInstrument inst(1, InstrumentConfig{});
    CHECK(inst.switch_radius_um(3.0) == 0.0);
    CHECK(inst.switch_radius_um(-2.0) == 0.0);
    CHECK_THAT(inst.switch_radius_um(6.0), WithinRel(0.1, 1e-12));
    CHECK_THAT(inst.switch_radius_um(-9.0), WithinRel(0.1 * std::sqrt(2.0), 1e-12));
}

TEST_CASE("pulse switches exactly the pixels inside the disk plus the tip pixel", "[instrument]") {
    auto cfg = noiseless(DomainPattern::uniform);
    cfg.sample.switch_radius0_um = 1.0;
    VirtualInstrument inst(3, cfg);
    const double x = 10.1;
    const double y = 9.7;
    const auto report = inst.apply_dc_pulse_at(x, y, -9.0, 10.0);
    const double r = std::sqrt(2.0);
    CHECK_THAT(report.radius_um, WithinRel(r, 1e-12));

    std::size_t expected = 0;
    const auto tip = inst.pixel_at(x, y);
    for (std::size_t row = 0; row < 64; ++row) {
        for (std::size_t col = 0; col < 64; ++col) {
            const double cx = (col + 0.5) * 20.0 / 64;
            const double cy = (row + 0.5) * 20.0 / 64;
            const bool in = std::hypot(cx - x, cy - y) <= r || (PixelIndex{row, col} == tip);
            expected += in;
            CHECK(inst.sample().polarization(row, col) == (in ? -1 : 1));
        }
    }
    CHECK(report.pixels_flipped == expected);

    // Same polarity again: nothing left to flip.
    CHECK(inst.apply_dc_pulse_at(x, y, -9.0, 10.0).pixels_flipped == 0);
}

TEST_CASE("sub-coercive pulses leave the sample untouched", "[instrument]") {
    VirtualInstrument inst(3, noiseless(DomainPattern::uniform));
    const auto before = inst.sample().polarization;
    CHECK(inst.apply_dc_pulse_at(5, 5, -3.0, 10.0).pixels_flipped == 0);
    CHECK(inst.sample().polarization == before);
}

TEST_CASE("pulses beyond the output range are rejected", "[instrument]") {
    VirtualInstrument inst(3, InstrumentConfig{});
    try {
        inst.apply_dc_pulse_at(5, 5, 12.0, 10.0);
        FAIL("expected range_exceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::range_exceeded);
    }
}

TEST_CASE("BEPS loop follows the hysteron", "[instrument]") {
    VirtualInstrument inst(3, noiseless(DomainPattern::uniform));
    const std::vector<double> bias{1, 2, 4, 1, -1, -2, -4, -1, 0};
    const auto loop = inst.beps_at(5, 5, bias, BEParams{});
    const std::vector<std::int8_t> expected{1, 1, 1, 1, 1, 1, -1, -1, -1};
    CHECK(loop.states == expected);
    CHECK(loop.spectra.size() == bias.size());
    CHECK(inst.sample().polarization(inst.pixel_at(5, 5).row, inst.pixel_at(5, 5).col) == -1);
}

TEST_CASE("acquisitions advance the simulated clock", "[instrument]") {
    VirtualInstrument inst(3, InstrumentConfig{});
    const auto t0 = inst.clock().now_ms();
    inst.measure_be_spectrum(1, 1, BEParams{});  // 4 repeats x 4 ms
    CHECK(inst.clock().now_ms() - t0 == 16);
}

TEST_CASE("invalid sample configs are rejected", "[instrument]") {
    InstrumentConfig cfg;
    cfg.sample.rows = 0;
    CHECK_THROWS_AS(VirtualInstrument(1, cfg), Error);
    const json bad = {{"sample", {{"bogus", 1}}}};
    CHECK_THROWS_AS(bad.get<InstrumentConfig>(), Error);
    const auto parsed = json{{"sample", {{"switch_radius0_um", 0.5}}}, {"clock", "simulated"}}.get<InstrumentConfig>();
    CHECK(parsed.sample.switch_radius0_um == 0.5);
}
