#include "aescope/core/types.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace aescope {

namespace {

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::invalid_value, what);
}

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) invalid(std::string(name) + " must be > 0");
}

}  // namespace

BEParams BEParamsPartial::resolve() const {
    BEParams be;
    if (center_frequency_khz) be.center_frequency_khz = *center_frequency_khz;
    if (band_width_khz) be.band_width_khz = *band_width_khz;
    if (amplitude_v) be.amplitude_v = *amplitude_v;
    if (num_bins) be.num_bins = *num_bins;
    if (repeats) be.repeats = *repeats;
    if (duration_ms) be.duration_ms = *duration_ms;
    if (waveform) be.waveform = *waveform;
    return be;
}

void validate(const BEParams& be) {
    require_positive(be.center_frequency_khz, "center_frequency_khz");
    require_positive(be.band_width_khz, "band_width_khz");
    // A zero drive amplitude is a legal (silent) excitation.
    if (!std::isfinite(be.amplitude_v) || be.amplitude_v < 0.0) invalid("amplitude_v must be >= 0");
    if (be.num_bins < 8 || be.num_bins > 65536) invalid("num_bins must be in [8, 65536]");
    if (be.repeats <= 0 || be.repeats > 10000) invalid("repeats must be in [1, 10000]");
    require_positive(be.duration_ms, "duration_ms");
    if (be.center_frequency_khz - be.band_width_khz / 2.0 <= 0.0) {
        invalid("excitation band crosses zero (center - band_width/2 <= 0)");
    }
}

void validate(const IOConfig& io) {
    if (!std::isfinite(io.sample_rate_hz) || io.sample_rate_hz <= 0.0) {
        throw Error(ErrorCode::invalid_value, "sample_rate_hz must be > 0");
    }
    if (!std::isfinite(io.output_range_v) || io.output_range_v <= 0.0) {
        throw Error(ErrorCode::invalid_value, "output_range_v must be > 0");
    }
    std::set<std::string> seen;
    for (const auto& c : io.channels) {
        if (!seen.insert(c).second) {
            throw Error(ErrorCode::invalid_value, "duplicate IO channel '" + c + "'");
        }
    }
}

bool satisfies_invariants(const SHOParams& p) {
    return p.a0 > 0.0 && p.f0_hz > 0.0 && p.q_factor > 1.0 &&
           p.phase_offset_rad >= -std::numbers::pi && p.phase_offset_rad <= std::numbers::pi;
}

std::vector<double> frequency_axis(const BEParams& be) {
    const auto n = static_cast<std::size_t>(be.num_bins);
    std::vector<double> f(n);
    const double lo = be.f_low_hz();
    const double hi = be.f_high_hz();
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    f.back() = hi;
    return f;
}

std::string to_string(ExcitationWaveform w) {
    return w == ExcitationWaveform::sinc ? "sinc" : "chirp";
}

ExcitationWaveform waveform_from_string(const std::string& s) {
    if (s == "sinc") return ExcitationWaveform::sinc;
    if (s == "chirp") return ExcitationWaveform::chirp;
    throw Error(ErrorCode::invalid_value, "waveform must be 'sinc' or 'chirp', got '" + s + "'");
}

void to_json(json& j, const Point& p) { j = json::array({p.x_um, p.y_um}); }

void from_json(const json& j, Point& p) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw Error(ErrorCode::invalid_params, "point must be [x_um, y_um]");
    }
    p.x_um = j[0].get<double>();
    p.y_um = j[1].get<double>();
}

void to_json(json& j, const Region& r) { j = json::array({r.x0, r.y0, r.x1, r.y1}); }

void from_json(const json& j, Region& r) {
    if (!j.is_array() || j.size() != 4) {
        throw Error(ErrorCode::invalid_params, "region must be [x0, y0, x1, y1]");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw Error(ErrorCode::invalid_params, "region must be numeric");
    }
    r = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const BEParams& be) {
    j = json{{"center_frequency_khz", be.center_frequency_khz},
             {"band_width_khz", be.band_width_khz},
             {"amplitude_v", be.amplitude_v},
             {"num_bins", be.num_bins},
             {"repeats", be.repeats},
             {"duration_ms", be.duration_ms},
             {"waveform", to_string(be.waveform)}};
}

void from_json(const json& j, BEParamsPartial& be) {
    using namespace jsonutil;
    reject_unknown_keys(j,
                        {"center_frequency_khz", "band_width_khz", "amplitude_v", "num_bins",
                         "repeats", "duration_ms", "waveform"},
                        "BE parameters");
    be.center_frequency_khz = optional_number(j, "center_frequency_khz");
    be.band_width_khz = optional_number(j, "band_width_khz");
    be.amplitude_v = optional_number(j, "amplitude_v");
    auto small_int = [&](std::string_view key) -> std::optional<int> {
        const auto v = optional_integer(j, key);
        if (!v) return std::nullopt;
        if (*v < -1'000'000 || *v > 1'000'000) invalid(std::string(key) + " is out of range");
        return static_cast<int>(*v);
    };
    be.num_bins = small_int("num_bins");
    be.repeats = small_int("repeats");
    be.duration_ms = optional_number(j, "duration_ms");
    if (j.contains("waveform") && !j["waveform"].is_null()) {
        be.waveform = waveform_from_string(string(j, "waveform"));
    }
}

void from_json(const json& j, BEParams& be) {
    BEParamsPartial partial;
    from_json(j, partial);
    be = partial.resolve();
}

void to_json(json& j, const IOConfig& io) {
    j = json{{"sample_rate_hz", io.sample_rate_hz},
             {"output_range_v", io.output_range_v},
             {"channels", io.channels}};
}

void from_json(const json& j, IOConfig& io) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"sample_rate_hz", "output_range_v", "channels"}, "IO configuration");
    IOConfig out;
    if (auto v = optional_number(j, "sample_rate_hz")) out.sample_rate_hz = *v;
    if (auto v = optional_number(j, "output_range_v")) out.output_range_v = *v;
    if (j.contains("channels")) {
        const auto& c = j["channels"];
        if (!c.is_array()) throw Error(ErrorCode::invalid_params, "channels must be a list of names");
        out.channels.clear();
        for (const auto& name : c) {
            if (!name.is_string()) throw Error(ErrorCode::invalid_params, "channel names must be strings");
            out.channels.push_back(name.get<std::string>());
        }
    }
    io = std::move(out);
}

void to_json(json& j, const SHOParams& p) {
    j = json{{"a0", p.a0}, {"f0_hz", p.f0_hz}, {"q_factor", p.q_factor},
             {"phase_offset_rad", p.phase_offset_rad}};
}

void to_json(json& j, const BESpectrum& s) {
    j = json{{"frequency_hz", s.frequency_hz}, {"amplitude", s.amplitude}, {"phase_rad", s.phase_rad}};
}

void from_json(const json& j, BESpectrum& s) {
    jsonutil::reject_unknown_keys(j, {"frequency_hz", "amplitude", "phase_rad"}, "spectrum");
    try {
        s.frequency_hz = j.at("frequency_hz").get<std::vector<double>>();
        s.amplitude = j.at("amplitude").get<std::vector<double>>();
        s.phase_rad = j.value("phase_rad", std::vector<double>(s.amplitude.size(), 0.0));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_params, std::string("spectrum: ") + e.what());
    }
    if (s.frequency_hz.size() != s.amplitude.size() || s.phase_rad.size() != s.amplitude.size()) {
        throw Error(ErrorCode::shape_mismatch, "spectrum arrays must have equal length");
    }
}

}  // namespace aescope
