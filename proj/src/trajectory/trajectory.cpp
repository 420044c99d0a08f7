#include "aescope/trajectory/trajectory.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace aescope::trajectory {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_params, what); }

void require_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) invalid("sample_rate_hz must be > 0");
}

// Generators refuse to build paths longer than this.
constexpr std::size_t kMaxSamples = 2'000'000;

void require_count(double n) {
    if (!(n <= static_cast<double>(kMaxSamples))) {
        invalid("trajectory would exceed " + std::to_string(kMaxSamples) + " samples");
    }
}

int small_int(long long v) {
    if (v < -1'000'000'000 || v > 1'000'000'000) invalid("integer parameter out of range");
    return static_cast<int>(v);
}

}  // namespace

ScanTrajectory flower_waveform(const FlowerParams& p) {
    if (!(p.r0_um > 0.0)) invalid("flower r0_um must be > 0");
    if (!(p.amp_um >= 0.0)) invalid("flower amp_um must be >= 0");
    if (p.amp_um >= p.r0_um) {
        throw Error(ErrorCode::radius_nonpositive, "flower amp_um must be smaller than r0_um");
    }
    if (p.petals < 0) invalid("flower petals must be >= 0");
    if (p.n_samples < 16) throw Error(ErrorCode::too_few_samples, "flower needs at least 16 samples");
    require_count(p.n_samples);
    if (!std::isfinite(p.r0_um) || !std::isfinite(p.amp_um)) invalid("flower radii must be finite");
    require_rate(p.sample_rate_hz);

    ScanTrajectory t;
    t.sample_rate_hz = p.sample_rate_hz;
    t.closed = true;
    t.samples.reserve(static_cast<std::size_t>(p.n_samples));
    const double last = static_cast<double>(p.n_samples - 1);
    for (int i = 0; i < p.n_samples; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / last;
        const double r = p.r0_um + p.amp_um * std::sin(static_cast<double>(p.petals) * theta);
        t.samples.push_back({p.center.x_um + r * std::cos(theta), p.center.y_um + r * std::sin(theta)});
    }
    return t;
}

ScanTrajectory spiral_waveform(const SpiralParams& p) {
    if (!(p.pitch_um > 0.0)) invalid("spiral pitch_um must be > 0");
    if (!(p.r_max_um >= p.pitch_um)) invalid("spiral r_max_um must be >= pitch_um");
    if (p.samples_per_turn < 8) invalid("spiral samples_per_turn must be >= 8");
    if (!std::isfinite(p.r_max_um)) invalid("spiral r_max_um must be finite");
    require_rate(p.sample_rate_hz);
    // Constant-linear mode needs about (area / arc_step²) samples; angular mode turns × samples_per_turn.
    const double turns = p.r_max_um / p.pitch_um;
    require_count(turns * p.samples_per_turn * (p.mode == SpiralMode::constant_linear_velocity ? turns : 1.0));

    ScanTrajectory t;
    t.sample_rate_hz = p.sample_rate_hz;
    const double theta_max = kTwoPi * p.r_max_um / p.pitch_um;
    const double limit = theta_max * (1.0 + 1e-12);
    const double angular_step = kTwoPi / static_cast<double>(p.samples_per_turn);
    auto emit = [&](double theta) {
        const double r = p.pitch_um * theta / kTwoPi;
        t.samples.push_back({p.center.x_um + r * std::cos(theta), p.center.y_um + r * std::sin(theta)});
    };

    if (p.mode == SpiralMode::constant_angular_velocity) {
        for (std::size_t k = 0;; ++k) {
            const double theta = angular_step * static_cast<double>(k);
            if (theta > limit) break;
            emit(theta);
        }
    } else {
        // Arc step equals the first-turn circumference split into samples_per_turn;
        // inside the first turn the angular step caps Δθ.
        const double arc_step = p.pitch_um * kTwoPi / static_cast<double>(p.samples_per_turn);
        double theta = 0.0;
        while (theta <= limit) {
            emit(theta);
            const double r = p.pitch_um * theta / kTwoPi;
            theta += r > 0.0 ? std::min(angular_step, arc_step / r) : angular_step;
        }
    }
    return t;
}

ScanTrajectory raster_waveform(const RasterParams& p) {
    if (p.lines < 1 || p.pts_per_line < 2) invalid("raster needs lines >= 1 and pts_per_line >= 2");
    require_count(static_cast<double>(p.lines) * p.pts_per_line);
    require_rate(p.sample_rate_hz);
    const Region& g = p.region;
    const bool finite = std::isfinite(g.x0) && std::isfinite(g.x1) && std::isfinite(g.y0) && std::isfinite(g.y1);
    if (!finite || !(g.x1 > g.x0) || !(g.y1 >= g.y0) || (p.lines > 1 && !(g.y1 > g.y0))) {
        throw Error(ErrorCode::invalid_region, "raster region must satisfy x0 < x1 and y0 < y1");
    }
    if (p.window) {
        const Region& w = *p.window;
        if (g.x0 < w.x0 || g.y0 < w.y0 || g.x1 > w.x1 || g.y1 > w.y1) {
            throw Error(ErrorCode::invalid_region, "raster region exceeds the scan window");
        }
    }

    ScanTrajectory t;
    t.sample_rate_hz = p.sample_rate_hz;
    t.samples.reserve(static_cast<std::size_t>(p.lines) * static_cast<std::size_t>(p.pts_per_line));
    const double dx = g.width() / static_cast<double>(p.pts_per_line - 1);
    const double dy = p.lines > 1 ? g.height() / static_cast<double>(p.lines - 1) : 0.0;
    for (int line = 0; line < p.lines; ++line) {
        const double y = g.y0 + dy * static_cast<double>(line);
        for (int k = 0; k < p.pts_per_line; ++k) {
            const int col = line % 2 == 0 ? k : p.pts_per_line - 1 - k;
            t.samples.push_back({g.x0 + dx * static_cast<double>(col), y});
        }
    }
    return t;
}

std::vector<Violation> validate_trajectory(const ScanTrajectory& t, const Region& window, double max_speed_um_s) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        const Point& s = t.samples[i];
        const bool inside = std::isfinite(s.x_um) && std::isfinite(s.y_um) && s.x_um >= window.x0 &&
                            s.x_um <= window.x1 && s.y_um >= window.y0 && s.y_um <= window.y1;
        if (!inside) out.push_back({i, ViolationKind::out_of_window, 0.0});
        if (i == 0) continue;
        const Point& prev = t.samples[i - 1];
        const double speed = std::hypot(s.x_um - prev.x_um, s.y_um - prev.y_um) * t.sample_rate_hz;
        if (!(speed <= max_speed_um_s)) out.push_back({i, ViolationKind::speed, speed});
    }
    return out;
}

std::string to_csv(const ScanTrajectory& t) {
    std::string out;
    out.reserve(t.samples.size() * 24);
    char buf[64];
    for (const auto& s : t.samples) {
        const int n = std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", s.x_um, s.y_um);
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

std::string to_string(SpiralMode m) {
    return m == SpiralMode::constant_angular_velocity ? "constant_angular_velocity" : "constant_linear_velocity";
}

std::string to_string(ViolationKind k) { return k == ViolationKind::speed ? "speed" : "out_of_window"; }

void to_json(json& j, const ScanTrajectory& t) {
    json samples = json::array();
    for (const auto& s : t.samples) samples.push_back(json::array({s.x_um, s.y_um}));
    j = json{{"samples", std::move(samples)}, {"sample_rate_hz", t.sample_rate_hz}, {"closed", t.closed}};
}

void from_json(const json& j, ScanTrajectory& t) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"samples", "sample_rate_hz", "closed"}, "trajectory");
    ScanTrajectory out;
    const auto it = j.find("samples");
    if (it == j.end() || !it->is_array()) invalid("trajectory samples must be a list of [x, y]");
    out.samples.reserve(it->size());
    for (const auto& s : *it) out.samples.push_back(s.get<Point>());
    if (out.samples.size() < 2) throw Error(ErrorCode::too_few_samples, "trajectory needs at least 2 samples");
    out.sample_rate_hz = number(j, "sample_rate_hz");
    require_rate(out.sample_rate_hz);
    out.closed = boolean(j, "closed", false);
    t = std::move(out);
}

void to_json(json& j, const Violation& v) {
    j = json{{"index", v.index}, {"kind", to_string(v.kind)}};
    if (v.kind == ViolationKind::speed) j["speed_um_s"] = v.value;
}

void from_json(const json& j, FlowerParams& p) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"center", "r0_um", "amp_um", "petals", "n_samples", "sample_rate_hz"},
                        "flower_waveform");
    FlowerParams out;
    if (j.contains("center")) out.center = j["center"].get<Point>();
    if (auto v = optional_number(j, "r0_um")) out.r0_um = *v;
    if (auto v = optional_number(j, "amp_um")) out.amp_um = *v;
    if (auto v = optional_integer(j, "petals")) out.petals = small_int(*v);
    if (auto v = optional_integer(j, "n_samples")) out.n_samples = small_int(*v);
    if (auto v = optional_number(j, "sample_rate_hz")) out.sample_rate_hz = *v;
    p = out;
}

void from_json(const json& j, SpiralParams& p) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"center", "r_max_um", "pitch_um", "mode", "sample_rate_hz", "samples_per_turn"},
                        "spiral_waveform");
    SpiralParams out;
    if (j.contains("center")) out.center = j["center"].get<Point>();
    if (auto v = optional_number(j, "r_max_um")) out.r_max_um = *v;
    if (auto v = optional_number(j, "pitch_um")) out.pitch_um = *v;
    if (auto v = optional_number(j, "sample_rate_hz")) out.sample_rate_hz = *v;
    if (auto v = optional_integer(j, "samples_per_turn")) out.samples_per_turn = small_int(*v);
    if (j.contains("mode")) {
        const auto mode = string(j, "mode");
        if (mode == "constant_angular_velocity") out.mode = SpiralMode::constant_angular_velocity;
        else if (mode == "constant_linear_velocity") out.mode = SpiralMode::constant_linear_velocity;
        else invalid("spiral mode must be constant_angular_velocity or constant_linear_velocity");
    }
    p = out;
}

void to_json(json& j, const FlowerParams& p) {
    j = json{{"center", p.center}, {"r0_um", p.r0_um}, {"amp_um", p.amp_um},
             {"petals", p.petals}, {"n_samples", p.n_samples}, {"sample_rate_hz", p.sample_rate_hz}};
}

void to_json(json& j, const SpiralParams& p) {
    j = json{{"center", p.center}, {"r_max_um", p.r_max_um}, {"pitch_um", p.pitch_um},
             {"mode", to_string(p.mode)}, {"sample_rate_hz", p.sample_rate_hz},
             {"samples_per_turn", p.samples_per_turn}};
}

}  // namespace aescope::trajectory
