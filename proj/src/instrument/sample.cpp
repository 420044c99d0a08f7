#include "aescope/instrument/sample.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/filters.hpp"
#include "aescope/core/json_util.hpp"
#include "aescope/instrument/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace aescope::instrument {

namespace {

constexpr std::uint64_t kPolarizationStream = 1;
constexpr std::uint64_t kTopographyStream = 2;
constexpr std::uint64_t kResonanceStream = 3;

[[noreturn]] void bad_config(const std::string& what) {
    throw Error(ErrorCode::invalid_config, "sample config: " + what);
}

Grid<std::int8_t> make_polarization(std::uint64_t seed, const SampleConfig& cfg) {
    Grid<std::int8_t> pol(cfg.rows, cfg.cols, 1);
    switch (cfg.pattern) {
    case DomainPattern::uniform:
        return pol;
    case DomainPattern::two_domain:
        for (std::size_t r = 0; r < cfg.rows; ++r) {
            for (std::size_t c = cfg.cols / 2; c < cfg.cols; ++c) pol(r, c) = -1;
        }
        return pol;
    case DomainPattern::random:
        break;
    }
    auto rng = stream_engine(seed, kPolarizationStream);
    std::normal_distribution<double> white(0.0, 1.0);
    Image noise(cfg.rows, cfg.cols);
    for (auto& v : noise.values()) v = white(rng);
    // Smoothing length extent/16, expressed per axis in pixels.
    const Image smooth = gaussian_blur(noise, static_cast<double>(cfg.rows) / 16.0,
                                       static_cast<double>(cfg.cols) / 16.0);
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        pol.values()[i] = smooth.values()[i] >= 0.0 ? 1 : -1;
    }
    return pol;
}

Image make_topography(std::uint64_t seed, const SampleConfig& cfg, const SampleModel& model) {
    auto rng = stream_engine(seed, kTopographyStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Bump {
        double x, y, height, width;
    };
    std::vector<Bump> bumps;
    for (int i = 0; i < cfg.num_bumps; ++i) {
        Bump b{};
        b.x = unit(rng) * cfg.extent_um;
        b.y = unit(rng) * cfg.extent_um;
        b.height = cfg.bump_height_um * (0.2 + 0.8 * unit(rng));
        b.width = cfg.extent_um * (1.0 / 20.0 + unit(rng) * (1.0 / 8.0 - 1.0 / 20.0));
        bumps.push_back(b);
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    Image topo(cfg.rows, cfg.cols);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        for (std::size_t c = 0; c < cfg.cols; ++c) {
            const Point p = model.pixel_center({r, c});
            double h = 0.0;
            for (const auto& b : bumps) {
                const double dx = p.x_um - b.x;
                const double dy = p.y_um - b.y;
                h += b.height * std::exp(-(dx * dx + dy * dy) / (2.0 * b.width * b.width));
            }
            const double n = noise(rng);
            topo(r, c) = h + cfg.topo_noise_um * n;
        }
    }
    return topo;
}

}  // namespace

void validate(const SampleConfig& cfg) {
    if (cfg.rows < 16 || cfg.cols < 16) bad_config("grid must be at least 16x16");
    if (!(cfg.extent_um > 0.0) || !std::isfinite(cfg.extent_um)) bad_config("extent_um must be > 0");
    if (!(cfg.a0 > 0.0)) bad_config("a0 must be > 0");
    if (!(cfg.f0_hz > 0.0)) bad_config("f0_hz must be > 0");
    if (!(cfg.q_factor > 1.0)) bad_config("q_factor must be > 1");
    if (!(cfg.f0_spread_rel >= 0.0 && cfg.f0_spread_rel < 1.0)) bad_config("f0_spread_rel must be in [0, 1)");
    if (!(std::abs(cfg.phase_offset_rad) <= std::numbers::pi)) bad_config("phase_offset_rad must be in [-pi, pi]");
    if (!(cfg.coercive_v > 0.0)) bad_config("coercive_v must be > 0");
    if (!(cfg.switch_radius0_um > 0.0)) bad_config("switch_radius0_um must be > 0");
    if (!(cfg.noise_rel >= 0.0)) bad_config("noise_rel must be >= 0");
    if (cfg.num_bumps < 0) bad_config("num_bumps must be >= 0");
    if (!(cfg.bump_height_um >= 0.0) || !(cfg.topo_noise_um >= 0.0)) bad_config("topography scales must be >= 0");
}

Point SampleModel::pixel_center(PixelIndex p) const {
    return {(static_cast<double>(p.col) + 0.5) * pixel_width_um(),
            (static_cast<double>(p.row) + 0.5) * pixel_height_um()};
}

Region SampleModel::pixel_center_region() const {
    const Point first = pixel_center({0, 0});
    const Point last = pixel_center({config.rows - 1, config.cols - 1});
    return {first.x_um, first.y_um, last.x_um, last.y_um};
}

SampleModel generate_sample(std::uint64_t seed, const SampleConfig& cfg) {
    validate(cfg);
    SampleModel model;
    model.config = cfg;
    model.seed = seed;
    model.polarization = make_polarization(seed, cfg);
    model.topography_um = make_topography(seed, cfg, model);

    auto rng = stream_engine(seed, kResonanceStream);
    std::uniform_real_distribution<double> spread(-cfg.f0_spread_rel, cfg.f0_spread_rel);
    model.sho = Grid<SHOParams>(cfg.rows, cfg.cols);
    for (auto& p : model.sho.values()) {
        p.a0 = cfg.a0;
        p.f0_hz = cfg.f0_spread_rel > 0.0 ? cfg.f0_hz * (1.0 + spread(rng)) : cfg.f0_hz;
        p.q_factor = cfg.q_factor;
        p.phase_offset_rad = cfg.phase_offset_rad;
    }
    return model;
}

std::string to_string(DomainPattern p) {
    switch (p) {
    case DomainPattern::random: return "random";
    case DomainPattern::two_domain: return "two_domain";
    case DomainPattern::uniform: return "uniform";
    }
    return "random";
}

void to_json(json& j, const SampleConfig& cfg) {
    j = json{{"rows", cfg.rows},
             {"cols", cfg.cols},
             {"extent_um", cfg.extent_um},
             {"pattern", to_string(cfg.pattern)},
             {"a0", cfg.a0},
             {"f0_hz", cfg.f0_hz},
             {"q_factor", cfg.q_factor},
             {"f0_spread_rel", cfg.f0_spread_rel},
             {"phase_offset_rad", cfg.phase_offset_rad},
             {"coercive_v", cfg.coercive_v},
             {"switch_radius0_um", cfg.switch_radius0_um},
             {"noise_rel", cfg.noise_rel},
             {"num_bumps", cfg.num_bumps},
             {"bump_height_um", cfg.bump_height_um},
             {"topo_noise_um", cfg.topo_noise_um}};
}

void from_json(const json& j, SampleConfig& cfg) {
    using namespace jsonutil;
    reject_unknown_keys(j,
                        {"rows", "cols", "extent_um", "pattern", "a0", "f0_hz", "q_factor", "f0_spread_rel",
                         "phase_offset_rad", "coercive_v", "switch_radius0_um", "noise_rel", "num_bumps",
                         "bump_height_um", "topo_noise_um"},
                        "sample config");
    SampleConfig out;
    auto size_field = [&](const char* key, std::size_t& dst) {
        if (auto v = optional_integer(j, key)) {
            if (*v < 0) bad_config(std::string(key) + " must be non-negative");
            dst = static_cast<std::size_t>(*v);
        }
    };
    size_field("rows", out.rows);
    size_field("cols", out.cols);
    auto num = [&](const char* key, double& dst) {
        if (auto v = optional_number(j, key)) dst = *v;
    };
    num("extent_um", out.extent_um);
    num("a0", out.a0);
    num("f0_hz", out.f0_hz);
    num("q_factor", out.q_factor);
    num("f0_spread_rel", out.f0_spread_rel);
    num("phase_offset_rad", out.phase_offset_rad);
    num("coercive_v", out.coercive_v);
    num("switch_radius0_um", out.switch_radius0_um);
    num("noise_rel", out.noise_rel);
    num("bump_height_um", out.bump_height_um);
    num("topo_noise_um", out.topo_noise_um);
    if (auto v = optional_integer(j, "num_bumps")) out.num_bumps = static_cast<int>(*v);
    if (j.contains("pattern")) {
        const auto name = string(j, "pattern");
        if (name == "random") out.pattern = DomainPattern::random;
        else if (name == "two_domain") out.pattern = DomainPattern::two_domain;
        else if (name == "uniform") out.pattern = DomainPattern::uniform;
        else bad_config("unknown pattern '" + name + "'");
    }
    cfg = out;
}

}  // namespace aescope::instrument
