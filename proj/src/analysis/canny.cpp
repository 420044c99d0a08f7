#include "aescope/analysis/canny.hpp"

#include "aescope/core/error.hpp"
#include "aescope/core/filters.hpp"
#include "aescope/core/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace aescope::analysis {

namespace {

// Forward neighbour offsets (drow, dcol) along each quantized gradient direction.
// Rows grow downward, so a 45° gradient points toward (+row, +col).
constexpr int kStep[4][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}};

std::uint8_t quantize(double gx, double gy) {
    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 180.0;
    if (deg < 22.5 || deg >= 157.5) return 0;
    if (deg < 67.5) return 1;
    if (deg < 112.5) return 2;
    return 3;
}

}  // namespace

void validate(const CannyParams& p) {
    if (!(p.gaussian_sigma_px > 0.0) || !std::isfinite(p.gaussian_sigma_px)) {
        throw Error(ErrorCode::invalid_params, "gaussian_sigma_px must be > 0");
    }
    if (!(p.low_ratio > 0.0 && p.low_ratio < p.high_ratio && p.high_ratio <= 1.0)) {
        throw Error(ErrorCode::invalid_params, "Canny thresholds must satisfy 0 < low_ratio < high_ratio <= 1");
    }
}

GradientField canny_gradients(const Image& image, double sigma_px) {
    const Image smooth = gaussian_blur(image, sigma_px);
    const std::size_t rows = image.rows();
    const std::size_t cols = image.cols();
    GradientField g{Image(rows, cols, 0.0), Grid<std::uint8_t>(rows, cols, 0)};
    for (std::size_t r = 1; r + 1 < rows; ++r) {
        for (std::size_t c = 1; c + 1 < cols; ++c) {
            const double gx = (smooth(r - 1, c + 1) + 2.0 * smooth(r, c + 1) + smooth(r + 1, c + 1)) -
                              (smooth(r - 1, c - 1) + 2.0 * smooth(r, c - 1) + smooth(r + 1, c - 1));
            const double gy = (smooth(r + 1, c - 1) + 2.0 * smooth(r + 1, c) + smooth(r + 1, c + 1)) -
                              (smooth(r - 1, c - 1) + 2.0 * smooth(r - 1, c) + smooth(r - 1, c + 1));
            g.magnitude(r, c) = std::hypot(gx, gy);
            g.direction(r, c) = quantize(gx, gy);
        }
    }
    return g;
}

bool is_local_maximum(const GradientField& g, std::size_t row, std::size_t col) {
    const std::size_t rows = g.magnitude.rows();
    const std::size_t cols = g.magnitude.cols();
    if (row == 0 || col == 0 || row + 1 >= rows || col + 1 >= cols) return false;
    const double m = g.magnitude(row, col);
    if (!(m > 0.0)) return false;
    const auto* step = kStep[g.direction(row, col)];
    const auto fr = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(row) + step[0]);
    const auto fc = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(col) + step[1]);
    const auto br = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(row) - step[0]);
    const auto bc = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(col) - step[1]);
    return m > g.magnitude(fr, fc) && m >= g.magnitude(br, bc);
}

WallDetection detect_domain_walls(const Image& image, const CannyParams& p) {
    validate(p);
    if (image.rows() < 8 || image.cols() < 8) {
        throw Error(ErrorCode::invalid_params, "wall detection needs an image of at least 8x8 pixels");
    }
    if (!std::all_of(image.values().begin(), image.values().end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorCode::non_finite, "image contains non-finite values");
    }

    const std::size_t rows = image.rows();
    const std::size_t cols = image.cols();
    WallDetection out{Grid<std::uint8_t>(rows, cols, 0), {}, p};

    const GradientField g = canny_gradients(image, p.gaussian_sigma_px);
    const double peak = *std::max_element(g.magnitude.values().begin(), g.magnitude.values().end());
    // Blur round-off on a flat field leaves gradients at the 1e-16 level.
    const double range = [&] {
        const auto [mn, mx] = std::minmax_element(image.values().begin(), image.values().end());
        return *mx - *mn;
    }();
    if (!(peak > 0.0) || range == 0.0) return out;

    const double high = p.high_ratio * peak;
    const double low = p.low_ratio * peak;
    enum : std::uint8_t { none = 0, weak = 1, strong = 2 };
    Grid<std::uint8_t> cls(rows, cols, none);
    std::deque<PixelIndex> frontier;
    for (std::size_t r = 1; r + 1 < rows; ++r) {
        for (std::size_t c = 1; c + 1 < cols; ++c) {
            if (!is_local_maximum(g, r, c)) continue;
            const double m = g.magnitude(r, c);
            if (m >= high) {
                cls(r, c) = strong;
                frontier.push_back({r, c});
            } else if (m >= low) {
                cls(r, c) = weak;
            }
        }
    }

    while (!frontier.empty()) {
        const PixelIndex px = frontier.front();
        frontier.pop_front();
        out.mask(px.row, px.col) = 1;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const auto r = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(px.row) + dr);
                const auto c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(px.col) + dc);
                if (r >= rows || c >= cols) continue;
                if (cls(r, c) == weak) {
                    cls(r, c) = strong;
                    frontier.push_back({r, c});
                }
            }
        }
    }

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (out.mask(r, c)) out.coordinates.push_back({r, c});
        }
    }
    return out;
}

void to_json(json& j, const CannyParams& p) {
    j = json{{"gaussian_sigma_px", p.gaussian_sigma_px}, {"low_ratio", p.low_ratio}, {"high_ratio", p.high_ratio}};
}

void from_json(const json& j, CannyParams& p) {
    using namespace jsonutil;
    reject_unknown_keys(j, {"gaussian_sigma_px", "low_ratio", "high_ratio"}, "Canny parameters");
    CannyParams out;
    if (auto v = optional_number(j, "gaussian_sigma_px")) out.gaussian_sigma_px = *v;
    if (auto v = optional_number(j, "low_ratio")) out.low_ratio = *v;
    if (auto v = optional_number(j, "high_ratio")) out.high_ratio = *v;
    p = out;
}

}  // namespace aescope::analysis
