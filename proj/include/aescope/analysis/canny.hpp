#pragma once

#include "aescope/core/grid.hpp"
#include "aescope/core/types.hpp"

#include <cstdint>
#include <vector>

namespace aescope::analysis {

/// Thresholds are fractions of the maximum gradient magnitude.
struct CannyParams {
    double gaussian_sigma_px = 1.0;
    double low_ratio = 0.1;
    double high_ratio = 0.3;
};

/// Throws Error(invalid_params).
void validate(const CannyParams& p);

struct WallDetection {
    Grid<std::uint8_t> mask;              // 1 on wall pixels
    std::vector<PixelIndex> coordinates;  // exactly the set cells of mask, row-major order
    CannyParams params;
};

/// Gradient stage of the detector, exposed for inspection.
struct GradientField {
    Image magnitude;               // zero on the one-pixel border
    Grid<std::uint8_t> direction;  // 0: 0°, 1: 45°, 2: 90°, 3: 135°
};

/// Gaussian blur followed by 3×3 Sobel gradients with directions quantized to 4 bins.
GradientField canny_gradients(const Image& image, double sigma_px);

/// Non-maximum suppression test along the quantized gradient direction.
/// Plateaus keep a single pixel: strict against the forward neighbour, non-strict backward.
bool is_local_maximum(const GradientField& g, std::size_t row, std::size_t col);

/// Full Canny detector: blur, Sobel, NMS, double threshold, 8-connected hysteresis.
/// Border pixels are never reported. A constant image yields an empty detection.
/// Throws Error(invalid_params) for images under 8×8 and Error(non_finite).
WallDetection detect_domain_walls(const Image& image, const CannyParams& p = {});

void to_json(json& j, const CannyParams& p);
void from_json(const json& j, CannyParams& p);

}  // namespace aescope::analysis
