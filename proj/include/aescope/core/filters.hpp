#pragma once

#include "aescope/core/grid.hpp"

#include <vector>

namespace aescope {

/// Normalized 1-D Gaussian taps, radius ceil(3σ).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with mirrored (reflect-101) borders.
/// A non-positive sigma leaves that axis untouched.
Image gaussian_blur(const Image& in, double sigma_rows, double sigma_cols);

inline Image gaussian_blur(const Image& in, double sigma) { return gaussian_blur(in, sigma, sigma); }

}  // namespace aescope
