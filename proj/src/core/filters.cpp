#include "aescope/core/filters.hpp"

#include <cmath>

namespace aescope {

namespace {

std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        taps[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (auto& w : taps) w /= sum;
    return taps;
}

Image gaussian_blur(const Image& in, double sigma_rows, double sigma_cols) {
    const auto rows = static_cast<std::ptrdiff_t>(in.rows());
    const auto cols = static_cast<std::ptrdiff_t>(in.cols());
    Image tmp = in;
    if (sigma_cols > 0.0) {
        const auto taps = gaussian_kernel(sigma_cols);
        const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            for (std::ptrdiff_t c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                    acc += taps[static_cast<std::size_t>(k + radius)] *
                           in(static_cast<std::size_t>(r), static_cast<std::size_t>(reflect(c + k, cols)));
                }
                tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
            }
        }
    }
    if (sigma_rows <= 0.0) return tmp;
    Image out(in.rows(), in.cols());
    const auto taps = gaussian_kernel(sigma_rows);
    const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                acc += taps[static_cast<std::size_t>(k + radius)] *
                       tmp(static_cast<std::size_t>(reflect(r + k, rows)), static_cast<std::size_t>(c));
            }
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
        }
    }
    return out;
}

}  // namespace aescope
