#pragma once

#include "aescope/analysis/canny.hpp"
#include "aescope/core/grid.hpp"
#include "aescope/core/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace aescope::analysis {

/// MATLAB-style 'jet' colormap; t is clamped to [0, 1].
std::array<std::uint8_t, 3> jet(double t);

/// 8-bit RGB PNG (no interlace, filter 0) from packed row-major RGB triples.
std::vector<std::uint8_t> encode_png_rgb(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb);

/// Heatmap, one PNG pixel per image pixel scaled by `scale`, min..max mapped through jet.
std::vector<std::uint8_t> render_heatmap_png(const Image& image, std::size_t scale = 4);

/// Line plot of y against x on a white canvas with a framed plot area.
std::vector<std::uint8_t> render_line_plot_png(std::span<const double> x, std::span<const double> y,
                                               std::size_t width = 640, std::size_t height = 400);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

std::string image_csv(const Image& image);
std::string spectrum_csv(const BESpectrum& s);
std::string walls_csv(const WallDetection& d);

}  // namespace aescope::analysis
