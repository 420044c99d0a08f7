#include "aescope/analysis/export.hpp"

#include "aescope/core/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace aescope::analysis {

namespace {

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5], std::span<const std::uint8_t> body) {
    put_u32be(out, static_cast<std::uint32_t>(body.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), body.begin(), body.end());
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

struct Canvas {
    std::size_t w, h;
    std::vector<std::uint8_t> rgb;
    Canvas(std::size_t width, std::size_t height) : w(width), h(height), rgb(width * height * 3, 255) {}
    void set(long x, long y, std::array<std::uint8_t, 3> c) {
        if (x < 0 || y < 0 || static_cast<std::size_t>(x) >= w || static_cast<std::size_t>(y) >= h) return;
        auto* p = &rgb[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }
    void line(long x0, long y0, long x1, long y1, std::array<std::uint8_t, 3> c) {
        const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        long err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const long e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }
};

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::array<std::uint8_t, 3> jet(double t) {
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
    auto ch = [&](double center) {
        const double v = std::clamp(1.5 - std::abs(4.0 * t - center), 0.0, 1.0);
        return static_cast<std::uint8_t>(std::lround(v * 255.0));
    };
    return {ch(3.0), ch(2.0), ch(1.0)};
}

std::vector<std::uint8_t> encode_png_rgb(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgb) {
    if (rgb.size() != width * height * 3 || width == 0 || height == 0) {
        throw Error(ErrorCode::invalid_params, "PNG buffer size does not match dimensions");
    }
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width * 3 + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        const auto row = rgb.subspan(y * width * 3, width * 3);
        raw.insert(raw.end(), row.begin(), row.end());
    }
    uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(packed_size);
    if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw Error(ErrorCode::storage_failure, "zlib compression failed");
    }
    packed.resize(packed_size);

    std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    put_u32be(ihdr, static_cast<std::uint32_t>(width));
    put_u32be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, truecolor, deflate, filter 0, no interlace
    put_chunk(png, "IHDR", ihdr);
    put_chunk(png, "IDAT", packed);
    put_chunk(png, "IEND", {});
    return png;
}

std::vector<std::uint8_t> render_heatmap_png(const Image& image, std::size_t scale) {
    if (image.empty()) throw Error(ErrorCode::empty_input, "cannot render an empty image");
    scale = std::max<std::size_t>(scale, 1);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : image.values()) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const std::size_t w = image.cols() * scale;
    const std::size_t h = image.rows() * scale;
    std::vector<std::uint8_t> rgb(w * h * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto c = jet((image(y / scale, x / scale) - lo) / span);
            std::copy(c.begin(), c.end(), rgb.begin() + static_cast<std::ptrdiff_t>((y * w + x) * 3));
        }
    }
    return encode_png_rgb(w, h, rgb);
}

std::vector<std::uint8_t> render_line_plot_png(std::span<const double> x, std::span<const double> y,
                                               std::size_t width, std::size_t height) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::shape_mismatch, "plot needs matching x/y");
    Canvas canvas(width, height);
    const long margin = 40;
    const long left = margin, right = static_cast<long>(width) - margin;
    const long top = margin, bottom = static_cast<long>(height) - margin;
    const std::array<std::uint8_t, 3> black{0, 0, 0};
    canvas.line(left, top, right, top, black);
    canvas.line(right, top, right, bottom, black);
    canvas.line(right, bottom, left, bottom, black);
    canvas.line(left, bottom, left, top, black);

    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const double xs = *xmax > *xmin ? *xmax - *xmin : 1.0;
    const double ys = *ymax > *ymin ? *ymax - *ymin : 1.0;
    auto px = [&](double v) { return left + std::lround((v - *xmin) / xs * static_cast<double>(right - left)); };
    auto py = [&](double v) { return bottom - std::lround((v - *ymin) / ys * static_cast<double>(bottom - top)); };
    const std::array<std::uint8_t, 3> blue{0, 70, 200};
    for (std::size_t i = 1; i < x.size(); ++i) {
        canvas.line(px(x[i - 1]), py(y[i - 1]), px(x[i]), py(y[i]), blue);
    }
    return encode_png_rgb(width, height, canvas.rgb);
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::storage_failure, "cannot write " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string image_csv(const Image& image) {
    std::string out;
    for (std::size_t r = 0; r < image.rows(); ++r) {
        for (std::size_t c = 0; c < image.cols(); ++c) {
            if (c) out += ',';
            out += fmt9(image(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string spectrum_csv(const BESpectrum& s) {
    std::string out = "frequency_hz,amplitude,phase_rad\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += fmt9(s.frequency_hz[i]) + ',' + fmt9(s.amplitude[i]) + ',' + fmt9(s.phase_rad[i]) + '\n';
    }
    return out;
}

std::string walls_csv(const WallDetection& d) {
    std::string out = "row,col\n";
    for (const auto& p : d.coordinates) out += std::to_string(p.row) + ',' + std::to_string(p.col) + '\n';
    return out;
}

}  // namespace aescope::analysis
