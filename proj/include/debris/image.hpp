#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace debris {

// Interleaved 8-bit image, row-major. channels is 1 (gray) or 3 (RGB).
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool empty() const { return pixels.empty(); }
    bool same_shape(const ImageU8& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

// Bilinear sample of one channel at fractional pixel coordinates; coordinates
// are clamped to the image border.
double bilinear_sample(const ImageU8& img, double x, double y, int channel);

// PNG I/O (8-bit). Palette/alpha/16-bit inputs are converted on read.
ImageU8 read_png_rgb(const std::filesystem::path& path);
ImageU8 read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageU8& img);

} // namespace debris
