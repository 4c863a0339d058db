#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace adaptrack {

/// Interleaved 8-bit image, row-major. Decoded files are 3-channel BGR.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c = 3, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t* at(int x, int y) noexcept {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }
    const std::uint8_t* at(int x, int y) const noexcept {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels;
    }
};

/// Decodes PNG or JPEG; throws DataError naming the path on failure.
Image read_image(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace adaptrack
