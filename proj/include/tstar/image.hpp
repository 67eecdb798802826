#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tstar/core.hpp"

namespace tstar {

// 8-bit grayscale raster.
struct GrayImage {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::vector<std::uint8_t> pixels; // row-major, width*height

    std::uint8_t at(std::int64_t y, std::int64_t x) const {
        return pixels[static_cast<std::size_t>(y * width + x)];
    }
};

// Binary PGM (P5, maxval 255). Comments in the header are tolerated.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// Frame images live in a directory as <index zero-padded to 8>.pgm.
std::string frame_image_path(const std::string& store_dir, FrameIndex frame);

} // namespace tstar
