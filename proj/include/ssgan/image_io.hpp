#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ssgan/error.hpp"

namespace ssgan {

// Decoded raster: 8-bit interleaved rows, 1 (gray) or 3 (RGB) channels.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Decodes a PNG or JPEG file, sniffing the format from the magic bytes.
// Alpha is dropped; palette and 16-bit PNGs are expanded to 8-bit.
RawImage decode_image(const std::filesystem::path& path);

void encode_png(const RawImage& img, const std::filesystem::path& path);

}  // namespace ssgan
