#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lmr {

/// 8-bit grayscale raster, row 0 at the top as stored on disk.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  bool operator==(const GrayImage&) const = default;
};

/// Reads binary (P5) or ASCII (P2) PGM, or PNG, chosen by file extension.
GrayImage read_gray_image(const std::filesystem::path& path);

/// Writes binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace lmr
