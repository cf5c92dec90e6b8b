#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mriq/grid.hpp"

namespace mriq::service {

/// Linear map between 16-bit codes and image intensities:
/// value = offset + scale * code.
struct Windowing {
  double offset = 0.0;
  double scale = 1.0;
};

struct Png16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> codes;  // row-major
};

/// Full-range windowing for an image: min -> 0, max -> 65535.
Windowing full_range_window(const RealImage& img);

std::vector<std::uint16_t> quantize(const RealImage& img, const Windowing& w);
RealImage dequantize(const std::vector<std::uint16_t>& codes, int rows, int cols, const Windowing& w);

/// 16-bit grayscale PNG bytes.
std::string encode_png16(const Png16& img);
Png16 decode_png16(const std::string& bytes);

}  // namespace mriq::service
