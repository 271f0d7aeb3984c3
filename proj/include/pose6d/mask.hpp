#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pose6d {

// Binary image, row-major, origin top-left, v down. Pixel (x, y) covers the
// unit square [x, x+1) x [y, y+1); its center sits at (x + 0.5, y + 0.5).
struct Mask {
  int w = 0, h = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int width, int height) : w(width), h(height), data(static_cast<std::size_t>(width) * height, 0) {}

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * w + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * w + x] = v ? 1 : 0; }

  long long area() const {
    long long n = 0;
    for (std::uint8_t v : data) n += (v != 0);
    return n;
  }

  bool operator==(const Mask& o) const { return w == o.w && h == o.h && data == o.data; }
};

// |A and B| / |A or B| over on-pixels; 1 when both are empty would be
// meaningless, so two empty masks give 0. Throws on resolution mismatch.
double mask_iou(const Mask& a, const Mask& b);

}  // namespace pose6d
