#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace treefed {

// Channel-major dense image, values in intensity units.
struct Image {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  static Image zeros(std::size_t channels, std::size_t height,
                     std::size_t width) {
    Image img;
    img.channels = channels;
    img.height = height;
    img.width = width;
    img.data.assign(channels * height * width, 0.0);
    return img;
  }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  static Mask zeros(std::size_t height, std::size_t width) {
    Mask m;
    m.height = height;
    m.width = width;
    m.data.assign(height * width, 0);
    return m;
  }

  std::uint8_t& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const {
    return data[y * width + x];
  }
};

using Batch = std::vector<Image>;

}  // namespace treefed
