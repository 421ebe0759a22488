#pragma once

#include <cstddef>
#include <vector>

namespace meshrecon {

// Dense W x H x C image of doubles, row-major in (y, x, channel) order.
// Depth rasters use channel 0 with the sentinel 0 marking no-coverage
// pixels; semantic rasters mark invalid pixels with an all-zero vector.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  static Raster zeros(int w, int h, int c = 1) {
    Raster r;
    r.width = w;
    r.height = h;
    r.channels = c;
    r.data.assign(static_cast<std::size_t>(w) * h * c, 0.0);
    return r;
  }

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool depth_valid(int x, int y) const { return at(x, y, 0) > 0.0; }

  bool semantic_valid(int x, int y) const {
    for (int c = 0; c < channels; ++c) {
      if (at(x, y, c) != 0.0) return true;
    }
    return false;
  }

  std::size_t size() const { return data.size(); }
};

using DepthRaster = Raster;
using SemanticRaster = Raster;

}  // namespace meshrecon
