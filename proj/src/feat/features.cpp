#include "meshrecon/feat/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/rng.hpp"
#include "meshrecon/render/renderer.hpp"

namespace meshrecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb-Huttenlocher 1D squared distance transform.
void dt1d(const std::vector<double>& f, std::vector<double>& d, int n) {
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (k > 0 && s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    if (f[v[0]] == kInf) {
      d[q] = kInf;
      continue;
    }
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

Raster edt(const SparseDepthSet& sparse, int width, int height) {
  if (sparse.records.empty()) {
    throw ValidationError("empty-input", "no sparse depth measurements");
  }
  // Squared distances on the integer pixel grid of the measurement cells.
  std::vector<double> grid(static_cast<std::size_t>(width) * height, kInf);
  for (const auto& r : sparse.records) {
    const int x = std::clamp(static_cast<int>(r.u), 0, width - 1);
    const int y = std::clamp(static_cast<int>(r.v), 0, height - 1);
    grid[static_cast<std::size_t>(y) * width + x] = 0.0;
  }
  std::vector<double> col(height), cold(height);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      col[y] = grid[static_cast<std::size_t>(y) * width + x];
    }
    dt1d(col, cold, height);
    for (int y = 0; y < height; ++y) {
      grid[static_cast<std::size_t>(y) * width + x] = cold[y];
    }
  }
  std::vector<double> row(width), rowd(width);
  Raster out = Raster::zeros(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      row[x] = grid[static_cast<std::size_t>(y) * width + x];
    }
    dt1d(row, rowd, width);
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = std::sqrt(rowd[x]);
    }
  }
  return out;
}

Raster assemble_input(const Raster& rgb, const TriMesh& init_mesh,
                      const SparseDepthSet& sparse, const CameraModel& camera,
                      InputVariant variant) {
  if (rgb.width != camera.width || rgb.height != camera.height ||
      rgb.channels != 3) {
    throw ValidationError("invalid-argument",
                          "rgb raster does not match the camera resolution");
  }
  Raster out = Raster::zeros(camera.width, camera.height, 5);
  const bool want_rgb = variant != InputVariant::kRdEdt;
  const bool want_rd = variant != InputVariant::kRgbOnly;
  const bool want_edt = variant == InputVariant::kRgbRdEdt ||
                        variant == InputVariant::kRdEdt;
  if (want_rgb) {
    for (int y = 0; y < rgb.height; ++y) {
      for (int x = 0; x < rgb.width; ++x) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = rgb.at(x, y, c);
      }
    }
  }
  if (want_rd) {
    const DepthRaster rd = render_depth(init_mesh, camera);
    for (int y = 0; y < rd.height; ++y) {
      for (int x = 0; x < rd.width; ++x) out.at(x, y, 3) = rd.at(x, y);
    }
  }
  if (want_edt) {
    const Raster e = edt(sparse, camera.width, camera.height);
    for (int y = 0; y < e.height; ++y) {
      for (int x = 0; x < e.width; ++x) out.at(x, y, 4) = e.at(x, y);
    }
  }
  return out;
}

namespace {

Raster average_pool(const Raster& in, int factor) {
  const int w = (in.width + factor - 1) / factor;
  const int h = (in.height + factor - 1) / factor;
  Raster out = Raster::zeros(w, h, in.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = x * factor;
      const int y0 = y * factor;
      const int x1 = std::min(x0 + factor, in.width);
      const int y1 = std::min(y0 + factor, in.height);
      const double inv = 1.0 / ((x1 - x0) * (y1 - y0));
      for (int c = 0; c < in.channels; ++c) {
        double acc = 0.0;
        for (int yy = y0; yy < y1; ++yy) {
          for (int xx = x0; xx < x1; ++xx) acc += in.at(xx, yy, c);
        }
        out.at(x, y, c) = acc * inv;
      }
    }
  }
  return out;
}

// 3x3 convolution with clamp-to-edge borders, expanding in.channels to
// out_channels with the given filter bank (out x in x 3 x 3, flattened).
Raster conv3x3(const Raster& in, int out_channels,
               const std::vector<double>& filters) {
  Raster out = Raster::zeros(in.width, in.height, out_channels);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int oc = 0; oc < out_channels; ++oc) {
        double acc = 0.0;
        for (int ic = 0; ic < in.channels; ++ic) {
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, in.height - 1);
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = std::clamp(x + dx, 0, in.width - 1);
              const double w =
                  filters[((oc * in.channels + ic) * 3 + (dy + 1)) * 3 +
                          (dx + 1)];
              acc += w * in.at(xx, yy, ic);
            }
          }
        }
        out.at(x, y, oc) = acc;
      }
    }
  }
  return out;
}

void standardize(Raster& r) {
  const long pixels = static_cast<long>(r.width) * r.height;
  for (int c = 0; c < r.channels; ++c) {
    double mean = 0.0;
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) mean += r.at(x, y, c);
    }
    mean /= pixels;
    double var = 0.0;
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) {
        const double d = r.at(x, y, c) - mean;
        var += d * d;
      }
    }
    const double scale = 1.0 / std::max(std::sqrt(var / pixels), 1e-12);
    for (int y = 0; y < r.height; ++y) {
      for (int x = 0; x < r.width; ++x) {
        r.at(x, y, c) = (r.at(x, y, c) - mean) * scale;
      }
    }
  }
}

}  // namespace

FeaturePyramid toy_feature_pyramid(const Raster& stack,
                                   const std::array<int, 4>& channels,
                                   std::uint64_t seed) {
  FeaturePyramid pyr;
  Rng rng(seed);
  for (int level = 0; level < 4; ++level) {
    const int oc = channels[level];
    const int ic = stack.channels;
    std::vector<double> filters(static_cast<std::size_t>(oc) * ic * 9);
    const double bound = std::sqrt(6.0 / (9.0 * ic + 9.0 * oc));
    for (double& w : filters) w = rng.uniform(-bound, bound);
    Raster pooled = average_pool(stack, 1 << (level + 1));
    Raster feat = conv3x3(pooled, oc, filters);
    standardize(feat);
    pyr.levels.push_back(std::move(feat));
  }
  return pyr;
}

double sample_bilinear(const Raster& raster, double u, double v,
                       int channel) {
  double tx = std::clamp(u * raster.width - 0.5, 0.0,
                         static_cast<double>(raster.width - 1));
  double ty = std::clamp(v * raster.height - 0.5, 0.0,
                         static_cast<double>(raster.height - 1));
  const int x0 = static_cast<int>(tx);
  const int y0 = static_cast<int>(ty);
  const int x1 = std::min(x0 + 1, raster.width - 1);
  const int y1 = std::min(y0 + 1, raster.height - 1);
  const double fx = tx - x0;
  const double fy = ty - y0;
  return (1.0 - fy) * ((1.0 - fx) * raster.at(x0, y0, channel) +
                       fx * raster.at(x1, y0, channel)) +
         fy * ((1.0 - fx) * raster.at(x0, y1, channel) +
               fx * raster.at(x1, y1, channel));
}

namespace {

Eigen::MatrixXd associate_impl(const TriMesh& mesh,
                               const std::vector<const Raster*>& maps,
                               const CameraModel& camera,
                               int* clamp_warnings) {
  const int n = mesh.vertex_count();
  int total_channels = 0;
  for (const Raster* m : maps) total_channels += m->channels;
  Eigen::MatrixXd out(n, total_channels);
  int warnings = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d cam =
        camera.to_camera(mesh.vertices.row(i).transpose());
    const Eigen::Vector2d px = camera.project(cam);
    double u = px.x() / camera.width;
    double v = px.y() / camera.height;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) {
      ++warnings;
      u = std::clamp(u, 0.0, 1.0);
      v = std::clamp(v, 0.0, 1.0);
    }
    int col = 0;
    for (const Raster* m : maps) {
      for (int c = 0; c < m->channels; ++c) {
        out(i, col++) = sample_bilinear(*m, u, v, c);
      }
    }
  }
  if (clamp_warnings != nullptr) *clamp_warnings = warnings;
  return out;
}

}  // namespace

Eigen::MatrixXd associate(const TriMesh& mesh, const FeaturePyramid& pyramid,
                          const CameraModel& camera, int* clamp_warnings) {
  std::vector<const Raster*> maps;
  for (const Raster& level : pyramid.levels) maps.push_back(&level);
  return associate_impl(mesh, maps, camera, clamp_warnings);
}

Eigen::MatrixXd associate_raster(const TriMesh& mesh, const Raster& raster,
                                 const CameraModel& camera,
                                 int* clamp_warnings) {
  return associate_impl(mesh, {&raster}, camera, clamp_warnings);
}

}  // namespace meshrecon
