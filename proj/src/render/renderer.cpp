#include "meshrecon/render/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/rng.hpp"

namespace meshrecon {

namespace {

struct ProjectedFace {
  bool drawable = false;
  Eigen::Vector3d p[3];   // camera frame
  Eigen::Vector2d s[3];   // pixel coordinates
  double area2 = 0.0;     // signed, in the (possibly swapped) test order
  int order[3] = {0, 1, 2};
  bool hull[3] = {false, false, false};  // edge k has no neighboring face
};

double edge_fn(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
               double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Boundary ownership for positively oriented (screen-clockwise, y-down)
// triangles: edges going up own their boundary, near-horizontal edges going
// right own theirs. eps keeps the classification consistent between the two
// faces sharing an edge when projections carry rounding noise.
bool edge_owns_boundary(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        double eps) {
  const double dy = b.y() - a.y();
  const double dx = b.x() - a.x();
  if (std::abs(dy) <= eps) return dx > 0.0;
  return dy < 0.0;
}

// Edge counts over the whole mesh, to mark hull edges (used by one face).
std::map<std::pair<int, int>, int> edge_use_counts(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[(k + 1) % 3];
      const int b = f[(k + 2) % 3];
      ++counts[{std::min(a, b), std::max(a, b)}];
    }
  }
  return counts;
}

ProjectedFace project_face(const TriMesh& mesh, const CameraModel& camera,
                           int f,
                           const std::map<std::pair<int, int>, int>& edges) {
  ProjectedFace pf;
  const auto& fv = mesh.faces[f];
  int behind = 0;
  bool hull_orig[3];
  for (int k = 0; k < 3; ++k) {
    pf.p[k] = camera.to_camera(mesh.vertices.row(fv[k]).transpose());
    if (pf.p[k].z() <= 0.0) ++behind;
    const int a = fv[(k + 1) % 3];
    const int b = fv[(k + 2) % 3];
    const auto it = edges.find({std::min(a, b), std::max(a, b)});
    hull_orig[k] = (it == edges.end() || it->second == 1);
  }
  if (behind == 3) return pf;
  if (behind > 0) {
    throw ValidationError("behind-camera",
                          "face " + std::to_string(f) +
                              " has a vertex behind the camera");
  }
  for (int k = 0; k < 3; ++k) pf.s[k] = camera.project(pf.p[k]);
  double area2 = edge_fn(pf.s[0], pf.s[1], pf.s[2].x(), pf.s[2].y());
  if (area2 < 0.0) {
    std::swap(pf.s[1], pf.s[2]);
    std::swap(pf.p[1], pf.p[2]);
    pf.order[1] = 2;
    pf.order[2] = 1;
    area2 = -area2;
  }
  // Swapped edge k is opposite swapped vertex k, i.e. original vertex
  // order[k].
  for (int k = 0; k < 3; ++k) pf.hull[k] = hull_orig[pf.order[k]];
  // Slivers this thin cannot cover a pixel center robustly.
  if (area2 < 1e-10) return pf;
  pf.area2 = area2;
  pf.drawable = true;
  return pf;
}

template <typename PixelFn>
void for_each_covered_pixel(const ProjectedFace& pf, int width, int height,
                            PixelFn&& fn) {
  const double minx = std::min({pf.s[0].x(), pf.s[1].x(), pf.s[2].x()});
  const double maxx = std::max({pf.s[0].x(), pf.s[1].x(), pf.s[2].x()});
  const double miny = std::min({pf.s[0].y(), pf.s[1].y(), pf.s[2].y()});
  const double maxy = std::max({pf.s[0].y(), pf.s[1].y(), pf.s[2].y()});
  const double slack = 1e-9 * (std::abs(maxx) + std::abs(maxy) + 1.0);
  const int x0 =
      std::max(0, static_cast<int>(std::ceil(minx - 0.5 - slack)));
  const int x1 = std::min(width - 1,
                          static_cast<int>(std::floor(maxx - 0.5 + slack)));
  const int y0 =
      std::max(0, static_cast<int>(std::ceil(miny - 0.5 - slack)));
  const int y1 = std::min(height - 1,
                          static_cast<int>(std::floor(maxy - 0.5 + slack)));
  // Edge values this close to zero are treated as exact boundary hits; the
  // threshold is far below any genuine 0.5-pixel coverage margin.
  const double diag = std::hypot(maxx - minx, maxy - miny);
  const double perim = (pf.s[1] - pf.s[0]).norm() +
                       (pf.s[2] - pf.s[1]).norm() +
                       (pf.s[0] - pf.s[2]).norm();
  const double eps = 1e-12 * (perim * (diag + 1.0) + 1.0);
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      double w0 = edge_fn(pf.s[1], pf.s[2], px, py);
      double w1 = edge_fn(pf.s[2], pf.s[0], px, py);
      double w2 = edge_fn(pf.s[0], pf.s[1], px, py);
      if (std::abs(w0) <= eps) w0 = 0.0;
      if (std::abs(w1) <= eps) w1 = 0.0;
      if (std::abs(w2) <= eps) w2 = 0.0;
      // Shared edges obey the top-left rule; hull edges are inclusive.
      bool inside = true;
      const double eps_d = 1e-12 * (perim + 1.0);
      if (w0 < 0.0 || (w0 == 0.0 && !pf.hull[0] &&
                       !edge_owns_boundary(pf.s[1], pf.s[2], eps_d))) {
        inside = false;
      }
      if (w1 < 0.0 || (w1 == 0.0 && !pf.hull[1] &&
                       !edge_owns_boundary(pf.s[2], pf.s[0], eps_d))) {
        inside = false;
      }
      if (w2 < 0.0 || (w2 == 0.0 && !pf.hull[2] &&
                       !edge_owns_boundary(pf.s[0], pf.s[1], eps_d))) {
        inside = false;
      }
      if (!inside) continue;
      const double b0 = w0 / pf.area2;
      const double b1 = w1 / pf.area2;
      const double b2 = w2 / pf.area2;
      const double inv_z =
          b0 / pf.p[0].z() + b1 / pf.p[1].z() + b2 / pf.p[2].z();
      fn(x, y, b0, b1, b2, inv_z);
    }
  }
}

}  // namespace

RenderBuffers rasterize(const TriMesh& mesh, const CameraModel& camera) {
  RenderBuffers out;
  out.depth = Raster::zeros(camera.width, camera.height, 1);
  const std::size_t npix =
      static_cast<std::size_t>(camera.width) * camera.height;
  out.face.assign(npix, -1);
  out.bary.assign(npix, Eigen::Vector3d::Zero());
  std::vector<double> inv_z_buf(npix, 0.0);
  const auto edge_counts = edge_use_counts(mesh);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const ProjectedFace pf = project_face(mesh, camera, f, edge_counts);
    if (!pf.drawable) continue;
    for_each_covered_pixel(
        pf, camera.width, camera.height,
        [&](int x, int y, double b0, double b1, double b2, double inv_z) {
          const std::size_t idx = static_cast<std::size_t>(y) * camera.width + x;
          if (inv_z > inv_z_buf[idx]) {
            inv_z_buf[idx] = inv_z;
            out.face[idx] = f;
            out.depth.at(x, y) = 1.0 / inv_z;
            // Perspective-correct barycentric of the surface point, mapped
            // back to the face's stored vertex order.
            Eigen::Vector3d bb;
            bb[pf.order[0]] = (b0 / pf.p[0].z()) / inv_z;
            bb[pf.order[1]] = (b1 / pf.p[1].z()) / inv_z;
            bb[pf.order[2]] = (b2 / pf.p[2].z()) / inv_z;
            out.bary[idx] = bb;
          }
        });
  }
  return out;
}

DepthRaster render_depth(const TriMesh& mesh, const CameraModel& camera) {
  return rasterize(mesh, camera).depth;
}

SemanticRaster render_semantics(const TriMesh& mesh,
                                const CameraModel& camera) {
  const int s = mesh.class_count();
  if (s < 1) {
    throw ValidationError("invalid-argument",
                          "mesh carries no semantic scores");
  }
  const RenderBuffers buf = rasterize(mesh, camera);
  SemanticRaster out = Raster::zeros(camera.width, camera.height, s);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const int f = buf.pixel_face(x, y);
      if (f < 0) continue;
      const auto& fv = mesh.faces[f];
      const Eigen::Vector3d& b = buf.pixel_bary(x, y);
      for (int c = 0; c < s; ++c) {
        out.at(x, y, c) = b[0] * mesh.semantics(fv[0], c) +
                          b[1] * mesh.semantics(fv[1], c) +
                          b[2] * mesh.semantics(fv[2], c);
      }
    }
  }
  return out;
}

std::pair<DepthRaster, RenderJacobian> render_depth_with_jacobian(
    const TriMesh& mesh, const CameraModel& camera) {
  const RenderBuffers buf = rasterize(mesh, camera);
  return {buf.depth, jacobian_from(buf, mesh, camera)};
}

RenderJacobian jacobian_from(const RenderBuffers& buf, const TriMesh& mesh,
                             const CameraModel& camera) {
  RenderJacobian jac;
  jac.width = camera.width;
  jac.height = camera.height;
  jac.pixel_entry.assign(buf.face.size(), -1);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const int f = buf.pixel_face(x, y);
      if (f < 0) continue;
      const auto& fv = mesh.faces[f];
      Eigen::Vector3d p[3];
      for (int k = 0; k < 3; ++k) {
        p[k] = camera.to_camera(mesh.vertices.row(fv[k]).transpose());
      }
      const Eigen::Vector3d r = camera.ray(x + 0.5, y + 0.5);
      const Eigen::Vector3d e1 = p[1] - p[0];
      const Eigen::Vector3d e2 = p[2] - p[0];
      const Eigen::Vector3d n = e1.cross(e2);
      const double rn = n.dot(r);
      if (std::abs(rn) < 1e-300) continue;
      const double depth = n.dot(p[0]) / rn;
      RenderJacobian::Entry entry;
      entry.face = f;
      const Eigen::Vector3d gn0 = n + (e1 - e2).cross(p[0]);
      const Eigen::Vector3d gr0 = (e1 - e2).cross(r);
      const Eigen::Vector3d gn1 = e2.cross(p[0]);
      const Eigen::Vector3d gr1 = e2.cross(r);
      const Eigen::Vector3d gn2 = p[0].cross(e1);
      const Eigen::Vector3d gr2 = r.cross(e1);
      // Derivatives are taken in the camera frame; map to the mesh frame
      // through the pose rotation (d cam = R d world).
      entry.ddepth_dvertex.row(0) =
          ((gn0 - depth * gr0) / rn).transpose() * camera.rotation;
      entry.ddepth_dvertex.row(1) =
          ((gn1 - depth * gr1) / rn).transpose() * camera.rotation;
      entry.ddepth_dvertex.row(2) =
          ((gn2 - depth * gr2) / rn).transpose() * camera.rotation;
      jac.pixel_entry[y * camera.width + x] =
          static_cast<int>(jac.entries.size());
      jac.entries.push_back(entry);
    }
  }
  return jac;
}

TriMesh depth_to_pseudo_mesh(const DepthRaster& depth,
                             const CameraModel& camera, int stride) {
  if (stride < 1) {
    throw ValidationError("invalid-argument", "stride must be >= 1");
  }
  std::vector<int> xs, ys;
  for (int x = 0; x < depth.width; x += stride) xs.push_back(x);
  for (int y = 0; y < depth.height; y += stride) ys.push_back(y);
  const int gw = static_cast<int>(xs.size());
  const int gh = static_cast<int>(ys.size());
  std::vector<int> vid(static_cast<std::size_t>(gw) * gh, -1);
  std::vector<Eigen::Vector3d> verts;
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      if (!depth.depth_valid(xs[gx], ys[gy])) continue;
      vid[gy * gw + gx] = static_cast<int>(verts.size());
      // Back to the frame the source mesh lives in, so the pseudo mesh
      // renders through the same camera.
      verts.push_back(
          camera.to_world(backproject_pixel(depth, camera, xs[gx], ys[gy])));
    }
  }
  if (verts.empty()) {
    throw ValidationError("empty-input", "depth raster has no valid pixels");
  }
  TriMesh mesh;
  mesh.vertices.resize(static_cast<int>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    mesh.vertices.row(static_cast<int>(i)) = verts[i].transpose();
  }
  mesh.semantics =
      Eigen::MatrixXd::Zero(static_cast<int>(verts.size()), 0);
  for (int gy = 0; gy + 1 < gh; ++gy) {
    for (int gx = 0; gx + 1 < gw; ++gx) {
      const int v00 = vid[gy * gw + gx];
      const int v10 = vid[gy * gw + gx + 1];
      const int v01 = vid[(gy + 1) * gw + gx];
      const int v11 = vid[(gy + 1) * gw + gx + 1];
      if (v00 >= 0 && v10 >= 0 && v11 >= 0) {
        mesh.faces.push_back({v00, v10, v11});
      }
      if (v00 >= 0 && v11 >= 0 && v01 >= 0) {
        mesh.faces.push_back({v00, v11, v01});
      }
    }
  }
  mesh.edges = edges_from_faces(mesh.faces, mesh.vertex_count());
  return mesh;
}

Eigen::Vector3d backproject_pixel(const DepthRaster& depth,
                                  const CameraModel& camera, int px, int py) {
  const double d = depth.at(px, py);
  return camera.ray(px + 0.5, py + 0.5) * d;
}

Eigen::MatrixX3d backproject(const DepthRaster& depth,
                             const CameraModel& camera, int count,
                             std::uint64_t seed) {
  std::vector<std::pair<int, int>> valid;
  valid.reserve(depth.size());
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (depth.depth_valid(x, y)) valid.emplace_back(x, y);
    }
  }
  if (valid.empty()) {
    throw ValidationError("empty-input", "depth raster has no valid pixels");
  }
  Rng rng(seed);
  Eigen::MatrixX3d pts(count, 3);
  for (int i = 0; i < count; ++i) {
    const auto& [x, y] = valid[rng.uniform_index(valid.size())];
    pts.row(i) = backproject_pixel(depth, camera, x, y).transpose();
  }
  return pts;
}

int double_layer_pixels(const TriMesh& mesh, const CameraModel& camera,
                        double band) {
  const std::size_t npix =
      static_cast<std::size_t>(camera.width) * camera.height;
  // Depths of all faces covering each pixel, filled lazily.
  std::vector<std::vector<float>> stacks(npix);
  const auto edge_counts = edge_use_counts(mesh);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const ProjectedFace pf = project_face(mesh, camera, f, edge_counts);
    if (!pf.drawable) continue;
    for_each_covered_pixel(
        pf, camera.width, camera.height,
        [&](int x, int y, double, double, double, double inv_z) {
          stacks[static_cast<std::size_t>(y) * camera.width + x].push_back(
              static_cast<float>(1.0 / inv_z));
        });
  }
  int hits = 0;
  for (auto& stack : stacks) {
    if (stack.size() < 2) continue;
    std::sort(stack.begin(), stack.end());
    for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
      if (stack[i + 1] - stack[i] <= band) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

}  // namespace meshrecon
