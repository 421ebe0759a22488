#include "meshrecon/core/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/rng.hpp"

namespace meshrecon {

std::vector<std::array<int, 2>> edges_from_faces(
    const std::vector<std::array<int, 3>>& faces, int vertex_count) {
  std::set<std::array<int, 2>> set;
  for (const auto& f : faces) {
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw ValidationError("invalid-topology", "degenerate face");
    }
    for (int k = 0; k < 3; ++k) {
      const int a = f[k];
      const int b = f[(k + 1) % 3];
      if (a < 0 || b < 0 || a >= vertex_count || b >= vertex_count) {
        throw ValidationError("invalid-topology", "face index out of range");
      }
      set.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return {set.begin(), set.end()};
}

GridTopology make_grid_topology(int side) {
  if (side < 2) {
    throw ValidationError("invalid-argument", "grid side must be >= 2");
  }
  GridTopology topo;
  topo.side = side;
  const int n = side * side;
  topo.uv.resize(n, 2);
  const double step = 1.0 / static_cast<double>(side - 1);
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const int idx = iy * side + ix;
      topo.uv(idx, 0) = ix * step;
      topo.uv(idx, 1) = iy * step;
    }
  }
  topo.faces.reserve(2 * (side - 1) * (side - 1));
  for (int iy = 0; iy + 1 < side; ++iy) {
    for (int ix = 0; ix + 1 < side; ++ix) {
      const int v00 = iy * side + ix;
      const int v10 = iy * side + ix + 1;
      const int v01 = (iy + 1) * side + ix;
      const int v11 = (iy + 1) * side + ix + 1;
      topo.faces.push_back({v00, v10, v11});
      topo.faces.push_back({v00, v11, v01});
    }
  }
  return topo;
}

TriMesh make_grid_mesh(int side, const CameraModel& camera) {
  return make_grid_mesh(side, camera, 0);
}

TriMesh make_grid_mesh(int side, const CameraModel& camera, int class_count) {
  const GridTopology topo = make_grid_topology(side);
  TriMesh mesh;
  const int n = topo.vertex_count();
  mesh.vertices.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    const double px = topo.uv(i, 0) * camera.width;
    const double py = topo.uv(i, 1) * camera.height;
    mesh.vertices.row(i) = camera.ray(px, py).transpose();
  }
  mesh.semantics = Eigen::MatrixXd::Zero(n, class_count);
  mesh.faces = topo.faces;
  mesh.edges = edges_from_faces(mesh.faces, n);
  return mesh;
}

BarycentricHit locate_pixel(const GridTopology& topology,
                            const Eigen::Vector2d& pixel,
                            const CameraModel& camera) {
  const double u = pixel.x() / camera.width;
  const double v = pixel.y() / camera.height;
  if (u < 0.0 || v < 0.0 || u > 1.0 || v > 1.0) {
    throw ValidationError("out-of-domain", "pixel outside the grid footprint");
  }
  const int cells = topology.side - 1;
  const double gx = u * cells;
  const double gy = v * cells;
  const int ix = std::min(static_cast<int>(gx), cells - 1);
  const int iy = std::min(static_cast<int>(gy), cells - 1);
  const double fx = gx - ix;
  const double fy = gy - iy;
  const int cell = iy * cells + ix;
  BarycentricHit hit;
  if (fy <= fx) {
    // Lower-right triangle (v00, v10, v11).
    hit.face = 2 * cell;
    hit.weights = {1.0 - fx, fx - fy, fy};
  } else {
    // Upper-left triangle (v00, v11, v01).
    hit.face = 2 * cell + 1;
    hit.weights = {1.0 - fy, fx, fy - fx};
  }
  return hit;
}

SurfaceSamples sample_surface(const TriMesh& mesh, int count,
                              std::uint64_t seed) {
  if (count < 1) {
    throw ValidationError("invalid-argument", "sample count must be >= 1");
  }
  if (mesh.faces.empty()) {
    throw ValidationError("degenerate-mesh", "mesh has no faces");
  }
  const int m = mesh.face_count();
  std::vector<double> cum(m);
  double total = 0.0;
  for (int f = 0; f < m; ++f) {
    total += face_area(mesh, f);
    cum[f] = total;
  }
  if (!(total > 0.0)) {
    throw ValidationError("degenerate-mesh", "mesh has zero total area");
  }
  Rng rng(seed);
  SurfaceSamples out;
  out.points.resize(count, 3);
  out.bary.resize(count, 3);
  out.face.resize(count);
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform01() * total;
    const int f = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const int face = std::min(f, m - 1);
    const double s = std::sqrt(rng.uniform01());
    const double t = rng.uniform01();
    const double b0 = 1.0 - s;
    const double b1 = s * (1.0 - t);
    const double b2 = s * t;
    out.face[i] = face;
    out.bary.row(i) << b0, b1, b2;
    const auto& fv = mesh.faces[face];
    out.points.row(i) = b0 * mesh.vertices.row(fv[0]) +
                        b1 * mesh.vertices.row(fv[1]) +
                        b2 * mesh.vertices.row(fv[2]);
  }
  return out;
}

Eigen::MatrixX3d positions_from_provenance(const TriMesh& mesh,
                                           const SurfaceSamples& samples) {
  const int count = static_cast<int>(samples.face.size());
  Eigen::MatrixX3d points(count, 3);
  for (int i = 0; i < count; ++i) {
    const auto& fv = mesh.faces[samples.face[i]];
    points.row(i) = samples.bary(i, 0) * mesh.vertices.row(fv[0]) +
                    samples.bary(i, 1) * mesh.vertices.row(fv[1]) +
                    samples.bary(i, 2) * mesh.vertices.row(fv[2]);
  }
  return points;
}

TriMesh to_global(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                  const Eigen::Vector3d& position) {
  const Eigen::Matrix3d err =
      rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-9 || rotation.determinant() < 0.0) {
    throw ValidationError("invalid-argument", "rotation is not orthonormal");
  }
  TriMesh out = mesh;
  out.vertices = (mesh.vertices * rotation.transpose()).rowwise() +
                 position.transpose();
  return out;
}

double face_area(const TriMesh& mesh, int face) {
  const auto& f = mesh.faces[face];
  const Eigen::Vector3d a = mesh.vertices.row(f[0]);
  const Eigen::Vector3d b = mesh.vertices.row(f[1]);
  const Eigen::Vector3d c = mesh.vertices.row(f[2]);
  return 0.5 * (b - a).cross(c - a).norm();
}

double median_edge_length(const TriMesh& mesh) {
  if (mesh.edges.empty()) return 0.0;
  std::vector<double> lengths;
  lengths.reserve(mesh.edges.size());
  for (const auto& e : mesh.edges) {
    lengths.push_back(
        (mesh.vertices.row(e[0]) - mesh.vertices.row(e[1])).norm());
  }
  std::nth_element(lengths.begin(), lengths.begin() + lengths.size() / 2,
                   lengths.end());
  return lengths[lengths.size() / 2];
}

}  // namespace meshrecon
