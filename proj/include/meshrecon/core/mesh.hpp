#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "meshrecon/core/camera.hpp"

namespace meshrecon {

// Fixed-topology semantic triangle mesh: vertex coordinates, per-vertex
// class scores, faces, and the derived undirected edge set. Topology never
// changes after construction; only vertices and semantics are updated.
struct TriMesh {
  Eigen::MatrixX3d vertices;                // n x 3, meters
  Eigen::MatrixXd semantics;                // n x s, unnormalized scores
  std::vector<std::array<int, 3>> faces;    // m triples
  std::vector<std::array<int, 2>> edges;    // undirected, i < j, sorted

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  int class_count() const { return static_cast<int>(semantics.cols()); }
};

// Derives the deduplicated undirected edge set from the faces and validates
// indices and non-degeneracy.
std::vector<std::array<int, 2>> edges_from_faces(
    const std::vector<std::array<int, 3>>& faces, int vertex_count);

// Regular grid over the image plane. Vertex (ix, iy) has index iy*side + ix
// and uv (ix, iy) / (side-1). Every cell splits along the diagonal from its
// (i, j) corner to its (i+1, j+1) corner.
struct GridTopology {
  int side = 0;
  Eigen::MatrixX2d uv;                      // n x 2 in [0,1]^2
  std::vector<std::array<int, 3>> faces;

  int vertex_count() const { return side * side; }
};

GridTopology make_grid_topology(int side);

// Flat mesh of unit-depth rays through the uv grid: vertex i is
// [v_x, v_y, 1] with (v_x, v_y) the ray through uv_i. Semantics start zero.
TriMesh make_grid_mesh(int side, const CameraModel& camera);
TriMesh make_grid_mesh(int side, const CameraModel& camera, int class_count);

struct BarycentricHit {
  int face = -1;
  std::array<double, 3> weights{0.0, 0.0, 0.0};
};

// Locates a continuous pixel position in the grid's image-plane
// triangulation. Throws out-of-domain for pixels outside the image.
BarycentricHit locate_pixel(const GridTopology& topology,
                            const Eigen::Vector2d& pixel,
                            const CameraModel& camera);

// Area-proportional uniform samples over the mesh faces, with provenance so
// positions can be recomputed after the vertices move.
struct SurfaceSamples {
  Eigen::MatrixX3d points;
  std::vector<int> face;
  Eigen::MatrixX3d bary;
};

SurfaceSamples sample_surface(const TriMesh& mesh, int count,
                              std::uint64_t seed);

// Recomputes sample positions from frozen (face, barycentric) provenance.
Eigen::MatrixX3d positions_from_provenance(const TriMesh& mesh,
                                           const SurfaceSamples& samples);

// V -> V R^T + 1 p^T; topology and semantics unchanged.
TriMesh to_global(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                  const Eigen::Vector3d& position);

double face_area(const TriMesh& mesh, int face);
double median_edge_length(const TriMesh& mesh);

}  // namespace meshrecon
