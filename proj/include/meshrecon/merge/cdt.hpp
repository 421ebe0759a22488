#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace meshrecon {

struct Triangulation2D {
  std::vector<Eigen::Vector2d> points;
  std::vector<std::array<int, 2>> constraints;
  std::vector<std::array<int, 3>> triangles;  // CCW
};

// Constrained Delaunay triangulation by incremental insertion with Lawson
// flips, followed by flip-based constraint enforcement. Constraint edges
// always appear in the output; every other edge is locally Delaunay up to
// constraint visibility. Throws invalid-constraints when constraints cross.
Triangulation2D constrained_delaunay(
    const std::vector<Eigen::Vector2d>& points,
    const std::vector<std::array<int, 2>>& constraints);

}  // namespace meshrecon
