#include "meshrecon/core/laplacian.hpp"

#include <cmath>
#include <vector>

#include "meshrecon/core/error.hpp"

namespace meshrecon {

namespace {

std::vector<int> vertex_degrees(const TriMesh& mesh) {
  std::vector<int> deg(mesh.vertex_count(), 0);
  for (const auto& e : mesh.edges) {
    ++deg[e[0]];
    ++deg[e[1]];
  }
  return deg;
}

}  // namespace

LaplacianOperator normalized_laplacian(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  const std::vector<int> deg = vertex_degrees(mesh);
  for (int i = 0; i < n; ++i) {
    if (deg[i] == 0) {
      throw ValidationError("invalid-topology",
                            "isolated vertex " + std::to_string(i));
    }
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * mesh.edges.size());
  for (int i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, 1.0);
  }
  for (const auto& e : mesh.edges) {
    triplets.emplace_back(e[0], e[1], -1.0 / deg[e[0]]);
    triplets.emplace_back(e[1], e[0], -1.0 / deg[e[1]]);
  }
  LaplacianOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

Eigen::SparseMatrix<double> normalized_adjacency(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  const std::vector<int> deg = vertex_degrees(mesh);
  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i] + 1));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * mesh.edges.size());
  for (int i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  }
  for (const auto& e : mesh.edges) {
    const double w = inv_sqrt[e[0]] * inv_sqrt[e[1]];
    triplets.emplace_back(e[0], e[1], w);
    triplets.emplace_back(e[1], e[0], w);
  }
  Eigen::SparseMatrix<double> ahat(n, n);
  ahat.setFromTriplets(triplets.begin(), triplets.end());
  return ahat;
}

}  // namespace meshrecon
