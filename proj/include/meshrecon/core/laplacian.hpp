#pragma once

#include <Eigen/Sparse>

#include "meshrecon/core/mesh.hpp"

namespace meshrecon {

// Degree-normalized graph Laplacian L_n = I - G^-1 A over the mesh
// adjacency. Rows sum to zero; constants are annihilated.
struct LaplacianOperator {
  Eigen::SparseMatrix<double> matrix;  // n x n

  int size() const { return static_cast<int>(matrix.rows()); }
};

// Throws invalid-topology when a vertex has degree 0.
LaplacianOperator normalized_laplacian(const TriMesh& mesh);

// Symmetric normalized adjacency with self-loops,
// D^-1/2 (A + I) D^-1/2, used by the graph-convolution layers.
Eigen::SparseMatrix<double> normalized_adjacency(const TriMesh& mesh);

}  // namespace meshrecon
