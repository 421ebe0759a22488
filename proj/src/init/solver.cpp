#include "meshrecon/init/solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <set>

#include "meshrecon/core/error.hpp"

namespace meshrecon {

void validate_sparse(const SparseDepthSet& sparse, int width, int height) {
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < sparse.records.size(); ++i) {
    const auto& r = sparse.records[i];
    if (!(r.depth > 0.0) || !std::isfinite(r.depth)) {
      throw ValidationError(
          "validation-error",
          "record " + std::to_string(i) + ": depth must be positive finite");
    }
    if (r.u < 0.0 || r.v < 0.0 || r.u > width || r.v > height) {
      throw ValidationError(
          "validation-error",
          "record " + std::to_string(i) + ": pixel outside image bounds");
    }
    const std::pair<int, int> cell{static_cast<int>(r.u),
                                   static_cast<int>(r.v)};
    if (!seen.insert(cell).second) {
      throw ValidationError(
          "validation-error",
          "record " + std::to_string(i) + ": duplicate measurement pixel");
    }
  }
}

MeasurementSystem build_system(const GridTopology& topology,
                               const SparseDepthSet& sparse,
                               const CameraModel& camera) {
  const int k = sparse.count();
  const int n = topology.vertex_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(3 * static_cast<std::size_t>(k));
  MeasurementSystem sys;
  sys.rho.resize(k);
  for (int r = 0; r < k; ++r) {
    const auto& rec = sparse.records[r];
    BarycentricHit hit;
    try {
      hit = locate_pixel(topology, {rec.u, rec.v}, camera);
    } catch (const ValidationError&) {
      throw ValidationError("out-of-domain",
                            "measurement " + std::to_string(r) +
                                " falls outside the grid footprint");
    }
    const auto& fv = topology.faces[hit.face];
    for (int c = 0; c < 3; ++c) {
      if (hit.weights[c] != 0.0) {
        triplets.emplace_back(r, fv[c], hit.weights[c]);
      }
    }
    sys.rho[r] = 1.0 / rec.depth;
  }
  sys.B.resize(k, n);
  sys.B.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

Eigen::VectorXd solve_inverse_depths(const MeasurementSystem& system,
                                     const LaplacianOperator& laplacian,
                                     double w_reg) {
  if (w_reg < 0.0) {
    throw ValidationError("invalid-argument", "w_reg must be nonnegative");
  }
  const Eigen::SparseMatrix<double> bt = system.B.transpose();
  Eigen::SparseMatrix<double> normal = bt * system.B;
  if (w_reg > 0.0) {
    const Eigen::SparseMatrix<double> lt = laplacian.matrix.transpose();
    normal += (w_reg * (lt * laplacian.matrix)).pruned();
  }
  const Eigen::VectorXd rhs = bt * system.rho;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(normal);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("singular-system",
                         "normal matrix factorization failed");
  }
  const Eigen::VectorXd lambda = solver.solve(rhs);
  const double residual = (normal * lambda - rhs).norm();
  const double scale = std::max(rhs.norm(), 1.0);
  if (!std::isfinite(residual) || residual > 1e-10 * scale) {
    throw NumericalError("singular-system",
                         "normal equations are rank deficient");
  }
  return lambda;
}

TriMesh initialize_mesh(const TriMesh& flat, const SparseDepthSet& sparse,
                        const CameraModel& camera, double w_reg) {
  const int n = flat.vertex_count();
  const int side = static_cast<int>(std::lround(std::sqrt(double(n))));
  if (side * side != n || side < 2) {
    throw ValidationError("invalid-argument",
                          "flat mesh is not a square grid mesh");
  }
  validate_sparse(sparse, camera.width, camera.height);
  const GridTopology topo = make_grid_topology(side);
  const MeasurementSystem sys = build_system(topo, sparse, camera);
  const LaplacianOperator lap = normalized_laplacian(flat);
  const Eigen::VectorXd lambda = solve_inverse_depths(sys, lap, w_reg);
  TriMesh out = flat;
  for (int i = 0; i < n; ++i) {
    if (!(lambda[i] > 0.0)) {
      throw NumericalError("non-positive-depth",
                           "vertex " + std::to_string(i) +
                               " received inverse depth " +
                               std::to_string(lambda[i]));
    }
    out.vertices.row(i) = flat.vertices.row(i) / lambda[i];
  }
  return out;
}

}  // namespace meshrecon
