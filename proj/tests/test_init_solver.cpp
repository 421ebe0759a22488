#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/laplacian.hpp"
#include "meshrecon/init/solver.hpp"
#include "meshrecon/render/renderer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace meshrecon;

namespace {

// Sparse measurements of a plane 1/depth = a*u + b*v + c at random pixels.
SparseDepthSet planar_measurements(int count, double a, double b, double c,
                                   const CameraModel& cam, Rng& rng) {
  SparseDepthSet out;
  std::set<std::pair<int, int>> seen;
  while (out.count() < count) {
    const double u = rng.uniform(0.02, 0.98);
    const double v = rng.uniform(0.02, 0.98);
    const double px = u * cam.width;
    const double py = v * cam.height;
    if (!seen.insert({int(px), int(py)}).second) continue;
    const double inv_depth = a * u + b * v + c;
    out.records.push_back({px, py, 1.0 / inv_depth});
  }
  return out;
}

}  // namespace

TEST_CASE("build_system") {
  const CameraModel cam = testutil::make_camera(64, 64);
  const GridTopology topo = make_grid_topology(5);
  SUBCASE("measurement at a vertex gives a unit row") {
    // Vertex (2, 2) at uv (0.5, 0.5) -> pixel (32, 32); index 12.
    SparseDepthSet sparse;
    sparse.records.push_back({32.0, 32.0, 2.0});
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    CHECK(sys.rho[0] == doctest::Approx(0.5));
    const Eigen::VectorXd row = sys.B.row(0);
    CHECK(row[12] == doctest::Approx(1.0));
    CHECK(row.sum() == doctest::Approx(1.0));
  }
  SUBCASE("diagonal midpoint splits the row between two vertices") {
    SparseDepthSet sparse;
    sparse.records.push_back({8.0, 8.0, 4.0});
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    const Eigen::VectorXd row = sys.B.row(0);
    int halves = 0;
    for (int i = 0; i < row.size(); ++i) {
      if (row[i] == doctest::Approx(0.5)) ++halves;
    }
    CHECK(halves == 2);
  }
  SUBCASE("planar scene satisfies B lambda = rho") {
    Rng rng(23);
    const SparseDepthSet sparse =
        planar_measurements(200, 0.05, -0.03, 0.2, cam, rng);
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    // lambda affine in uv is exactly representable on the grid.
    Eigen::VectorXd lambda(topo.vertex_count());
    for (int i = 0; i < topo.vertex_count(); ++i) {
      lambda[i] = 0.05 * topo.uv(i, 0) - 0.03 * topo.uv(i, 1) + 0.2;
    }
    CHECK((sys.B * lambda - sys.rho).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("out-of-grid measurement reported") {
    SparseDepthSet sparse;
    sparse.records.push_back({100.0, 5.0, 2.0});
    CHECK_THROWS_AS(build_system(topo, sparse, cam), ValidationError);
  }
}

TEST_CASE("solve_inverse_depths") {
  const CameraModel cam = testutil::make_camera(64, 64);
  SUBCASE("constant depth recovers the constant vector") {
    const TriMesh flat = make_grid_mesh(6, cam);
    const GridTopology topo = make_grid_topology(6);
    Rng rng(3);
    SparseDepthSet sparse;
    std::set<std::pair<int, int>> seen;
    while (sparse.count() < 40) {
      const double px = rng.uniform(1.0, 63.0);
      const double py = rng.uniform(1.0, 63.0);
      if (!seen.insert({int(px), int(py)}).second) continue;
      sparse.records.push_back({px, py, 5.0});
    }
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    const LaplacianOperator lap = normalized_laplacian(flat);
    for (const double w : {1e-3, 1.0, 100.0}) {
      const Eigen::VectorXd lambda = solve_inverse_depths(sys, lap, w);
      CHECK((lambda.array() - 0.2).abs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("single measurement fills the whole grid") {
    const TriMesh flat = make_grid_mesh(4, cam);
    const GridTopology topo = make_grid_topology(4);
    SparseDepthSet sparse;
    sparse.records.push_back({13.0, 21.0, 2.5});
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    const LaplacianOperator lap = normalized_laplacian(flat);
    const Eigen::VectorXd lambda = solve_inverse_depths(sys, lap, 1.0);
    CHECK((lambda.array() - 0.4).abs().maxCoeff() < 1e-10);
  }
  SUBCASE("matches the dense normal-equation oracle") {
    const int side = 24;
    const CameraModel big = testutil::make_camera(512, 512);
    const TriMesh flat = make_grid_mesh(side, big);
    const GridTopology topo = make_grid_topology(side);
    Rng rng(91);
    SparseDepthSet sparse;
    std::set<std::pair<int, int>> seen;
    while (sparse.count() < 200) {
      const double px = rng.uniform(0.0, 512.0);
      const double py = rng.uniform(0.0, 512.0);
      if (!seen.insert({int(px), int(py)}).second) continue;
      sparse.records.push_back({px, py, rng.uniform(20.0, 80.0)});
    }
    const MeasurementSystem sys = build_system(topo, sparse, big);
    const LaplacianOperator lap = normalized_laplacian(flat);
    const Eigen::VectorXd lambda = solve_inverse_depths(sys, lap, 1.0);

    const Eigen::MatrixXd bd = sys.B;
    const Eigen::MatrixXd ld = lap.matrix;
    const Eigen::MatrixXd normal =
        bd.transpose() * bd + ld.transpose() * ld;
    const Eigen::VectorXd oracle =
        oracles::dense_solve(normal, bd.transpose() * sys.rho);
    CHECK((lambda - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("rank-deficient system without regularization is rejected") {
    const TriMesh flat = make_grid_mesh(4, cam);
    const GridTopology topo = make_grid_topology(4);
    SparseDepthSet sparse;
    sparse.records.push_back({13.0, 21.0, 2.5});
    const MeasurementSystem sys = build_system(topo, sparse, cam);
    const LaplacianOperator lap = normalized_laplacian(flat);
    CHECK_THROWS_AS(solve_inverse_depths(sys, lap, 0.0), NumericalError);
  }
}

TEST_CASE("initialize_mesh") {
  const CameraModel cam = testutil::make_camera(64, 64);
  SUBCASE("constant depth renders constant") {
    const TriMesh flat = make_grid_mesh(8, cam);
    Rng rng(5);
    SparseDepthSet sparse;
    std::set<std::pair<int, int>> seen;
    while (sparse.count() < 60) {
      const double px = rng.uniform(0.5, 63.5);
      const double py = rng.uniform(0.5, 63.5);
      if (!seen.insert({int(px), int(py)}).second) continue;
      sparse.records.push_back({px, py, 5.0});
    }
    const TriMesh mesh = initialize_mesh(flat, sparse, cam, 1.0);
    const DepthRaster depth = render_depth(mesh, cam);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        CHECK(depth.at(x, y) == doctest::Approx(5.0).epsilon(1e-9));
      }
    }
  }
  SUBCASE("planar ramp recovered exactly") {
    // Every vertex covered by a measurement makes B full rank, so the
    // unregularized least squares reproduces the plane exactly.
    const int side = 8;
    const TriMesh flat = make_grid_mesh(side, cam);
    const GridTopology topo = make_grid_topology(side);
    const double a = 0.04, b = -0.02, c = 0.1;
    SparseDepthSet sparse;
    for (int i = 0; i < topo.vertex_count(); ++i) {
      const double u = topo.uv(i, 0);
      const double v = topo.uv(i, 1);
      sparse.records.push_back(
          {u * cam.width, v * cam.height, 1.0 / (a * u + b * v + c)});
    }
    const TriMesh mesh = initialize_mesh(flat, sparse, cam, 0.0);
    const DepthRaster depth = render_depth(mesh, cam);
    double max_err = 0.0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const double u = (x + 0.5) / 64.0;
        const double v = (y + 0.5) / 64.0;
        const double expected = 1.0 / (a * u + b * v + c);
        max_err = std::max(max_err, std::abs(depth.at(x, y) - expected));
      }
    }
    CHECK(max_err < 1e-6);
  }
  SUBCASE("vertices stay on their rays") {
    const TriMesh flat = make_grid_mesh(6, cam);
    Rng rng(11);
    SparseDepthSet sparse;
    std::set<std::pair<int, int>> seen;
    while (sparse.count() < 30) {
      const double px = rng.uniform(0.5, 63.5);
      const double py = rng.uniform(0.5, 63.5);
      if (!seen.insert({int(px), int(py)}).second) continue;
      sparse.records.push_back({px, py, rng.uniform(4.0, 6.0)});
    }
    const TriMesh mesh = initialize_mesh(flat, sparse, cam, 1.0);
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      const double z = mesh.vertices(i, 2);
      CHECK(mesh.vertices(i, 0) / z ==
            doctest::Approx(flat.vertices(i, 0)).epsilon(1e-12));
      CHECK(mesh.vertices(i, 1) / z ==
            doctest::Approx(flat.vertices(i, 1)).epsilon(1e-12));
    }
  }
  SUBCASE("first-order stationarity of the solved objective") {
    const CameraModel small = testutil::make_camera(32, 32);
    const TriMesh flat = make_grid_mesh(5, small);
    const GridTopology topo = make_grid_topology(5);
    Rng rng(13);
    SparseDepthSet sparse;
    std::set<std::pair<int, int>> seen;
    while (sparse.count() < 20) {
      const double px = rng.uniform(0.5, 31.5);
      const double py = rng.uniform(0.5, 31.5);
      if (!seen.insert({int(px), int(py)}).second) continue;
      sparse.records.push_back({px, py, rng.uniform(2.0, 4.0)});
    }
    const MeasurementSystem sys = build_system(topo, sparse, small);
    const LaplacianOperator lap = normalized_laplacian(flat);
    const double w = 1.0;
    const Eigen::VectorXd lambda = solve_inverse_depths(sys, lap, w);
    auto objective = [&](const Eigen::VectorXd& l) {
      return (sys.B * l - sys.rho).squaredNorm() +
             w * (lap.matrix * l).squaredNorm();
    };
    const double base = objective(lambda);
    Eigen::VectorXd perturbed = lambda;
    for (int i = 0; i < lambda.size(); ++i) {
      for (const double eps : {1e-4, -1e-4}) {
        perturbed[i] = lambda[i] + eps;
        CHECK(objective(perturbed) >= base);
        perturbed[i] = lambda[i];
      }
    }
  }
  SUBCASE("duplicate pixels rejected") {
    const TriMesh flat = make_grid_mesh(4, cam);
    SparseDepthSet sparse;
    sparse.records.push_back({10.2, 10.7, 2.0});
    sparse.records.push_back({10.9, 10.1, 3.0});
    CHECK_THROWS_AS(initialize_mesh(flat, sparse, cam, 1.0),
                    ValidationError);
  }
}
