#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/render/raster.hpp"
#include "meshrecon/render/renderer.hpp"

namespace meshrecon {

// [w2, w3, wV, wE, wS, wC]; zero-weight terms are skipped entirely.
struct LossWeights {
  double w2 = 0.0;
  double w3 = 0.0;
  double wV = 0.0;
  double wE = 0.0;
  double wS = 0.0;
  double wC = 0.0;

  static LossWeights geometric() { return {3.0, 1.0, 0.5, 0.01, 0.0, 0.0}; }
  static LossWeights metric_semantic() {
    return {5.0, 1.0, 0.5, 0.01, 5.0, 0.5};
  }
};

enum class SemanticLossVariant { kDice, kCrossEntropy, kFocal, kJaccard };

struct LossReport {
  double l2 = 0.0;
  double l3 = 0.0;
  double lV = 0.0;
  double lE = 0.0;
  double lS = 0.0;
  double lC = 0.0;
  double total = 0.0;
  int valid_pixels = 0;
  int chamfer_samples = 0;

  std::string to_kv() const;
};

struct LossOptions {
  int chamfer_samples = 10000;
  int pseudo_stride = 1;
  SemanticLossVariant variant = SemanticLossVariant::kDice;
  Eigen::VectorXd class_weights;  // empty = single-aggregate form
};

// Mean absolute depth difference over pixels valid in both rasters.
double loss_l2(const DepthRaster& rendered, const DepthRaster& truth);

// Asymmetric Chamfer d(P, Q): mean over P of squared distance to the
// nearest point of Q.
double chamfer_asym(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q);

// Symmetric form (1/2) d(P,Q) + (1/2) d(Q,P).
double chamfer(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q);

// Samples the mesh surface and a pseudo ground-truth mesh triangulated from
// the depth image, then takes the symmetric Chamfer distance.
double loss_l3(const TriMesh& mesh, const DepthRaster& truth,
               const CameraModel& camera, int samples, std::uint64_t seed,
               int pseudo_stride = 1);

struct RegularizerValues {
  double lV = 0.0;  // (1/n) ||L_n V||_{2,1}
  double lE = 0.0;  // mean edge length
  double lC = 0.0;  // (1/n) ||L_n C||_{2,1}
};

RegularizerValues loss_regularizers(const TriMesh& mesh);

// Truth must be one-hot per valid pixel; rendered scores are softmaxed
// internally. Valid domain = pixels where truth is nonzero. Returns dice and
// jaccard in [-1, 0], ce and focal >= 0.
double loss_semantic(const SemanticRaster& rendered,
                     const SemanticRaster& truth, SemanticLossVariant variant,
                     const Eigen::VectorXd& class_weights = {});

LossReport total_loss(const TriMesh& mesh, const DepthRaster& truth_depth,
                      const SemanticRaster& truth_sem,
                      const CameraModel& camera, const LossWeights& weights,
                      std::uint64_t seed, const LossOptions& opts = {});

struct EvalMetrics {
  double abs_diff = 0.0;
  double rmse = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double chamfer = 0.0;
  double accuracy = 0.0;      // mean prediction-to-truth distance, meters
  double completeness = 0.0;  // mean truth-to-prediction distance, meters
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  Eigen::VectorXd iou;  // per class; -1 for classes absent from both

  std::string to_kv() const;
};

EvalMetrics eval_metrics(const TriMesh& mesh, const DepthRaster& truth_depth,
                         const SemanticRaster& truth_sem,
                         const CameraModel& camera, double threshold,
                         std::uint64_t seed, const LossOptions& opts = {});

// ----- analytic gradients (fixed visibility / fixed assignments) -----

struct TermGrad {
  double value = 0.0;
  Eigen::MatrixX3d dV;
  Eigen::MatrixXd dC;
};

TermGrad grad_l2(const TriMesh& mesh, const DepthRaster& truth,
                 const CameraModel& camera);

// l3 with frozen sample provenance and a fixed ground-truth cloud; nearest
// neighbors are the assignment at the evaluation point.
double l3_from_provenance(const TriMesh& mesh, const SurfaceSamples& prov,
                          const Eigen::MatrixX3d& q_cloud);
TermGrad grad_l3(const TriMesh& mesh, const SurfaceSamples& prov,
                 const Eigen::MatrixX3d& q_cloud);

struct RegularizerGrads {
  RegularizerValues values;
  Eigen::MatrixX3d dV_laplacian;  // d lV / dV
  Eigen::MatrixX3d dV_edge;       // d lE / dV
  Eigen::MatrixXd dC_laplacian;   // d lC / dC
};

RegularizerGrads grad_regularizers(const TriMesh& mesh);

// Gradient of the semantic loss with respect to the vertex scores, chained
// through the renderer's interpolation weights. dV is zero by construction
// (visibility and interpolation weights are held fixed).
TermGrad grad_semantic(const TriMesh& mesh, const SemanticRaster& truth,
                       const CameraModel& camera, SemanticLossVariant variant,
                       const Eigen::VectorXd& class_weights = {});

struct TotalGrad {
  LossReport report;
  Eigen::MatrixX3d dV;
  Eigen::MatrixXd dC;
};

TotalGrad grad_total(const TriMesh& mesh, const DepthRaster& truth_depth,
                     const SemanticRaster& truth_sem,
                     const CameraModel& camera, const LossWeights& weights,
                     std::uint64_t seed, const LossOptions& opts = {});

}  // namespace meshrecon
