#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/feat/features.hpp"
#include "meshrecon/loss/losses.hpp"

namespace meshrecon {

struct GcnLayerParams {
  Eigen::MatrixXd Wn;     // neighbor weights, in x out
  Eigen::MatrixXd Ws;     // self weights, in x out
  Eigen::RowVectorXd b;   // bias, 1 x out
};

// One residual head: input projection, three graph-conv layers that each
// consume the hidden state concatenated with the conditioning columns
// (V for the geometric head, [V, C] for the semantic head), and an output
// projection over the last hidden state plus the same conditioning.
struct GcnHead {
  Eigen::MatrixXd W1;  // feature width x hidden
  std::array<GcnLayerParams, 3> conv;
  Eigen::MatrixXd W2;  // (hidden + cond) x out
};

struct GcnWeights {
  std::vector<GcnHead> geometric;   // one per stage
  std::optional<GcnHead> semantic;  // final stage only

  int stages() const { return static_cast<int>(geometric.size()); }
};

GcnHead make_head(int feature_width, int hidden, int cond_width,
                  int out_width, std::uint64_t seed);

GcnWeights make_weights(int feature_width, int hidden, int class_count,
                        int stages, bool semantic, std::uint64_t seed);

// One graph convolution: ReLU(Ahat X Wn + X Ws + b) with
// Ahat = D^-1/2 (A + I) D^-1/2 over the mesh adjacency.
Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& features,
                          const TriMesh& mesh, const GcnLayerParams& params);

// Vertex coordinate residuals; a refined mesh is (V + delta, C).
Eigen::MatrixX3d geometric_refine(const TriMesh& mesh,
                                  const Eigen::MatrixXd& vertex_features,
                                  const GcnHead& head);

// Initial per-vertex semantic scores sampled from a 2D segmentation score
// map at the vertex projections.
Eigen::MatrixXd semantic_init(const TriMesh& mesh, const Raster& seg_features,
                              const CameraModel& camera);

// Semantic residuals; final semantics are C + delta.
Eigen::MatrixXd semantic_refine(const TriMesh& mesh,
                                const Eigen::MatrixXd& vertex_features,
                                const GcnHead& head);

struct RefineConfig {
  int side = 32;  // grid mesh side; n = side^2
  int stages = 1;
  int hidden = 32;
  double learning_rate = 0.02;
  int epochs = 120;
  std::uint64_t seed = 7;
  LossWeights weights = LossWeights::geometric();
  bool semantic = false;
  std::array<int, 4> channels{16, 16, 32, 32};
  double w_reg = 1.0;
  int chamfer_samples = 2000;   // training-time sample count
  int pseudo_stride = 2;        // training-time pseudo mesh stride
  InputVariant input_variant = InputVariant::kRgbRdEdt;
  Eigen::VectorXd class_weights;
};

// Full two-stage refinement of an initialized mesh.
TriMesh run_refinement(const TriMesh& init_mesh, const Raster& rgb,
                       const SparseDepthSet& sparse,
                       const Raster& seg_features, const CameraModel& camera,
                       const GcnWeights& weights, const RefineConfig& config);

struct TrainFrame {
  Raster rgb;
  DepthRaster depth;
  SemanticRaster sem;
  Raster seg_features;
  SparseDepthSet sparse;
  CameraModel camera;
};

struct TrainResult {
  GcnWeights weights;
  std::vector<double> loss_history;  // summed over frames, per epoch
};

// Stage-wise gradient descent with a fixed step halved whenever the loss
// increases. Deterministic under the config seed.
TrainResult train_toy(const std::vector<TrainFrame>& frames,
                      const RefineConfig& config);

// ----- internals exposed for gradient checking -----

struct HeadForward {
  Eigen::MatrixXd feat;                      // input features
  Eigen::MatrixXd cond;                      // conditioning columns
  Eigen::MatrixXd x1_pre, x1;                // input projection
  std::array<Eigen::MatrixXd, 3> zin;        // [hidden; cond] per layer
  std::array<Eigen::MatrixXd, 3> zpre, zout;
  Eigen::MatrixXd final_in;                  // [out3; cond]
  Eigen::MatrixXd delta;
};

HeadForward head_forward(const GcnHead& head,
                         const Eigen::SparseMatrix<double>& ahat,
                         const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& cond);

struct HeadGrads {
  Eigen::MatrixXd dW1;
  std::array<GcnLayerParams, 3> dconv;
  Eigen::MatrixXd dW2;

  void add_scaled(const HeadGrads& other, double scale);
};

HeadGrads head_backward(const GcnHead& head,
                        const Eigen::SparseMatrix<double>& ahat,
                        const HeadForward& fwd,
                        const Eigen::MatrixXd& ddelta);

// Per-frame whitened vertex coordinates used as conditioning input.
Eigen::MatrixXd conditioning_columns(const TriMesh& mesh, bool with_scores);

}  // namespace meshrecon
