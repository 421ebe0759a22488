#include "meshrecon/refine/gcn.hpp"

#include <cmath>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/laplacian.hpp"
#include "meshrecon/core/rng.hpp"
#include "meshrecon/init/solver.hpp"
#include "meshrecon/kernels/kernels.hpp"

namespace meshrecon {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense products go through the runtime-dispatched kernel.
Eigen::MatrixXd kmatmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const RowMajor ra = a;
  const RowMajor rb = b;
  RowMajor rc(a.rows(), b.cols());
  kernels::matmul(ra.data(), rb.data(), rc.data(), ra.rows(), ra.cols(),
                  rb.cols());
  return rc;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre,
                          const Eigen::MatrixXd& grad) {
  return (pre.array() > 0.0).cast<double>() * grad.array();
}

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Eigen::MatrixXd glorot(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

GcnHead make_head(int feature_width, int hidden, int cond_width,
                  int out_width, std::uint64_t seed) {
  Rng rng(seed);
  GcnHead head;
  head.W1 = glorot(feature_width, hidden, rng);
  for (auto& layer : head.conv) {
    layer.Wn = glorot(hidden + cond_width, hidden, rng);
    layer.Ws = glorot(hidden + cond_width, hidden, rng);
    layer.b = Eigen::RowVectorXd::Zero(hidden);
  }
  head.W2 = glorot(hidden + cond_width, out_width, rng);
  return head;
}

GcnWeights make_weights(int feature_width, int hidden, int class_count,
                        int stages, bool semantic, std::uint64_t seed) {
  GcnWeights w;
  for (int s = 0; s < stages; ++s) {
    w.geometric.push_back(
        make_head(feature_width, hidden, 3, 3, seed + 101 * (s + 1)));
  }
  if (semantic) {
    w.semantic = make_head(feature_width, hidden, 3 + class_count,
                           class_count, seed + 997);
  }
  return w;
}

Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& features,
                          const TriMesh& mesh, const GcnLayerParams& params) {
  if (features.rows() != mesh.vertex_count() ||
      features.cols() != params.Wn.rows()) {
    throw ValidationError("invalid-argument",
                          "gcn layer feature dimensions do not match");
  }
  const Eigen::SparseMatrix<double> ahat = normalized_adjacency(mesh);
  const Eigen::MatrixXd mixed = ahat * features;
  Eigen::MatrixXd pre = kmatmul(mixed, params.Wn) +
                        kmatmul(features, params.Ws);
  pre.rowwise() += params.b;
  return relu(pre);
}

Eigen::MatrixXd conditioning_columns(const TriMesh& mesh, bool with_scores) {
  const int n = mesh.vertex_count();
  Eigen::MatrixXd v = mesh.vertices;
  // Per-frame whitening keeps the optimization well conditioned regardless
  // of the scene scale; it is an affine reparameterization of the weights.
  const Eigen::RowVector3d mean = v.colwise().mean();
  v.rowwise() -= mean;
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt(v.col(c).squaredNorm() / n);
    v.col(c) /= std::max(sd, 1e-9);
  }
  if (!with_scores) return v;
  return hcat(v, mesh.semantics);
}

HeadForward head_forward(const GcnHead& head,
                         const Eigen::SparseMatrix<double>& ahat,
                         const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& cond) {
  if (features.cols() != head.W1.rows()) {
    throw ValidationError("invalid-argument",
                          "vertex feature width does not match the head");
  }
  HeadForward f;
  f.feat = features;
  f.cond = cond;
  f.x1_pre = kmatmul(features, head.W1);
  f.x1 = relu(f.x1_pre);
  Eigen::MatrixXd x = f.x1;
  for (int i = 0; i < 3; ++i) {
    f.zin[i] = hcat(x, cond);
    const Eigen::MatrixXd mixed = ahat * f.zin[i];
    f.zpre[i] = kmatmul(mixed, head.conv[i].Wn) +
                kmatmul(f.zin[i], head.conv[i].Ws);
    f.zpre[i].rowwise() += head.conv[i].b;
    f.zout[i] = relu(f.zpre[i]);
    x = f.zout[i];
  }
  f.final_in = hcat(x, cond);
  f.delta = kmatmul(f.final_in, head.W2);
  return f;
}

void HeadGrads::add_scaled(const HeadGrads& other, double scale) {
  dW1 += scale * other.dW1;
  dW2 += scale * other.dW2;
  for (int i = 0; i < 3; ++i) {
    dconv[i].Wn += scale * other.dconv[i].Wn;
    dconv[i].Ws += scale * other.dconv[i].Ws;
    dconv[i].b += scale * other.dconv[i].b;
  }
}

HeadGrads head_backward(const GcnHead& head,
                        const Eigen::SparseMatrix<double>& ahat,
                        const HeadForward& fwd,
                        const Eigen::MatrixXd& ddelta) {
  HeadGrads g;
  const int hidden = static_cast<int>(head.W1.cols());
  g.dW2 = kmatmul(fwd.final_in.transpose(), ddelta);
  Eigen::MatrixXd dfinal_in = kmatmul(ddelta, head.W2.transpose());
  Eigen::MatrixXd dx = dfinal_in.leftCols(hidden);
  for (int i = 2; i >= 0; --i) {
    const Eigen::MatrixXd dpre = relu_mask(fwd.zpre[i], dx);
    const Eigen::MatrixXd mixed = ahat * fwd.zin[i];
    g.dconv[i].Wn = kmatmul(mixed.transpose(), dpre);
    g.dconv[i].Ws = kmatmul(fwd.zin[i].transpose(), dpre);
    g.dconv[i].b = dpre.colwise().sum();
    // Ahat is symmetric.
    const Eigen::MatrixXd dzin =
        ahat * kmatmul(dpre, head.conv[i].Wn.transpose()) +
        kmatmul(dpre, head.conv[i].Ws.transpose());
    dx = dzin.leftCols(hidden);
  }
  const Eigen::MatrixXd dx1_pre = relu_mask(fwd.x1_pre, dx);
  g.dW1 = kmatmul(fwd.feat.transpose(), dx1_pre);
  return g;
}

Eigen::MatrixX3d geometric_refine(const TriMesh& mesh,
                                  const Eigen::MatrixXd& vertex_features,
                                  const GcnHead& head) {
  if (vertex_features.rows() != mesh.vertex_count()) {
    throw ValidationError("invalid-argument",
                          "feature row count does not match vertex count");
  }
  const Eigen::SparseMatrix<double> ahat = normalized_adjacency(mesh);
  const Eigen::MatrixXd cond = conditioning_columns(mesh, false);
  return head_forward(head, ahat, vertex_features, cond).delta;
}

Eigen::MatrixXd semantic_init(const TriMesh& mesh, const Raster& seg_features,
                              const CameraModel& camera) {
  return associate_raster(mesh, seg_features, camera);
}

Eigen::MatrixXd semantic_refine(const TriMesh& mesh,
                                const Eigen::MatrixXd& vertex_features,
                                const GcnHead& head) {
  if (vertex_features.rows() != mesh.vertex_count()) {
    throw ValidationError("invalid-argument",
                          "feature row count does not match vertex count");
  }
  if (mesh.class_count() == 0) {
    throw ValidationError("invalid-argument",
                          "semantic refinement requires initialized scores");
  }
  const Eigen::SparseMatrix<double> ahat = normalized_adjacency(mesh);
  const Eigen::MatrixXd cond = conditioning_columns(mesh, true);
  return head_forward(head, ahat, vertex_features, cond).delta;
}

TriMesh run_refinement(const TriMesh& init_mesh, const Raster& rgb,
                       const SparseDepthSet& sparse,
                       const Raster& seg_features, const CameraModel& camera,
                       const GcnWeights& weights, const RefineConfig& config) {
  const Raster stack =
      assemble_input(rgb, init_mesh, sparse, camera, config.input_variant);
  const FeaturePyramid pyramid =
      toy_feature_pyramid(stack, config.channels, config.seed);
  TriMesh mesh = init_mesh;
  for (const GcnHead& head : weights.geometric) {
    const Eigen::MatrixXd vfeat = associate(mesh, pyramid, camera);
    const Eigen::MatrixX3d delta = geometric_refine(mesh, vfeat, head);
    mesh.vertices += delta;
  }
  if (weights.semantic.has_value()) {
    mesh.semantics = semantic_init(mesh, seg_features, camera);
    const Eigen::MatrixXd vfeat = associate(mesh, pyramid, camera);
    mesh.semantics += semantic_refine(mesh, vfeat, *weights.semantic);
  }
  return mesh;
}

namespace {

struct StageFrame {
  TriMesh mesh;             // stage input mesh
  Eigen::MatrixXd vfeat;    // frozen features at the stage input
  SurfaceSamples prov;      // frozen surface-sample provenance
  Eigen::MatrixX3d q_cloud; // frozen ground-truth cloud
  Eigen::SparseMatrix<double> ahat;
  Eigen::MatrixXd cond;
};

double geometric_frame_pass(const GcnHead& head, StageFrame& frame,
                            const TrainFrame& data,
                            const RefineConfig& config, HeadGrads* grads) {
  const HeadForward fwd =
      head_forward(head, frame.ahat, frame.vfeat, frame.cond);
  TriMesh refined = frame.mesh;
  refined.vertices += fwd.delta;
  LossWeights w = config.weights;
  w.wS = 0.0;
  w.wC = 0.0;
  Eigen::MatrixX3d dv = Eigen::MatrixX3d::Zero(refined.vertex_count(), 3);
  double total = 0.0;
  if (w.w2 != 0.0) {
    const TermGrad g = grad_l2(refined, data.depth, data.camera);
    total += w.w2 * g.value;
    dv += w.w2 * g.dV;
  }
  if (w.w3 != 0.0) {
    const TermGrad g = grad_l3(refined, frame.prov, frame.q_cloud);
    total += w.w3 * g.value;
    dv += w.w3 * g.dV;
  }
  if (w.wV != 0.0 || w.wE != 0.0) {
    const RegularizerGrads g = grad_regularizers(refined);
    total += w.wV * g.values.lV + w.wE * g.values.lE;
    dv += w.wV * g.dV_laplacian + w.wE * g.dV_edge;
  }
  if (grads != nullptr) {
    *grads = head_backward(head, frame.ahat, fwd, dv);
  }
  return total;
}

double semantic_frame_pass(const GcnHead& head, StageFrame& frame,
                           const TrainFrame& data, const RefineConfig& config,
                           HeadGrads* grads) {
  const HeadForward fwd =
      head_forward(head, frame.ahat, frame.vfeat, frame.cond);
  TriMesh refined = frame.mesh;
  refined.semantics += fwd.delta;
  double total = 0.0;
  Eigen::MatrixXd dc =
      Eigen::MatrixXd::Zero(refined.vertex_count(), refined.class_count());
  if (config.weights.wS != 0.0) {
    const TermGrad g =
        grad_semantic(refined, data.sem, data.camera,
                      SemanticLossVariant::kDice, config.class_weights);
    total += config.weights.wS * g.value;
    dc += config.weights.wS * g.dC;
  }
  if (config.weights.wC != 0.0) {
    const RegularizerGrads g = grad_regularizers(refined);
    total += config.weights.wC * g.values.lC;
    dc += config.weights.wC * g.dC_laplacian;
  }
  if (grads != nullptr) {
    *grads = head_backward(head, frame.ahat, fwd, dc);
  }
  return total;
}

void apply_step(GcnHead& head, const HeadGrads& grads, double lr) {
  head.W1 -= lr * grads.dW1;
  head.W2 -= lr * grads.dW2;
  for (int i = 0; i < 3; ++i) {
    head.conv[i].Wn -= lr * grads.dconv[i].Wn;
    head.conv[i].Ws -= lr * grads.dconv[i].Ws;
    head.conv[i].b -= lr * grads.dconv[i].b;
  }
}

HeadGrads zero_grads(const GcnHead& head) {
  HeadGrads g;
  g.dW1 = Eigen::MatrixXd::Zero(head.W1.rows(), head.W1.cols());
  g.dW2 = Eigen::MatrixXd::Zero(head.W2.rows(), head.W2.cols());
  for (int i = 0; i < 3; ++i) {
    g.dconv[i].Wn =
        Eigen::MatrixXd::Zero(head.conv[i].Wn.rows(), head.conv[i].Wn.cols());
    g.dconv[i].Ws =
        Eigen::MatrixXd::Zero(head.conv[i].Ws.rows(), head.conv[i].Ws.cols());
    g.dconv[i].b = Eigen::RowVectorXd::Zero(head.conv[i].b.cols());
  }
  return g;
}

// Fixed-step descent with halving on loss increase. Reverts the step that
// increased the loss and retries with the smaller rate.
template <typename PassFn>
double descend(GcnHead& head, PassFn&& pass, double lr, int epochs,
               std::vector<double>& history) {
  double last = 0.0;
  bool have_last = false;
  GcnHead stable = head;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    HeadGrads grads = zero_grads(head);
    const double loss = pass(head, &grads);
    if (!std::isfinite(loss)) {
      head = stable;
      throw NumericalError("training-diverged",
                           "loss became non-finite during training");
    }
    history.push_back(loss);
    if (have_last && loss > last) {
      head = stable;
      lr *= 0.5;
      continue;
    }
    stable = head;
    last = loss;
    have_last = true;
    apply_step(head, grads, lr);
  }
  // Final evaluation so the returned weights are the stable ones.
  const double final_loss = pass(head, nullptr);
  if (!std::isfinite(final_loss) || (have_last && final_loss > last)) {
    head = stable;
    return last;
  }
  return final_loss;
}

}  // namespace

TrainResult train_toy(const std::vector<TrainFrame>& frames,
                      const RefineConfig& config) {
  if (frames.empty()) {
    throw ValidationError("empty-input", "no training frames");
  }
  TrainResult result;

  // Initialized meshes and frozen per-frame data.
  std::vector<TriMesh> meshes;
  std::vector<FeaturePyramid> pyramids;
  std::vector<Eigen::MatrixX3d> q_clouds;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const TrainFrame& fr = frames[i];
    const TriMesh flat = make_grid_mesh(config.side, fr.camera,
                                        fr.sem.channels);
    TriMesh init = initialize_mesh(flat, fr.sparse, fr.camera, config.w_reg);
    init.semantics = Eigen::MatrixXd::Zero(init.vertex_count(),
                                           fr.sem.channels);
    const Raster stack = assemble_input(fr.rgb, init, fr.sparse, fr.camera,
                                        config.input_variant);
    pyramids.push_back(
        toy_feature_pyramid(stack, config.channels, config.seed));
    meshes.push_back(std::move(init));
    const TriMesh pseudo =
        depth_to_pseudo_mesh(fr.depth, fr.camera, config.pseudo_stride);
    q_clouds.push_back(
        sample_surface(pseudo, config.chamfer_samples, config.seed + 13 * i)
            .points);
  }

  const int feat_width = static_cast<int>(
      std::accumulate(config.channels.begin(), config.channels.end(), 0));
  const int s = frames.front().sem.channels;
  result.weights = make_weights(feat_width, config.hidden, s, config.stages,
                                config.semantic, config.seed);
  if (config.epochs == 0) return result;

  // Geometric stages, trained one at a time on frozen stage inputs.
  for (int stage = 0; stage < config.stages; ++stage) {
    std::vector<StageFrame> stage_frames(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      StageFrame& sf = stage_frames[i];
      sf.mesh = meshes[i];
      sf.vfeat = associate(sf.mesh, pyramids[i], frames[i].camera);
      sf.prov = sample_surface(sf.mesh, config.chamfer_samples,
                               config.seed + 31 * i + stage);
      sf.q_cloud = q_clouds[i];
      sf.ahat = normalized_adjacency(sf.mesh);
      sf.cond = conditioning_columns(sf.mesh, false);
    }
    GcnHead& head = result.weights.geometric[stage];
    auto pass = [&](GcnHead& h, HeadGrads* grads) {
      double total = 0.0;
      HeadGrads frame_grads;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        total += geometric_frame_pass(h, stage_frames[i], frames[i], config,
                                      grads != nullptr ? &frame_grads
                                                       : nullptr);
        if (grads != nullptr) grads->add_scaled(frame_grads, 1.0);
      }
      return total;
    };
    descend(head, pass, config.learning_rate, config.epochs,
            result.loss_history);
    // Advance the meshes through the trained stage.
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const Eigen::MatrixX3d delta = geometric_refine(
          meshes[i], stage_frames[i].vfeat, head);
      meshes[i].vertices += delta;
    }
  }

  if (config.semantic && result.weights.semantic.has_value()) {
    std::vector<StageFrame> stage_frames(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      StageFrame& sf = stage_frames[i];
      meshes[i].semantics = semantic_init(meshes[i], frames[i].seg_features,
                                          frames[i].camera);
      sf.mesh = meshes[i];
      sf.vfeat = associate(sf.mesh, pyramids[i], frames[i].camera);
      sf.ahat = normalized_adjacency(sf.mesh);
      sf.cond = conditioning_columns(sf.mesh, true);
    }
    GcnHead& head = *result.weights.semantic;
    auto pass = [&](GcnHead& h, HeadGrads* grads) {
      double total = 0.0;
      HeadGrads frame_grads;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        total += semantic_frame_pass(h, stage_frames[i], frames[i], config,
                                     grads != nullptr ? &frame_grads
                                                      : nullptr);
        if (grads != nullptr) grads->add_scaled(frame_grads, 1.0);
      }
      return total;
    };
    descend(head, pass, config.learning_rate, config.epochs,
            result.loss_history);
  }
  return result;
}

}  // namespace meshrecon
