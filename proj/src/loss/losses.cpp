#include "meshrecon/loss/losses.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/laplacian.hpp"
#include "meshrecon/kernels/kernels.hpp"

namespace meshrecon {

namespace {

struct Soa {
  std::vector<double> x, y, z;
};

Soa pack(const Eigen::MatrixX3d& pts) {
  Soa s;
  const int n = static_cast<int>(pts.rows());
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n);
  for (int i = 0; i < n; ++i) {
    s.x[i] = pts(i, 0);
    s.y[i] = pts(i, 1);
    s.z[i] = pts(i, 2);
  }
  return s;
}

void nn(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q,
        std::vector<double>& dist, std::vector<int>& idx) {
  const Soa sp = pack(p);
  const Soa sq = pack(q);
  dist.resize(p.rows());
  idx.resize(p.rows());
  kernels::nn_sqdist(sp.x.data(), sp.y.data(), sp.z.data(), p.rows(),
                     sq.x.data(), sq.y.data(), sq.z.data(), q.rows(),
                     dist.data(), idx.data());
}

double softmax_inplace(Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    x[i] = std::exp(x[i] - m);
    sum += x[i];
  }
  x /= sum;
  return m + std::log(sum);  // log partition, for stable log-probs
}

int truth_class(const SemanticRaster& truth, int x, int y) {
  int best = 0;
  double bv = truth.at(x, y, 0);
  for (int c = 1; c < truth.channels; ++c) {
    if (truth.at(x, y, c) > bv) {
      bv = truth.at(x, y, c);
      best = c;
    }
  }
  return best;
}

struct SemanticEval {
  double value = 0.0;
  Raster dscore;  // d loss / d rendered score, zero outside the mask
};

// Shared two-pass evaluation over the masked pixels. Truth rows must be
// one-hot; rendered scores go through a softmax per pixel.
SemanticEval semantic_eval(const SemanticRaster& scores,
                           const SemanticRaster& truth,
                           const std::vector<std::uint8_t>& mask,
                           SemanticLossVariant variant,
                           const Eigen::VectorXd& class_weights,
                           bool want_grad) {
  const int s = scores.channels;
  if (truth.channels != s || truth.width != scores.width ||
      truth.height != scores.height) {
    throw ValidationError("invalid-argument",
                          "semantic raster dimensions do not match");
  }
  const bool weighted = class_weights.size() > 0;
  if (weighted && class_weights.size() != s) {
    throw ValidationError("invalid-argument",
                          "class weight count does not match class count");
  }
  Eigen::VectorXd wbar;
  if (weighted) wbar = class_weights / class_weights.sum();

  Eigen::VectorXd isum = Eigen::VectorXd::Zero(s);  // sum sigma_k * S_k
  Eigen::VectorXd asum = Eigen::VectorXd::Zero(s);  // sum sigma_k
  Eigen::VectorXd bsum = Eigen::VectorXd::Zero(s);  // sum S_k
  double ce_acc = 0.0;
  double weight_acc = 0.0;
  long count = 0;

  Eigen::VectorXd x(s);
  for (int y = 0; y < scores.height; ++y) {
    for (int px = 0; px < scores.width; ++px) {
      if (!mask[static_cast<std::size_t>(y) * scores.width + px]) continue;
      ++count;
      for (int c = 0; c < s; ++c) x[c] = scores.at(px, y, c);
      const double logz = softmax_inplace(x);
      const int t = truth_class(truth, px, y);
      for (int c = 0; c < s; ++c) {
        asum[c] += x[c];
        if (c == t) isum[c] += x[c];
      }
      bsum[t] += 1.0;
      const double logp = scores.at(px, y, t) - logz;
      const double w = weighted ? class_weights[t] : 1.0;
      weight_acc += w;
      if (variant == SemanticLossVariant::kCrossEntropy) {
        ce_acc += -w * logp;
      } else if (variant == SemanticLossVariant::kFocal) {
        ce_acc += -w * (1.0 - x[t]) * logp;
      }
    }
  }
  if (count == 0) {
    throw ValidationError("no-overlap", "no valid pixels for semantic loss");
  }

  SemanticEval out;
  switch (variant) {
    case SemanticLossVariant::kDice:
      if (weighted) {
        for (int c = 0; c < s; ++c) {
          const double den = asum[c] + bsum[c];
          if (den > 0.0) out.value -= wbar[c] * 2.0 * isum[c] / den;
        }
      } else {
        out.value = -2.0 * isum.sum() / (asum.sum() + bsum.sum());
      }
      break;
    case SemanticLossVariant::kJaccard:
      if (weighted) {
        for (int c = 0; c < s; ++c) {
          const double den = asum[c] + bsum[c] - isum[c];
          if (den > 0.0) out.value -= wbar[c] * isum[c] / den;
        }
      } else {
        out.value = -isum.sum() / (asum.sum() + bsum.sum() - isum.sum());
      }
      break;
    case SemanticLossVariant::kCrossEntropy:
    case SemanticLossVariant::kFocal:
      out.value = ce_acc / weight_acc;
      break;
  }

  if (!want_grad) return out;
  out.dscore = Raster::zeros(scores.width, scores.height, s);
  Eigen::VectorXd g(s);
  for (int y = 0; y < scores.height; ++y) {
    for (int px = 0; px < scores.width; ++px) {
      if (!mask[static_cast<std::size_t>(y) * scores.width + px]) continue;
      for (int c = 0; c < s; ++c) x[c] = scores.at(px, y, c);
      const double logz = softmax_inplace(x);
      const int t = truth_class(truth, px, y);
      switch (variant) {
        case SemanticLossVariant::kDice: {
          // d/d sigma of -sum_c wbar_c 2 I_c / (A_c + B_c)
          for (int c = 0; c < s; ++c) {
            double wc, den, ic;
            if (weighted) {
              wc = wbar[c];
              den = asum[c] + bsum[c];
              ic = isum[c];
            } else {
              wc = 1.0;
              den = asum.sum() + bsum.sum();
              ic = isum.sum();
            }
            const double skp = (c == t) ? 1.0 : 0.0;
            g[c] = -wc * 2.0 * (skp * den - ic) / (den * den);
          }
          break;
        }
        case SemanticLossVariant::kJaccard: {
          for (int c = 0; c < s; ++c) {
            double wc, den, ic;
            if (weighted) {
              wc = wbar[c];
              den = asum[c] + bsum[c] - isum[c];
              ic = isum[c];
            } else {
              wc = 1.0;
              den = asum.sum() + bsum.sum() - isum.sum();
              ic = isum.sum();
            }
            const double skp = (c == t) ? 1.0 : 0.0;
            g[c] = -wc * (skp * den + ic * skp - ic) / (den * den);
          }
          break;
        }
        case SemanticLossVariant::kCrossEntropy: {
          const double w = weighted ? class_weights[t] : 1.0;
          for (int c = 0; c < s; ++c) {
            out.dscore.at(px, y, c) =
                w * (x[c] - (c == t ? 1.0 : 0.0)) / weight_acc;
          }
          continue;  // closed form, no softmax-jacobian chain needed
        }
        case SemanticLossVariant::kFocal: {
          const double w = weighted ? class_weights[t] : 1.0;
          const double logp = std::log(x[t]);
          const double df = logp - (1.0 - x[t]) / x[t];
          for (int c = 0; c < s; ++c) {
            out.dscore.at(px, y, c) =
                w * df * x[c] * ((c == t ? 1.0 : 0.0) - x[t]) / weight_acc;
          }
          continue;
        }
      }
      // Chain d/d sigma through the softmax: dx_k = sig_k (g_k - g.sig).
      const double gdot = g.dot(x);
      for (int c = 0; c < s; ++c) {
        out.dscore.at(px, y, c) = x[c] * (g[c] - gdot);
      }
      (void)logz;
    }
  }
  return out;
}

std::vector<std::uint8_t> truth_mask(const SemanticRaster& truth) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(truth.width) * truth.height, 0);
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      mask[static_cast<std::size_t>(y) * truth.width + x] =
          truth.semantic_valid(x, y) ? 1 : 0;
    }
  }
  return mask;
}

// Rendered semantic scores plus the combined coverage/truth mask.
struct MeshSemantics {
  SemanticRaster scores;
  std::vector<std::uint8_t> mask;
};

MeshSemantics mesh_semantics(const TriMesh& mesh, const RenderBuffers& buf,
                             const SemanticRaster& truth) {
  const int s = mesh.class_count();
  if (s != truth.channels) {
    throw ValidationError("invalid-argument",
                          "mesh class count does not match truth raster");
  }
  MeshSemantics out;
  out.scores = Raster::zeros(truth.width, truth.height, s);
  out.mask.assign(static_cast<std::size_t>(truth.width) * truth.height, 0);
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      const int f = buf.pixel_face(x, y);
      if (f < 0 || !truth.semantic_valid(x, y)) continue;
      out.mask[static_cast<std::size_t>(y) * truth.width + x] = 1;
      const auto& fv = mesh.faces[f];
      const Eigen::Vector3d& b = buf.pixel_bary(x, y);
      for (int c = 0; c < s; ++c) {
        out.scores.at(x, y, c) = b[0] * mesh.semantics(fv[0], c) +
                                 b[1] * mesh.semantics(fv[1], c) +
                                 b[2] * mesh.semantics(fv[2], c);
      }
    }
  }
  return out;
}

Eigen::MatrixX3d pseudo_truth_cloud(const DepthRaster& truth,
                                    const CameraModel& camera, int samples,
                                    std::uint64_t seed, int stride) {
  const TriMesh pseudo = depth_to_pseudo_mesh(truth, camera, stride);
  return sample_surface(pseudo, samples, seed).points;
}

}  // namespace

double loss_l2(const DepthRaster& rendered, const DepthRaster& truth) {
  if (rendered.width != truth.width || rendered.height != truth.height) {
    throw ValidationError("invalid-argument",
                          "depth raster dimensions do not match");
  }
  double acc = 0.0;
  long count = 0;
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      if (rendered.depth_valid(x, y) && truth.depth_valid(x, y)) {
        acc += std::abs(rendered.at(x, y) - truth.at(x, y));
        ++count;
      }
    }
  }
  if (count == 0) {
    throw ValidationError("no-overlap", "no commonly valid depth pixels");
  }
  return acc / static_cast<double>(count);
}

double chamfer_asym(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q) {
  if (p.rows() == 0 || q.rows() == 0) {
    throw ValidationError("empty-input", "chamfer input set is empty");
  }
  std::vector<double> dist;
  std::vector<int> idx;
  nn(p, q, dist, idx);
  double acc = 0.0;
  for (const double d : dist) acc += d;
  return acc / static_cast<double>(p.rows());
}

double chamfer(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q) {
  return 0.5 * chamfer_asym(p, q) + 0.5 * chamfer_asym(q, p);
}

double loss_l3(const TriMesh& mesh, const DepthRaster& truth,
               const CameraModel& camera, int samples, std::uint64_t seed,
               int pseudo_stride) {
  const SurfaceSamples p = sample_surface(mesh, samples, seed);
  const Eigen::MatrixX3d q =
      pseudo_truth_cloud(truth, camera, samples, seed + 1, pseudo_stride);
  return chamfer(p.points, q);
}

RegularizerValues loss_regularizers(const TriMesh& mesh) {
  RegularizerValues out;
  const LaplacianOperator lap = normalized_laplacian(mesh);
  const int n = mesh.vertex_count();
  const Eigen::MatrixXd lv = lap.matrix * mesh.vertices;
  out.lV = lv.rowwise().norm().sum() / n;
  if (mesh.class_count() > 0) {
    const Eigen::MatrixXd lc = lap.matrix * mesh.semantics;
    out.lC = lc.rowwise().norm().sum() / n;
  }
  double acc = 0.0;
  for (const auto& e : mesh.edges) {
    acc += (mesh.vertices.row(e[0]) - mesh.vertices.row(e[1])).norm();
  }
  out.lE = acc / static_cast<double>(mesh.edges.size());
  return out;
}

double loss_semantic(const SemanticRaster& rendered,
                     const SemanticRaster& truth, SemanticLossVariant variant,
                     const Eigen::VectorXd& class_weights) {
  return semantic_eval(rendered, truth, truth_mask(truth), variant,
                       class_weights, false)
      .value;
}

LossReport total_loss(const TriMesh& mesh, const DepthRaster& truth_depth,
                      const SemanticRaster& truth_sem,
                      const CameraModel& camera, const LossWeights& weights,
                      std::uint64_t seed, const LossOptions& opts) {
  LossReport rep;
  RenderBuffers buf;
  const bool need_render = weights.w2 != 0.0 || weights.wS != 0.0;
  if (need_render) buf = rasterize(mesh, camera);
  if (weights.w2 != 0.0) {
    rep.l2 = loss_l2(buf.depth, truth_depth);
    for (int y = 0; y < truth_depth.height; ++y) {
      for (int x = 0; x < truth_depth.width; ++x) {
        if (buf.depth.depth_valid(x, y) && truth_depth.depth_valid(x, y)) {
          ++rep.valid_pixels;
        }
      }
    }
  }
  if (weights.w3 != 0.0) {
    rep.l3 = loss_l3(mesh, truth_depth, camera, opts.chamfer_samples, seed,
                     opts.pseudo_stride);
    rep.chamfer_samples = opts.chamfer_samples;
  }
  if (weights.wV != 0.0 || weights.wE != 0.0 || weights.wC != 0.0) {
    const RegularizerValues reg = loss_regularizers(mesh);
    rep.lV = weights.wV != 0.0 ? reg.lV : 0.0;
    rep.lE = weights.wE != 0.0 ? reg.lE : 0.0;
    rep.lC = weights.wC != 0.0 ? reg.lC : 0.0;
  }
  if (weights.wS != 0.0) {
    const MeshSemantics ms = mesh_semantics(mesh, buf, truth_sem);
    rep.lS = semantic_eval(ms.scores, truth_sem, ms.mask, opts.variant,
                           opts.class_weights, false)
                 .value;
  }
  rep.total = weights.w2 * rep.l2 + weights.w3 * rep.l3 +
              weights.wV * rep.lV + weights.wE * rep.lE +
              weights.wS * rep.lS + weights.wC * rep.lC;
  return rep;
}

TermGrad grad_l2(const TriMesh& mesh, const DepthRaster& truth,
                 const CameraModel& camera) {
  const auto [depth, jac] = render_depth_with_jacobian(mesh, camera);
  TermGrad out;
  out.dV = Eigen::MatrixX3d::Zero(mesh.vertex_count(), 3);
  out.dC = Eigen::MatrixXd::Zero(mesh.vertex_count(), mesh.class_count());
  long count = 0;
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      if (depth.depth_valid(x, y) && truth.depth_valid(x, y)) ++count;
    }
  }
  if (count == 0) {
    throw ValidationError("no-overlap", "no commonly valid depth pixels");
  }
  double acc = 0.0;
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      if (!depth.depth_valid(x, y) || !truth.depth_valid(x, y)) continue;
      const double r = depth.at(x, y) - truth.at(x, y);
      acc += std::abs(r);
      const double sgn = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      const RenderJacobian::Entry* e = jac.at(x, y);
      if (e == nullptr || sgn == 0.0) continue;
      const auto& fv = mesh.faces[e->face];
      for (int k = 0; k < 3; ++k) {
        out.dV.row(fv[k]) += (sgn / count) * e->ddepth_dvertex.row(k);
      }
    }
  }
  out.value = acc / static_cast<double>(count);
  return out;
}

double l3_from_provenance(const TriMesh& mesh, const SurfaceSamples& prov,
                          const Eigen::MatrixX3d& q_cloud) {
  const Eigen::MatrixX3d p = positions_from_provenance(mesh, prov);
  return chamfer(p, q_cloud);
}

TermGrad grad_l3(const TriMesh& mesh, const SurfaceSamples& prov,
                 const Eigen::MatrixX3d& q_cloud) {
  const Eigen::MatrixX3d p = positions_from_provenance(mesh, prov);
  const long np = p.rows();
  const long nq = q_cloud.rows();
  std::vector<double> dist_pq, dist_qp;
  std::vector<int> idx_pq, idx_qp;
  nn(p, q_cloud, dist_pq, idx_pq);
  nn(q_cloud, p, dist_qp, idx_qp);
  TermGrad out;
  out.dV = Eigen::MatrixX3d::Zero(mesh.vertex_count(), 3);
  out.dC = Eigen::MatrixXd::Zero(mesh.vertex_count(), mesh.class_count());
  double acc = 0.0;
  for (long i = 0; i < np; ++i) acc += dist_pq[i];
  double acc2 = 0.0;
  for (long i = 0; i < nq; ++i) acc2 += dist_qp[i];
  out.value = 0.5 * acc / np + 0.5 * acc2 / nq;

  auto scatter = [&](long sample, const Eigen::RowVector3d& g) {
    const auto& fv = mesh.faces[prov.face[sample]];
    for (int k = 0; k < 3; ++k) {
      out.dV.row(fv[k]) += prov.bary(sample, k) * g;
    }
  };
  for (long i = 0; i < np; ++i) {
    const Eigen::RowVector3d g =
        (p.row(i) - q_cloud.row(idx_pq[i])) / static_cast<double>(np);
    scatter(i, g);
  }
  for (long j = 0; j < nq; ++j) {
    const long i = idx_qp[j];
    const Eigen::RowVector3d g =
        (p.row(i) - q_cloud.row(j)) / static_cast<double>(nq);
    scatter(i, g);
  }
  return out;
}

RegularizerGrads grad_regularizers(const TriMesh& mesh) {
  RegularizerGrads out;
  const LaplacianOperator lap = normalized_laplacian(mesh);
  const int n = mesh.vertex_count();
  const Eigen::MatrixXd lv = lap.matrix * mesh.vertices;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, 3);
  double lv_acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double norm = lv.row(i).norm();
    lv_acc += norm;
    if (norm > 0.0) u.row(i) = lv.row(i) / norm;
  }
  out.values.lV = lv_acc / n;
  out.dV_laplacian = (lap.matrix.transpose() * u) / n;

  out.dV_edge = Eigen::MatrixX3d::Zero(n, 3);
  const double inv_edges = 1.0 / static_cast<double>(mesh.edges.size());
  double le_acc = 0.0;
  for (const auto& e : mesh.edges) {
    const Eigen::RowVector3d d =
        mesh.vertices.row(e[0]) - mesh.vertices.row(e[1]);
    const double len = d.norm();
    le_acc += len;
    if (len > 0.0) {
      out.dV_edge.row(e[0]) += inv_edges * d / len;
      out.dV_edge.row(e[1]) -= inv_edges * d / len;
    }
  }
  out.values.lE = le_acc * inv_edges;

  const int s = mesh.class_count();
  out.dC_laplacian = Eigen::MatrixXd::Zero(n, s);
  if (s > 0) {
    const Eigen::MatrixXd lc = lap.matrix * mesh.semantics;
    Eigen::MatrixXd uc = Eigen::MatrixXd::Zero(n, s);
    double lc_acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double norm = lc.row(i).norm();
      lc_acc += norm;
      if (norm > 0.0) uc.row(i) = lc.row(i) / norm;
    }
    out.values.lC = lc_acc / n;
    out.dC_laplacian = (lap.matrix.transpose() * uc) / n;
  }
  return out;
}

TermGrad grad_semantic(const TriMesh& mesh, const SemanticRaster& truth,
                       const CameraModel& camera, SemanticLossVariant variant,
                       const Eigen::VectorXd& class_weights) {
  const RenderBuffers buf = rasterize(mesh, camera);
  const MeshSemantics ms = mesh_semantics(mesh, buf, truth);
  const SemanticEval eval =
      semantic_eval(ms.scores, truth, ms.mask, variant, class_weights, true);
  TermGrad out;
  out.value = eval.value;
  out.dV = Eigen::MatrixX3d::Zero(mesh.vertex_count(), 3);
  out.dC = Eigen::MatrixXd::Zero(mesh.vertex_count(), mesh.class_count());
  const int s = mesh.class_count();
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) {
      if (!ms.mask[static_cast<std::size_t>(y) * truth.width + x]) continue;
      const int f = buf.pixel_face(x, y);
      const auto& fv = mesh.faces[f];
      const Eigen::Vector3d& b = buf.pixel_bary(x, y);
      for (int c = 0; c < s; ++c) {
        const double g = eval.dscore.at(x, y, c);
        if (g == 0.0) continue;
        for (int k = 0; k < 3; ++k) {
          out.dC(fv[k], c) += b[k] * g;
        }
      }
    }
  }
  return out;
}

TotalGrad grad_total(const TriMesh& mesh, const DepthRaster& truth_depth,
                     const SemanticRaster& truth_sem,
                     const CameraModel& camera, const LossWeights& weights,
                     std::uint64_t seed, const LossOptions& opts) {
  TotalGrad out;
  out.dV = Eigen::MatrixX3d::Zero(mesh.vertex_count(), 3);
  out.dC = Eigen::MatrixXd::Zero(mesh.vertex_count(), mesh.class_count());
  if (weights.w2 != 0.0) {
    const TermGrad g = grad_l2(mesh, truth_depth, camera);
    out.report.l2 = g.value;
    out.dV += weights.w2 * g.dV;
  }
  if (weights.w3 != 0.0) {
    const SurfaceSamples prov =
        sample_surface(mesh, opts.chamfer_samples, seed);
    const Eigen::MatrixX3d q = pseudo_truth_cloud(
        truth_depth, camera, opts.chamfer_samples, seed + 1,
        opts.pseudo_stride);
    const TermGrad g = grad_l3(mesh, prov, q);
    out.report.l3 = g.value;
    out.report.chamfer_samples = opts.chamfer_samples;
    out.dV += weights.w3 * g.dV;
  }
  if (weights.wV != 0.0 || weights.wE != 0.0 || weights.wC != 0.0) {
    const RegularizerGrads g = grad_regularizers(mesh);
    if (weights.wV != 0.0) {
      out.report.lV = g.values.lV;
      out.dV += weights.wV * g.dV_laplacian;
    }
    if (weights.wE != 0.0) {
      out.report.lE = g.values.lE;
      out.dV += weights.wE * g.dV_edge;
    }
    if (weights.wC != 0.0) {
      out.report.lC = g.values.lC;
      out.dC += weights.wC * g.dC_laplacian;
    }
  }
  if (weights.wS != 0.0) {
    const TermGrad g = grad_semantic(mesh, truth_sem, camera, opts.variant,
                                     opts.class_weights);
    out.report.lS = g.value;
    out.dC += weights.wS * g.dC;
  }
  out.report.total =
      weights.w2 * out.report.l2 + weights.w3 * out.report.l3 +
      weights.wV * out.report.lV + weights.wE * out.report.lE +
      weights.wS * out.report.lS + weights.wC * out.report.lC;
  return out;
}

EvalMetrics eval_metrics(const TriMesh& mesh, const DepthRaster& truth_depth,
                         const SemanticRaster& truth_sem,
                         const CameraModel& camera, double threshold,
                         std::uint64_t seed, const LossOptions& opts) {
  const RenderBuffers buf = rasterize(mesh, camera);
  EvalMetrics out;
  double abs_acc = 0.0, sq_acc = 0.0, rel_acc = 0.0, sqrel_acc = 0.0;
  long count = 0;
  for (int y = 0; y < truth_depth.height; ++y) {
    for (int x = 0; x < truth_depth.width; ++x) {
      if (!buf.depth.depth_valid(x, y) || !truth_depth.depth_valid(x, y)) {
        continue;
      }
      const double r = buf.depth.at(x, y) - truth_depth.at(x, y);
      abs_acc += std::abs(r);
      sq_acc += r * r;
      rel_acc += std::abs(r) / truth_depth.at(x, y);
      sqrel_acc += r * r / truth_depth.at(x, y);
      ++count;
    }
  }
  if (count == 0) {
    throw ValidationError("no-overlap", "no commonly valid depth pixels");
  }
  out.abs_diff = abs_acc / count;
  out.rmse = std::sqrt(sq_acc / count);
  out.abs_rel = rel_acc / count;
  out.sq_rel = sqrel_acc / count;

  const Eigen::MatrixX3d p =
      sample_surface(mesh, opts.chamfer_samples, seed).points;
  const Eigen::MatrixX3d q = pseudo_truth_cloud(
      truth_depth, camera, opts.chamfer_samples, seed + 1, opts.pseudo_stride);
  std::vector<double> dist_pq, dist_qp;
  std::vector<int> idx;
  nn(p, q, dist_pq, idx);
  nn(q, p, dist_qp, idx);
  double acc = 0.0, comp = 0.0, prec = 0.0, rec = 0.0, cham_p = 0.0,
         cham_q = 0.0;
  for (const double d : dist_pq) {
    cham_p += d;
    const double e = std::sqrt(d);
    acc += e;
    if (e < threshold) prec += 1.0;
  }
  for (const double d : dist_qp) {
    cham_q += d;
    const double e = std::sqrt(d);
    comp += e;
    if (e < threshold) rec += 1.0;
  }
  out.chamfer = 0.5 * cham_p / p.rows() + 0.5 * cham_q / q.rows();
  out.accuracy = acc / p.rows();
  out.completeness = comp / q.rows();
  out.precision = prec / p.rows();
  out.recall = rec / q.rows();
  out.fscore = (out.precision + out.recall) > 0.0
                   ? 2.0 * out.precision * out.recall /
                         (out.precision + out.recall)
                   : 0.0;

  const int s = mesh.class_count();
  out.iou = Eigen::VectorXd::Constant(s, -1.0);
  if (s > 0 && truth_sem.channels == s) {
    std::vector<long> inter(s, 0), uni(s, 0);
    for (int y = 0; y < truth_sem.height; ++y) {
      for (int x = 0; x < truth_sem.width; ++x) {
        const int f = buf.pixel_face(x, y);
        if (f < 0 || !truth_sem.semantic_valid(x, y)) continue;
        const auto& fv = mesh.faces[f];
        const Eigen::Vector3d& b = buf.pixel_bary(x, y);
        int pred = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < s; ++c) {
          const double v = b[0] * mesh.semantics(fv[0], c) +
                           b[1] * mesh.semantics(fv[1], c) +
                           b[2] * mesh.semantics(fv[2], c);
          if (v > best) {
            best = v;
            pred = c;
          }
        }
        const int t = truth_class(truth_sem, x, y);
        if (pred == t) {
          ++inter[t];
          ++uni[t];
        } else {
          ++uni[t];
          ++uni[pred];
        }
      }
    }
    for (int c = 0; c < s; ++c) {
      if (uni[c] > 0) {
        out.iou[c] = static_cast<double>(inter[c]) / uni[c];
      }
    }
  }
  return out;
}

std::string LossReport::to_kv() const {
  std::ostringstream os;
  os.precision(17);
  os << "l2 " << l2 << "\n"
     << "l3 " << l3 << "\n"
     << "lV " << lV << "\n"
     << "lE " << lE << "\n"
     << "lS " << lS << "\n"
     << "lC " << lC << "\n"
     << "total " << total << "\n"
     << "valid_pixels " << valid_pixels << "\n"
     << "chamfer_samples " << chamfer_samples << "\n";
  return os.str();
}

std::string EvalMetrics::to_kv() const {
  std::ostringstream os;
  os.precision(17);
  os << "abs_diff " << abs_diff << "\n"
     << "rmse " << rmse << "\n"
     << "abs_rel " << abs_rel << "\n"
     << "sq_rel " << sq_rel << "\n"
     << "chamfer " << chamfer << "\n"
     << "accuracy " << accuracy << "\n"
     << "completeness " << completeness << "\n"
     << "precision " << precision << "\n"
     << "recall " << recall << "\n"
     << "fscore " << fscore << "\n";
  double miou = 0.0;
  int present = 0;
  for (int c = 0; c < iou.size(); ++c) {
    if (iou[c] >= 0.0) {
      os << "iou_" << c << " " << iou[c] << "\n";
      miou += iou[c];
      ++present;
    }
  }
  if (present > 0) os << "miou " << miou / present << "\n";
  return os.str();
}

}  // namespace meshrecon
