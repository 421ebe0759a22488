#include "meshrecon/merge/merger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "meshrecon/core/error.hpp"
#include "meshrecon/render/renderer.hpp"

namespace meshrecon {

namespace {

CameraModel identity_camera(const CameraModel& intrinsics) {
  CameraModel cam = intrinsics;
  cam.rotation = Eigen::Matrix3d::Identity();
  cam.translation = Eigen::Vector3d::Zero();
  return cam;
}

double tri_area(const std::array<Eigen::Vector2d, 3>& t) {
  return 0.5 * std::abs((t[1] - t[0]).x() * (t[2] - t[0]).y() -
                        (t[1] - t[0]).y() * (t[2] - t[0]).x());
}

// Convex clip of a polygon against the CCW triangle's half planes.
std::vector<Eigen::Vector2d> clip_by_triangle(
    std::vector<Eigen::Vector2d> poly,
    const std::array<Eigen::Vector2d, 3>& tri) {
  std::array<Eigen::Vector2d, 3> ccw = tri;
  const double signed2 = (ccw[1] - ccw[0]).x() * (ccw[2] - ccw[0]).y() -
                         (ccw[1] - ccw[0]).y() * (ccw[2] - ccw[0]).x();
  if (signed2 < 0.0) std::swap(ccw[1], ccw[2]);
  for (int e = 0; e < 3 && !poly.empty(); ++e) {
    const Eigen::Vector2d& a = ccw[e];
    const Eigen::Vector2d& b = ccw[(e + 1) % 3];
    const Eigen::Vector2d dir = b - a;
    std::vector<Eigen::Vector2d> out;
    out.reserve(poly.size() + 2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Eigen::Vector2d& p = poly[i];
      const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
      const double dp = dir.x() * (p.y() - a.y()) - dir.y() * (p.x() - a.x());
      const double dq = dir.x() * (q.y() - a.y()) - dir.y() * (q.x() - a.x());
      if (dp >= 0.0) out.push_back(p);
      if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
        const double s = dp / (dp - dq);
        out.push_back(p + s * (q - p));
      }
    }
    poly = std::move(out);
  }
  return poly;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
    acc += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * std::abs(acc);
}

bool bbox_overlap(const std::array<Eigen::Vector2d, 3>& a,
                  const std::array<Eigen::Vector2d, 3>& b) {
  const double aminx = std::min({a[0].x(), a[1].x(), a[2].x()});
  const double amaxx = std::max({a[0].x(), a[1].x(), a[2].x()});
  const double aminy = std::min({a[0].y(), a[1].y(), a[2].y()});
  const double amaxy = std::max({a[0].y(), a[1].y(), a[2].y()});
  const double bminx = std::min({b[0].x(), b[1].x(), b[2].x()});
  const double bmaxx = std::max({b[0].x(), b[1].x(), b[2].x()});
  const double bminy = std::min({b[0].y(), b[1].y(), b[2].y()});
  const double bmaxy = std::max({b[0].y(), b[1].y(), b[2].y()});
  return aminx <= bmaxx && bminx <= amaxx && aminy <= bmaxy && bminy <= amaxy;
}

bool point_in_triangle(const Eigen::Vector2d& p,
                       const std::array<Eigen::Vector2d, 3>& t, double eps) {
  const double d1 = (t[1] - t[0]).x() * (p - t[0]).y() -
                    (t[1] - t[0]).y() * (p - t[0]).x();
  const double d2 = (t[2] - t[1]).x() * (p - t[1]).y() -
                    (t[2] - t[1]).y() * (p - t[1]).x();
  const double d3 = (t[0] - t[2]).x() * (p - t[2]).y() -
                    (t[0] - t[2]).y() * (p - t[2]).x();
  const bool neg = d1 < -eps || d2 < -eps || d3 < -eps;
  const bool pos = d1 > eps || d2 > eps || d3 > eps;
  return !(neg && pos);
}

bool point_in_footprint(const Eigen::Vector2d& p, const Footprint2D& fp) {
  for (const auto& t : fp.tris) {
    if (point_in_triangle(p, t, 1e-9)) return true;
  }
  return false;
}

// Undirected edges used by exactly one face.
std::vector<std::array<int, 2>> boundary_edges(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k];
      const int b = f[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<std::array<int, 2>> out;
  for (const auto& [e, c] : count) {
    if (c == 1) out.push_back({e.first, e.second});
  }
  return out;
}

}  // namespace

CoverageResult coverage_fraction(const GlobalMesh& global,
                                 const CameraModel& camera) {
  CoverageResult out;
  if (global.empty()) return out;
  const RenderBuffers buf = rasterize(global.mesh, camera);
  long covered = 0;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      if (buf.depth.depth_valid(x, y)) ++covered;
    }
  }
  out.fraction = static_cast<double>(covered) /
                 (static_cast<double>(camera.width) * camera.height);
  // Faces whose projection touches the image rectangle.
  for (int f = 0; f < global.mesh.face_count(); ++f) {
    const auto& fv = global.mesh.faces[f];
    double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
    bool front = true;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d cam =
          camera.to_camera(global.mesh.vertices.row(fv[k]).transpose());
      if (cam.z() <= 0.0) {
        front = false;
        break;
      }
      const Eigen::Vector2d px = camera.project(cam);
      minx = std::min(minx, px.x());
      maxx = std::max(maxx, px.x());
      miny = std::min(miny, px.y());
      maxy = std::max(maxy, px.y());
    }
    if (front && maxx >= 0.0 && minx <= camera.width && maxy >= 0.0 &&
        miny <= camera.height) {
      out.global_faces.push_back(f);
    }
  }
  return out;
}

Footprint2D project_faces(const TriMesh& mesh, const std::vector<int>& faces,
                          const CameraModel& camera) {
  Footprint2D fp;
  fp.tris.reserve(faces.size());
  for (const int f : faces) {
    const auto& fv = mesh.faces[f];
    std::array<Eigen::Vector2d, 3> tri;
    bool front = true;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d cam =
          camera.to_camera(mesh.vertices.row(fv[k]).transpose());
      if (cam.z() <= 0.0) {
        front = false;
        break;
      }
      tri[k] = camera.project(cam);
    }
    if (front) fp.tris.push_back(tri);
  }
  return fp;
}

double footprint_overlap_area(const std::array<Eigen::Vector2d, 3>& tri,
                              const Footprint2D& footprint) {
  double acc = 0.0;
  for (const auto& other : footprint.tris) {
    if (!bbox_overlap(tri, other)) continue;
    const std::vector<Eigen::Vector2d> poly =
        clip_by_triangle({tri[0], tri[1], tri[2]}, other);
    acc += polygon_area(poly);
  }
  return acc;
}

TriMesh remove_overlap_faces(const TriMesh& local,
                             const Footprint2D& footprint,
                             const CameraModel& camera, double area_fraction,
                             std::vector<int>* removed_faces) {
  const CameraModel cam = camera;
  TriMesh out;
  out.vertices = local.vertices;
  out.semantics = local.semantics;
  if (removed_faces != nullptr) removed_faces->clear();
  for (int f = 0; f < local.face_count(); ++f) {
    const auto& fv = local.faces[f];
    std::array<Eigen::Vector2d, 3> tri;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d c =
          cam.to_camera(local.vertices.row(fv[k]).transpose());
      tri[k] = cam.project(c);
    }
    const double own = tri_area(tri);
    const double overlap = footprint_overlap_area(tri, footprint);
    if (overlap > area_fraction * std::max(own, 1e-300)) {
      if (removed_faces != nullptr) removed_faces->push_back(f);
    } else {
      out.faces.push_back(local.faces[f]);
    }
  }
  if (!out.faces.empty()) {
    out.edges = edges_from_faces(out.faces, out.vertex_count());
  } else {
    out.edges.clear();
  }
  return out;
}

GlobalMesh stack_baseline(const std::vector<TriMesh>& meshes,
                          const std::vector<Pose>& poses) {
  if (meshes.size() != poses.size()) {
    throw ValidationError("invalid-argument",
                          "mesh and pose counts do not match");
  }
  GlobalMesh out;
  int total_vertices = 0;
  int classes = meshes.empty() ? 0 : meshes.front().class_count();
  for (const auto& m : meshes) total_vertices += m.vertex_count();
  out.mesh.vertices.resize(total_vertices, 3);
  out.mesh.semantics.resize(total_vertices, classes);
  out.provenance.resize(total_vertices);
  int offset = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (meshes[i].class_count() != classes) {
      throw ValidationError("invalid-argument",
                            "meshes carry different class counts");
    }
    const TriMesh global =
        to_global(meshes[i], poses[i].rotation, poses[i].position);
    const int n = global.vertex_count();
    out.mesh.vertices.middleRows(offset, n) = global.vertices;
    out.mesh.semantics.middleRows(offset, n) = global.semantics;
    for (const auto& f : global.faces) {
      out.mesh.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    }
    for (int v = 0; v < n; ++v) out.provenance[offset + v] = int(i);
    offset += n;
  }
  if (!out.mesh.faces.empty()) {
    out.mesh.edges = edges_from_faces(out.mesh.faces, total_vertices);
  }
  return out;
}

MergeOutcome merge_local(const GlobalMesh& global, const TriMesh& local,
                         const Pose& pose, const CameraModel& intrinsics,
                         double coverage_threshold, const CpdConfig& cpd,
                         int frame_id) {
  MergeOutcome outcome;
  if (global.empty()) {
    outcome.global.mesh = to_global(local, pose.rotation, pose.position);
    outcome.global.provenance.assign(local.vertex_count(), frame_id);
    outcome.coverage = 0.0;
    outcome.action = "merge";
    return outcome;
  }
  const CameraModel cam = camera_at(intrinsics, pose);
  const CameraModel local_cam = identity_camera(intrinsics);
  const CoverageResult cov = coverage_fraction(global, cam);
  outcome.coverage = cov.fraction;
  if (cov.fraction >= coverage_threshold) {
    outcome.global = global;
    outcome.action = "skip-duplicate";
    return outcome;
  }

  GlobalMesh merged = global;
  Footprint2D global_fp = project_faces(merged.mesh, cov.global_faces, cam);

  // Local faces made redundant by the global footprint; they are both the
  // removal set and the CPD registration target.
  std::vector<int> removed;
  TriMesh local_kept =
      remove_overlap_faces(local, global_fp, local_cam, 1e-6, &removed);

  if (!removed.empty() && !cov.global_faces.empty()) {
    // Source: overlapped global vertices, in the merging camera frame.
    std::set<int> source_set;
    for (const int f : cov.global_faces) {
      for (const int v : merged.mesh.faces[f]) source_set.insert(v);
    }
    const std::vector<int> source_ids(source_set.begin(), source_set.end());
    Eigen::MatrixX3d source(source_ids.size(), 3);
    for (std::size_t i = 0; i < source_ids.size(); ++i) {
      source.row(i) = cam.to_camera(
          merged.mesh.vertices.row(source_ids[i]).transpose());
    }
    TriMesh overlap_mesh;
    overlap_mesh.vertices = local.vertices;
    overlap_mesh.semantics = local.semantics;
    for (const int f : removed) overlap_mesh.faces.push_back(local.faces[f]);
    const int target_count =
        std::min<int>(4 * static_cast<int>(source_ids.size()), 5000);
    const Eigen::MatrixX3d target =
        sample_surface(overlap_mesh, target_count,
                       static_cast<std::uint64_t>(frame_id) * 7919 + 3)
            .points;
    CpdConfig conf = cpd;
    if (conf.beta <= 0.0) conf.beta = 2.0 * median_edge_length(local);
    const CpdResult reg = cpd_register(source, target, conf);
    for (std::size_t i = 0; i < source_ids.size(); ++i) {
      merged.mesh.vertices.row(source_ids[i]) =
          cam.to_world(reg.displaced.row(i).transpose()).transpose();
    }
    // Projections moved with the deformation.
    global_fp = project_faces(merged.mesh, cov.global_faces, cam);
    local_kept =
        remove_overlap_faces(local, global_fp, local_cam, 1e-6, &removed);
  }

  // Assemble: global vertices, then the referenced local vertices.
  std::vector<int> local_to_merged(local.vertex_count(), -1);
  std::vector<int> local_used;
  for (const auto& f : local_kept.faces) {
    for (const int v : f) {
      if (local_to_merged[v] < 0) {
        local_to_merged[v] = merged.mesh.vertex_count() +
                             static_cast<int>(local_used.size());
        local_used.push_back(v);
      }
    }
  }
  const TriMesh local_world =
      to_global(local, pose.rotation, pose.position);
  const int ng = merged.mesh.vertex_count();
  const int nl = static_cast<int>(local_used.size());
  const int classes = merged.mesh.class_count();
  Eigen::MatrixX3d vertices(ng + nl, 3);
  vertices.topRows(ng) = merged.mesh.vertices;
  Eigen::MatrixXd semantics(ng + nl, classes);
  semantics.topRows(ng) = merged.mesh.semantics;
  std::vector<int> provenance = merged.provenance;
  provenance.resize(ng + nl, frame_id);
  for (int i = 0; i < nl; ++i) {
    vertices.row(ng + i) = local_world.vertices.row(local_used[i]);
    if (classes > 0 && local.class_count() == classes) {
      semantics.row(ng + i) = local_world.semantics.row(local_used[i]);
    } else if (classes > 0) {
      semantics.row(ng + i).setZero();
    }
  }
  std::vector<std::array<int, 3>> faces = merged.mesh.faces;
  for (const auto& f : local_kept.faces) {
    faces.push_back({local_to_merged[f[0]], local_to_merged[f[1]],
                     local_to_merged[f[2]]});
  }

  // Stitch the footprint gap with a constrained Delaunay triangulation over
  // the two boundary rings, keeping existing triangle edges intact.
  Footprint2D kept_fp;
  {
    std::vector<int> kept_ids(local_kept.face_count());
    for (int i = 0; i < local_kept.face_count(); ++i) kept_ids[i] = i;
    kept_fp = project_faces(local_kept, kept_ids, local_cam);
  }
  try {
    const double margin_x = 0.5 * cam.width;
    const double margin_y = 0.5 * cam.height;
    std::vector<Eigen::Vector2d> points;
    std::vector<int> point_to_merged;
    std::map<int, int> global_pt, local_pt;
    auto add_global_point = [&](int v) {
      auto it = global_pt.find(v);
      if (it != global_pt.end()) return it->second;
      const Eigen::Vector3d c =
          cam.to_camera(merged.mesh.vertices.row(v).transpose());
      const int id = static_cast<int>(points.size());
      points.push_back(cam.project(c));
      point_to_merged.push_back(v);
      global_pt.emplace(v, id);
      return id;
    };
    auto add_local_point = [&](int v) {
      auto it = local_pt.find(v);
      if (it != local_pt.end()) return it->second;
      const Eigen::Vector3d c =
          local_cam.to_camera(local.vertices.row(v).transpose());
      const int id = static_cast<int>(points.size());
      points.push_back(local_cam.project(c));
      point_to_merged.push_back(local_to_merged[v]);
      local_pt.emplace(v, id);
      return id;
    };
    std::vector<std::array<int, 2>> constraints;
    for (const auto& e : boundary_edges(merged.mesh)) {
      bool ok = true;
      Eigen::Vector2d px[2];
      for (int k = 0; k < 2; ++k) {
        const Eigen::Vector3d c =
            cam.to_camera(merged.mesh.vertices.row(e[k]).transpose());
        if (c.z() <= 0.0) {
          ok = false;
          break;
        }
        px[k] = cam.project(c);
        if (px[k].x() < -margin_x || px[k].x() > cam.width + margin_x ||
            px[k].y() < -margin_y || px[k].y() > cam.height + margin_y) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      constraints.push_back({add_global_point(e[0]), add_global_point(e[1])});
    }
    const std::size_t global_constraints = constraints.size();
    for (const auto& e : boundary_edges(local_kept)) {
      constraints.push_back({add_local_point(e[0]), add_local_point(e[1])});
    }
    if (global_constraints > 0 &&
        constraints.size() > global_constraints && points.size() >= 3) {
      const Triangulation2D cdt = constrained_delaunay(points, constraints);
      for (const auto& t : cdt.triangles) {
        const Eigen::Vector2d centroid =
            (cdt.points[t[0]] + cdt.points[t[1]] + cdt.points[t[2]]) / 3.0;
        if (point_in_footprint(centroid, global_fp)) continue;
        if (point_in_footprint(centroid, kept_fp)) continue;
        faces.push_back({point_to_merged[t[0]], point_to_merged[t[1]],
                         point_to_merged[t[2]]});
      }
      outcome.action = "merge";
    } else {
      outcome.action = "merge";
    }
  } catch (const Error&) {
    outcome.global = global;
    outcome.action = "cdt-failed";
    return outcome;
  }

  outcome.global.mesh.vertices = std::move(vertices);
  outcome.global.mesh.semantics = std::move(semantics);
  outcome.global.mesh.faces = std::move(faces);
  outcome.global.mesh.edges =
      edges_from_faces(outcome.global.mesh.faces,
                       outcome.global.mesh.vertex_count());
  outcome.global.provenance = std::move(provenance);
  return outcome;
}

}  // namespace meshrecon
