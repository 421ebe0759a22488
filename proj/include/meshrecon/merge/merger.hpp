#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/merge/cdt.hpp"
#include "meshrecon/merge/cpd.hpp"
#include "meshrecon/synth/synth.hpp"

namespace meshrecon {

// World-frame mesh with per-vertex source keyframe ids.
struct GlobalMesh {
  TriMesh mesh;
  std::vector<int> provenance;

  bool empty() const { return mesh.vertex_count() == 0; }
};

struct CoverageResult {
  double fraction = 0.0;         // of the image area
  std::vector<int> global_faces; // global faces projecting into the image
};

CoverageResult coverage_fraction(const GlobalMesh& global,
                                 const CameraModel& camera);

// Projected 2D triangles (pixel coordinates) of a face subset.
struct Footprint2D {
  std::vector<std::array<Eigen::Vector2d, 3>> tris;
};

Footprint2D project_faces(const TriMesh& mesh, const std::vector<int>& faces,
                          const CameraModel& camera);

// Area of the intersection between a triangle and the footprint.
double footprint_overlap_area(const std::array<Eigen::Vector2d, 3>& tri,
                              const Footprint2D& footprint);

// Keeps exactly the local faces whose projections are interior-disjoint
// from the footprint (overlap below `area_fraction` of the face's own
// projected area). Vertices are kept; edges are rebuilt.
TriMesh remove_overlap_faces(const TriMesh& local,
                             const Footprint2D& footprint,
                             const CameraModel& camera,
                             double area_fraction = 1e-6,
                             std::vector<int>* removed_faces = nullptr);

struct MergeOutcome {
  GlobalMesh global;
  double coverage = 0.0;
  std::string action;  // "merge" or "skip-duplicate"
};

// Incremental merge of a camera-frame local mesh into the global mesh:
// coverage gate, CPD refinement of the overlapped global vertices toward
// the local surface, overlap face removal, constrained Delaunay stitching
// of the footprint gap, and a 3D lift through the existing vertices.
MergeOutcome merge_local(const GlobalMesh& global, const TriMesh& local,
                         const Pose& pose, const CameraModel& intrinsics,
                         double coverage_threshold, const CpdConfig& cpd,
                         int frame_id);

// Baseline: transform all local meshes to the world frame and concatenate.
GlobalMesh stack_baseline(const std::vector<TriMesh>& meshes,
                          const std::vector<Pose>& poses);

}  // namespace meshrecon
