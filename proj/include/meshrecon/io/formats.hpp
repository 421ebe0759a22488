#pragma once

#include <string>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/init/solver.hpp"
#include "meshrecon/refine/gcn.hpp"
#include "meshrecon/render/raster.hpp"

namespace meshrecon {

// Binary raster: header "TMRAST <w> <h> <c>\n" then row-major little-endian
// 32-bit floats, (y, x, channel) order.
void write_raster(const std::string& path, const Raster& raster);
Raster read_raster(const std::string& path);

// Text lines "u,v,depth"; '#' starts a comment.
void write_sparse(const std::string& path, const SparseDepthSet& sparse);
SparseDepthSet read_sparse(const std::string& path, int width, int height);

// Key-value text: fx fy cx cy width height, rotation (9 row-major),
// translation (3).
void write_camera(const std::string& path, const CameraModel& camera);
CameraModel read_camera(const std::string& path);

// ASCII PLY with per-vertex x,y,z floats, score_0..score_{s-1} doubles and
// a uchar label holding the argmax score.
void write_mesh_ply(const std::string& path, const TriMesh& mesh);
TriMesh read_mesh_ply(const std::string& path);

// Versioned binary weights: magic "TMGCN1", then per tensor: u32 name
// length, name bytes, u32 rows, u32 cols, row-major f64; little-endian.
void write_weights(const std::string& path, const GcnWeights& weights);
GcnWeights read_weights(const std::string& path);

struct ManifestEntry {
  std::string frame_id;
  std::string rgb_path;
  std::string depth_path;
  std::string sem_path;
  std::string sparse_path;
  std::string camera_path;
};

// One line per frame:
// frame_id rgb_path depth_path sem_path sparse_path camera_path
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace meshrecon
