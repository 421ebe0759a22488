#include "meshrecon/io/formats.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "meshrecon/core/error.hpp"

namespace meshrecon {

namespace {

[[noreturn]] void parse_fail(const std::string& path,
                             const std::string& what) {
  throw ValidationError("parse-error", path + ": " + what);
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) {
    throw ValidationError("parse-error", path + ": cannot open for writing");
  }
  return os;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) {
    throw ValidationError("parse-error", path + ": cannot open");
  }
  return is;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    parse_fail(path, "truncated at offset " +
                         std::to_string(static_cast<long>(is.tellg())));
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_raster(const std::string& path, const Raster& raster) {
  std::ofstream os = open_out(path, true);
  os << "TMRAST " << raster.width << " " << raster.height << " "
     << raster.channels << "\n";
  std::vector<float> buf(raster.data.size());
  for (std::size_t i = 0; i < raster.data.size(); ++i) {
    buf[i] = static_cast<float>(raster.data[i]);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

Raster read_raster(const std::string& path) {
  std::ifstream is = open_in(path, true);
  std::string header;
  if (!std::getline(is, header)) parse_fail(path, "missing header");
  std::istringstream hs(header);
  std::string magic;
  int w = 0, h = 0, c = 0;
  hs >> magic >> w >> h >> c;
  if (magic != "TMRAST" || w <= 0 || h <= 0 || c <= 0) {
    parse_fail(path, "bad raster header");
  }
  Raster out = Raster::zeros(w, h, c);
  std::vector<float> buf(out.data.size());
  const std::streamsize want =
      static_cast<std::streamsize>(buf.size() * sizeof(float));
  is.read(reinterpret_cast<char*>(buf.data()), want);
  if (is.gcount() != want) {
    parse_fail(path, "truncated payload at byte offset " +
                         std::to_string(header.size() + 1 + is.gcount()));
  }
  for (std::size_t i = 0; i < buf.size(); ++i) {
    out.data[i] = static_cast<double>(buf[i]);
  }
  return out;
}

void write_sparse(const std::string& path, const SparseDepthSet& sparse) {
  std::ofstream os = open_out(path, false);
  os.precision(17);
  os << "# u,v,depth\n";
  for (const auto& r : sparse.records) {
    os << r.u << "," << r.v << "," << r.depth << "\n";
  }
}

SparseDepthSet read_sparse(const std::string& path, int width, int height) {
  std::ifstream is = open_in(path, false);
  SparseDepthSet out;
  std::string line;
  int lineno = 0;
  std::set<std::pair<int, int>> seen;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    bool blank = true;
    for (const char ch : line) {
      if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
    }
    if (blank) continue;
    SparseDepthRecord rec;
    char c1 = 0, c2 = 0;
    std::istringstream ls(line);
    ls >> rec.u >> c1 >> rec.v >> c2 >> rec.depth;
    if (!ls || c1 != ',' || c2 != ',') {
      parse_fail(path, "line " + std::to_string(lineno) + ": expected u,v,depth");
    }
    if (!(rec.depth > 0.0) || !std::isfinite(rec.depth)) {
      throw ValidationError("validation-error",
                            path + ": line " + std::to_string(lineno) +
                                ": depth must be positive finite");
    }
    if (rec.u < 0.0 || rec.v < 0.0 || rec.u > width || rec.v > height) {
      throw ValidationError("validation-error",
                            path + ": line " + std::to_string(lineno) +
                                ": pixel outside image bounds");
    }
    if (!seen.insert({static_cast<int>(rec.u), static_cast<int>(rec.v)})
             .second) {
      throw ValidationError("validation-error",
                            path + ": line " + std::to_string(lineno) +
                                ": duplicate measurement pixel");
    }
    out.records.push_back(rec);
  }
  return out;
}

void write_camera(const std::string& path, const CameraModel& camera) {
  std::ofstream os = open_out(path, false);
  os.precision(17);
  os << "fx " << camera.fx << "\n";
  os << "fy " << camera.fy << "\n";
  os << "cx " << camera.cx << "\n";
  os << "cy " << camera.cy << "\n";
  os << "width " << camera.width << "\n";
  os << "height " << camera.height << "\n";
  os << "rotation";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) os << " " << camera.rotation(r, c);
  }
  os << "\n";
  os << "translation";
  for (int r = 0; r < 3; ++r) os << " " << camera.translation[r];
  os << "\n";
}

CameraModel read_camera(const std::string& path) {
  std::ifstream is = open_in(path, false);
  CameraModel cam;
  std::string key;
  bool have_rot = false, have_trans = false;
  while (is >> key) {
    if (key == "fx") {
      is >> cam.fx;
    } else if (key == "fy") {
      is >> cam.fy;
    } else if (key == "cx") {
      is >> cam.cx;
    } else if (key == "cy") {
      is >> cam.cy;
    } else if (key == "width") {
      is >> cam.width;
    } else if (key == "height") {
      is >> cam.height;
    } else if (key == "rotation") {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) is >> cam.rotation(r, c);
      }
      have_rot = true;
    } else if (key == "translation") {
      for (int r = 0; r < 3; ++r) is >> cam.translation[r];
      have_trans = true;
    } else {
      parse_fail(path, "unknown key '" + key + "'");
    }
    if (!is) parse_fail(path, "bad value for key '" + key + "'");
  }
  if (!have_rot || !have_trans || cam.width <= 0 || cam.height <= 0 ||
      cam.fx <= 0.0 || cam.fy <= 0.0) {
    throw ValidationError("validation-error",
                          path + ": incomplete camera definition");
  }
  if (!cam.rotation_orthonormal(1e-6)) {
    throw ValidationError("validation-error",
                          path + ": rotation is not orthonormal");
  }
  return cam;
}

void write_mesh_ply(const std::string& path, const TriMesh& mesh) {
  std::ofstream os = open_out(path, false);
  const int n = mesh.vertex_count();
  const int s = mesh.class_count();
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << n << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  for (int c = 0; c < s; ++c) {
    os << "property double score_" << c << "\n";
  }
  os << "property uchar label\n";
  os << "element face " << mesh.face_count() << "\n";
  os << "property list uchar int vertex_indices\n";
  os << "end_header\n";
  for (int i = 0; i < n; ++i) {
    std::ostringstream line;
    line.precision(9);
    line << static_cast<float>(mesh.vertices(i, 0)) << " "
         << static_cast<float>(mesh.vertices(i, 1)) << " "
         << static_cast<float>(mesh.vertices(i, 2));
    line.precision(17);
    int label = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < s; ++c) {
      line << " " << mesh.semantics(i, c);
      if (mesh.semantics(i, c) > best) {
        best = mesh.semantics(i, c);
        label = c;
      }
    }
    line << " " << label << "\n";
    os << line.str();
  }
  for (const auto& f : mesh.faces) {
    os << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
  }
}

TriMesh read_mesh_ply(const std::string& path) {
  std::ifstream is = open_in(path, false);
  std::string line;
  if (!std::getline(is, line) || line != "ply") parse_fail(path, "not a PLY");
  int n = -1, m = -1, score_count = 0;
  bool in_vertex = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok == "element") {
      std::string what;
      ls >> what;
      if (what == "vertex") {
        ls >> n;
        in_vertex = true;
      } else if (what == "face") {
        ls >> m;
        in_vertex = false;
      }
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (name.rfind("score_", 0) == 0) ++score_count;
    }
  }
  if (n < 0 || m < 0) parse_fail(path, "missing element counts");
  TriMesh mesh;
  mesh.vertices.resize(n, 3);
  mesh.semantics.resize(n, score_count);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(is, line)) parse_fail(path, "truncated vertex list");
    std::istringstream ls(line);
    int label;
    ls >> mesh.vertices(i, 0) >> mesh.vertices(i, 1) >> mesh.vertices(i, 2);
    for (int c = 0; c < score_count; ++c) ls >> mesh.semantics(i, c);
    ls >> label;
    if (!ls) parse_fail(path, "bad vertex line " + std::to_string(i));
  }
  mesh.faces.reserve(m);
  for (int i = 0; i < m; ++i) {
    if (!std::getline(is, line)) parse_fail(path, "truncated face list");
    std::istringstream ls(line);
    int count, a, b, c;
    ls >> count >> a >> b >> c;
    if (!ls || count != 3) {
      parse_fail(path, "bad face line " + std::to_string(i));
    }
    mesh.faces.push_back({a, b, c});
  }
  mesh.edges = edges_from_faces(mesh.faces, n);
  return mesh;
}

namespace {

void write_tensor(std::ostream& os, const std::string& name,
                  const Eigen::MatrixXd& t) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(t.rows()));
  put_u32(os, static_cast<std::uint32_t>(t.cols()));
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) {
      const double v = t(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char b[8];
      for (int k = 0; k < 8; ++k) {
        b[k] = static_cast<unsigned char>(bits >> (8 * k));
      }
      os.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

void head_tensors(const GcnHead& head, const std::string& prefix,
                  std::vector<std::pair<std::string, const Eigen::MatrixXd*>>&
                      out,
                  std::vector<Eigen::MatrixXd>& bias_storage) {
  out.emplace_back(prefix + "/W1", &head.W1);
  for (int i = 0; i < 3; ++i) {
    out.emplace_back(prefix + "/conv" + std::to_string(i) + "/Wn",
                     &head.conv[i].Wn);
    out.emplace_back(prefix + "/conv" + std::to_string(i) + "/Ws",
                     &head.conv[i].Ws);
    bias_storage.emplace_back(head.conv[i].b);
    out.emplace_back(prefix + "/conv" + std::to_string(i) + "/b",
                     &bias_storage.back());
  }
  out.emplace_back(prefix + "/W2", &head.W2);
}

}  // namespace

void write_weights(const std::string& path, const GcnWeights& weights) {
  std::ofstream os = open_out(path, true);
  os.write("TMGCN1", 6);
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors;
  std::vector<Eigen::MatrixXd> bias_storage;
  bias_storage.reserve(3 * (weights.geometric.size() + 1) * 2);
  for (std::size_t s = 0; s < weights.geometric.size(); ++s) {
    head_tensors(weights.geometric[s], "geo" + std::to_string(s), tensors,
                 bias_storage);
  }
  if (weights.semantic.has_value()) {
    head_tensors(*weights.semantic, "sem", tensors, bias_storage);
  }
  for (const auto& [name, t] : tensors) write_tensor(os, name, *t);
}

GcnWeights read_weights(const std::string& path) {
  std::ifstream is = open_in(path, true);
  char magic[6];
  if (!is.read(magic, 6) || std::memcmp(magic, "TMGCN1", 6) != 0) {
    parse_fail(path, "bad magic");
  }
  std::map<std::string, Eigen::MatrixXd> tensors;
  while (true) {
    is.peek();
    if (is.eof()) break;
    const std::uint32_t name_len = get_u32(is, path);
    if (name_len > 4096) parse_fail(path, "implausible tensor name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) parse_fail(path, "truncated name");
    const std::uint32_t rows = get_u32(is, path);
    const std::uint32_t cols = get_u32(is, path);
    Eigen::MatrixXd t(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        unsigned char b[8];
        if (!is.read(reinterpret_cast<char*>(b), 8)) {
          parse_fail(path, "truncated tensor payload of '" + name + "'");
        }
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) {
          bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
        }
        double v;
        std::memcpy(&v, &bits, 8);
        t(r, c) = v;
      }
    }
    tensors.emplace(std::move(name), std::move(t));
  }
  GcnWeights out;
  auto load_head = [&](const std::string& prefix, GcnHead& head) {
    auto need = [&](const std::string& name) -> const Eigen::MatrixXd& {
      const auto it = tensors.find(name);
      if (it == tensors.end()) {
        throw ValidationError("validation-error",
                              path + ": missing tensor '" + name + "'");
      }
      return it->second;
    };
    head.W1 = need(prefix + "/W1");
    for (int i = 0; i < 3; ++i) {
      head.conv[i].Wn = need(prefix + "/conv" + std::to_string(i) + "/Wn");
      head.conv[i].Ws = need(prefix + "/conv" + std::to_string(i) + "/Ws");
      head.conv[i].b = need(prefix + "/conv" + std::to_string(i) + "/b");
    }
    head.W2 = need(prefix + "/W2");
  };
  for (int s = 0;; ++s) {
    const std::string prefix = "geo" + std::to_string(s);
    if (tensors.find(prefix + "/W1") == tensors.end()) break;
    GcnHead head;
    load_head(prefix, head);
    out.geometric.push_back(std::move(head));
  }
  if (tensors.find("sem/W1") != tensors.end()) {
    GcnHead head;
    load_head("sem", head);
    out.semantic = std::move(head);
  }
  if (out.geometric.empty()) {
    throw ValidationError("validation-error",
                          path + ": no geometric heads found");
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os = open_out(path, false);
  for (const auto& e : entries) {
    os << e.frame_id << " " << e.rgb_path << " " << e.depth_path << " "
       << e.sem_path << " " << e.sparse_path << " " << e.camera_path << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is = open_in(path, false);
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    ls >> e.frame_id >> e.rgb_path >> e.depth_path >> e.sem_path >>
        e.sparse_path >> e.camera_path;
    if (!ls) {
      parse_fail(path, "line " + std::to_string(lineno) +
                           ": expected 6 fields");
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace meshrecon
