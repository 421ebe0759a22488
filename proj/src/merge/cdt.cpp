#include "meshrecon/merge/cdt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "meshrecon/core/error.hpp"

namespace meshrecon {

namespace {

constexpr double kEps = 1e-13;

struct Tri {
  int v[3];    // CCW
  int adj[3];  // adj[k] shares edge (v[k+1], v[k+2]); -1 on the hull
  bool alive = true;
};

struct Mesh2d {
  std::vector<Eigen::Vector2d> pts;  // user points then 3 super vertices
  std::vector<Tri> tris;
  std::set<std::pair<int, int>> constrained;
  int last_alive = 0;

  static std::pair<int, int> key(int a, int b) {
    return {std::min(a, b), std::max(a, b)};
  }
  bool is_constrained(int a, int b) const {
    return constrained.count(key(a, b)) > 0;
  }

  double orient(int a, int b, int c) const {
    const Eigen::Vector2d& pa = pts[a];
    const Eigen::Vector2d& pb = pts[b];
    const Eigen::Vector2d& pc = pts[c];
    return (pb.x() - pa.x()) * (pc.y() - pa.y()) -
           (pb.y() - pa.y()) * (pc.x() - pa.x());
  }

  // d strictly inside the circumcircle of CCW (a, b, c).
  bool in_circle(int a, int b, int c, int d) const {
    const Eigen::Vector2d pa = pts[a] - pts[d];
    const Eigen::Vector2d pb = pts[b] - pts[d];
    const Eigen::Vector2d pc = pts[c] - pts[d];
    const double a2 = pa.squaredNorm();
    const double b2 = pb.squaredNorm();
    const double c2 = pc.squaredNorm();
    const double det = pa.x() * (pb.y() * c2 - b2 * pc.y()) -
                       pa.y() * (pb.x() * c2 - b2 * pc.x()) +
                       a2 * (pb.x() * pc.y() - pb.y() * pc.x());
    return det > kEps;
  }

  int edge_index(int t, int a, int b) const {
    for (int k = 0; k < 3; ++k) {
      const int u = tris[t].v[(k + 1) % 3];
      const int w = tris[t].v[(k + 2) % 3];
      if ((u == a && w == b) || (u == b && w == a)) return k;
    }
    return -1;
  }

  int vertex_index(int t, int v) const {
    for (int k = 0; k < 3; ++k) {
      if (tris[t].v[k] == v) return k;
    }
    return -1;
  }

  void set_adj(int t, int k, int n) {
    if (t >= 0) tris[t].adj[k] = n;
  }

  void link(int t, int k, int n) {
    set_adj(t, k, n);
    if (n >= 0) {
      const int nk =
          edge_index(n, tris[t].v[(k + 1) % 3], tris[t].v[(k + 2) % 3]);
      set_adj(n, nk, t);
    }
  }

  bool contains(int t, const Eigen::Vector2d& p, double eps) const {
    for (int k = 0; k < 3; ++k) {
      const int a = tris[t].v[(k + 1) % 3];
      const int b = tris[t].v[(k + 2) % 3];
      const double o = (pts[b].x() - pts[a].x()) * (p.y() - pts[a].y()) -
                       (pts[b].y() - pts[a].y()) * (p.x() - pts[a].x());
      if (o < -eps) return false;
    }
    return true;
  }

  int locate(const Eigen::Vector2d& p) const {
    int t = last_alive;
    if (!tris[t].alive) {
      t = -1;
      for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i) {
        if (tris[i].alive) {
          t = i;
          break;
        }
      }
    }
    for (int steps = 0; steps < 4 * static_cast<int>(tris.size()) + 16;
         ++steps) {
      int next = -1;
      for (int k = 0; k < 3; ++k) {
        const int a = tris[t].v[(k + 1) % 3];
        const int b = tris[t].v[(k + 2) % 3];
        const double o = (pts[b].x() - pts[a].x()) * (p.y() - pts[a].y()) -
                         (pts[b].y() - pts[a].y()) * (p.x() - pts[a].x());
        if (o < -kEps) {
          next = tris[t].adj[k];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    // Fallback: linear scan.
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
      if (tris[i].alive && contains(i, p, kEps)) return i;
    }
    throw NumericalError("invalid-constraints", "point location failed");
  }

  // Flips the edge shared by t and tris[t].adj[k]; returns the other
  // triangle. After the flip, t = (p, a, d) and n = (p, d, b) where the old
  // shared edge was (a, b), p = t's apex, d = neighbor's apex.
  int flip(int t, int k) {
    const int n = tris[t].adj[k];
    const int p = tris[t].v[k];
    const int a = tris[t].v[(k + 1) % 3];
    const int b = tris[t].v[(k + 2) % 3];
    const int nk = edge_index(n, a, b);
    const int d = tris[n].v[nk];
    // Outer neighbors.
    const int t_ab = tris[t].adj[(k + 1) % 3];  // edge (b, p)
    const int t_pa = tris[t].adj[(k + 2) % 3];  // edge (p, a)
    const int n_ad = tris[n].adj[vertex_index(n, b)];  // edge opposite b
    const int n_db = tris[n].adj[vertex_index(n, a)];  // edge opposite a
    tris[t].v[0] = p;
    tris[t].v[1] = a;
    tris[t].v[2] = d;
    tris[n].v[0] = p;
    tris[n].v[1] = d;
    tris[n].v[2] = b;
    // t edges: 0:(a,d) 1:(d,p) 2:(p,a); n edges: 0:(d,b) 1:(b,p) 2:(p,d)
    tris[t].adj[0] = n_ad;
    tris[t].adj[1] = n;
    tris[t].adj[2] = t_pa;
    tris[n].adj[0] = n_db;
    tris[n].adj[1] = t_ab;
    tris[n].adj[2] = t;
    if (n_ad >= 0) link(t, 0, n_ad);
    if (t_pa >= 0) link(t, 2, t_pa);
    if (n_db >= 0) link(n, 0, n_db);
    if (t_ab >= 0) link(n, 1, t_ab);
    return n;
  }

  void legalize(int t, int k) {
    const int n = tris[t].adj[k];
    if (n < 0) return;
    const int a = tris[t].v[(k + 1) % 3];
    const int b = tris[t].v[(k + 2) % 3];
    if (is_constrained(a, b)) return;
    const int nk = edge_index(n, a, b);
    const int d = tris[n].v[nk];
    if (!in_circle(tris[t].v[0], tris[t].v[1], tris[t].v[2], d)) return;
    flip(t, k);
    // After the flip t = (p, a, d), n = (p, d, b); recurse on the two edges
    // opposite p.
    legalize(t, 0);
    const int p = tris[t].v[0];
    legalize(n, vertex_index(n, p));
  }

  void insert_point(int pi) {
    const Eigen::Vector2d& p = pts[pi];
    const int t = locate(p);
    // On-edge check.
    int on_edge = -1;
    for (int k = 0; k < 3; ++k) {
      const int a = tris[t].v[(k + 1) % 3];
      const int b = tris[t].v[(k + 2) % 3];
      const double o = orient(a, b, pi);
      const double len = (pts[b] - pts[a]).norm();
      if (std::abs(o) <= 1e-12 * std::max(len, 1.0)) {
        on_edge = k;
        break;
      }
    }
    if (on_edge >= 0 && tris[t].adj[on_edge] >= 0) {
      split_edge(t, on_edge, pi);
    } else {
      split_face(t, pi);
    }
  }

  void split_face(int t, int pi) {
    const int v0 = tris[t].v[0];
    const int v1 = tris[t].v[1];
    const int v2 = tris[t].v[2];
    const int a0 = tris[t].adj[0];
    const int a1 = tris[t].adj[1];
    const int a2 = tris[t].adj[2];
    const int t0 = t;
    const int t1 = static_cast<int>(tris.size());
    const int t2 = t1 + 1;
    tris[t0] = Tri{{pi, v1, v2}, {a0, -1, -1}, true};
    tris.push_back(Tri{{pi, v2, v0}, {a1, -1, -1}, true});
    tris.push_back(Tri{{pi, v0, v1}, {a2, -1, -1}, true});
    tris[t0].adj[1] = t1;
    tris[t0].adj[2] = t2;
    tris[t1].adj[1] = t2;
    tris[t1].adj[2] = t0;
    tris[t2].adj[1] = t0;
    tris[t2].adj[2] = t1;
    if (a0 >= 0) link(t0, 0, a0);
    if (a1 >= 0) link(t1, 0, a1);
    if (a2 >= 0) link(t2, 0, a2);
    last_alive = t0;
    legalize(t0, 0);
    legalize(t1, 0);
    legalize(t2, 0);
  }

  void split_edge(int t, int k, int pi) {
    const int n = tris[t].adj[k];
    const int p = tris[t].v[k];
    const int a = tris[t].v[(k + 1) % 3];
    const int b = tris[t].v[(k + 2) % 3];
    const int nk = edge_index(n, a, b);
    const int d = tris[n].v[nk];
    const bool was_constrained = is_constrained(a, b);
    if (was_constrained) {
      constrained.erase(key(a, b));
      constrained.insert(key(a, pi));
      constrained.insert(key(pi, b));
    }
    const int t_bp = tris[t].adj[(k + 1) % 3];
    const int t_pa = tris[t].adj[(k + 2) % 3];
    const int n_out_b = tris[n].adj[vertex_index(n, b)];  // edge (d, a) side
    const int n_out_a = tris[n].adj[vertex_index(n, a)];  // edge (b, d) side
    const int t0 = t;                                      // (p, a, pi)
    const int t1 = n;                                      // (p, pi, b)
    const int t2 = static_cast<int>(tris.size());          // (d, pi, a)
    const int t3 = t2 + 1;                                 // (d, b, pi)
    tris[t0] = Tri{{p, a, pi}, {-1, -1, t_pa}, true};
    tris[t1] = Tri{{p, pi, b}, {-1, t_bp, -1}, true};
    tris.push_back(Tri{{d, pi, a}, {-1, -1, -1}, true});
    tris.push_back(Tri{{d, b, pi}, {-1, -1, -1}, true});
    // t0 edges: 0:(a,pi) 1:(pi,p) 2:(p,a)
    tris[t0].adj[0] = t2;
    tris[t0].adj[1] = t1;
    // t1 edges: 0:(pi,b) 1:(b,p) 2:(p,pi)
    tris[t1].adj[0] = t3;
    tris[t1].adj[2] = t0;
    // t2 edges: 0:(pi,a) 1:(a,d) 2:(d,pi)
    tris[t2].adj[0] = t0;
    tris[t2].adj[1] = n_out_b;
    tris[t2].adj[2] = t3;
    // t3 edges: 0:(b,pi) 1:(pi,d) 2:(d,b)
    tris[t3].adj[0] = t1;
    tris[t3].adj[1] = t2;
    tris[t3].adj[2] = n_out_a;
    if (t_pa >= 0) link(t0, 2, t_pa);
    if (t_bp >= 0) link(t1, 1, t_bp);
    if (n_out_b >= 0) link(t2, 1, n_out_b);
    if (n_out_a >= 0) link(t3, 2, n_out_a);
    last_alive = t0;
    legalize(t0, 2);
    legalize(t1, 1);
    legalize(t2, 1);
    legalize(t3, 2);
  }

  bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c,
                      const Eigen::Vector2d& d) const {
    auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
      return u.x() * v.y() - u.y() * v.x();
    };
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > kEps && d2 < -kEps) || (d1 < -kEps && d2 > kEps)) &&
           ((d3 > kEps && d4 < -kEps) || (d3 < -kEps && d4 > kEps));
  }

  bool edge_exists(int a, int b) const {
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      if (edge_index(t, a, b) >= 0) return true;
    }
    return false;
  }

  void insert_constraint(int ca, int cb) {
    if (ca == cb) {
      throw ValidationError("invalid-constraints",
                            "degenerate constraint edge");
    }
    if (edge_exists(ca, cb)) {
      constrained.insert(key(ca, cb));
      return;
    }
    // Collect edges crossing the segment, then flip them away.
    std::deque<std::pair<int, int>> queue;  // (triangle, edge index)
    std::vector<std::array<int, 2>> new_edges;
    auto collect = [&]() {
      queue.clear();
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        if (!tris[t].alive) continue;
        for (int k = 0; k < 3; ++k) {
          const int a = tris[t].v[(k + 1) % 3];
          const int b = tris[t].v[(k + 2) % 3];
          if (a > b) continue;  // visit each edge once
          if (a == ca || a == cb || b == ca || b == cb) continue;
          if (segments_cross(pts[ca], pts[cb], pts[a], pts[b])) {
            if (is_constrained(a, b)) {
              throw ValidationError("invalid-constraints",
                                    "constraint edges cross");
            }
            queue.emplace_back(t, k);
          }
        }
      }
    };
    collect();
    int guard = 0;
    const int guard_max = 64 * static_cast<int>(pts.size()) + 4096;
    while (!queue.empty()) {
      if (++guard > guard_max) {
        throw NumericalError("invalid-constraints",
                             "constraint enforcement did not converge");
      }
      auto [t, k] = queue.front();
      queue.pop_front();
      if (!tris[t].alive) {
        collect();
        continue;
      }
      const int a = tris[t].v[(k + 1) % 3];
      const int b = tris[t].v[(k + 2) % 3];
      if (edge_index(t, a, b) != k ||
          !segments_cross(pts[ca], pts[cb], pts[a], pts[b])) {
        continue;  // stale entry
      }
      const int n = tris[t].adj[k];
      if (n < 0) continue;
      const int p = tris[t].v[k];
      const int nk = edge_index(n, a, b);
      const int d = tris[n].v[nk];
      // Flip only strictly convex quadrilaterals.
      const bool convex = orient(p, a, d) > kEps && orient(d, b, p) > kEps;
      if (!convex) {
        queue.emplace_back(t, k);
        continue;
      }
      flip(t, k);
      // New edge is (p, d).
      if (segments_cross(pts[ca], pts[cb], pts[p], pts[d])) {
        queue.emplace_back(t, edge_index(t, p, d) >= 0 ? edge_index(t, p, d)
                                                       : 0);
        // Locate the actual holder of edge (p, d).
        if (edge_index(t, p, d) < 0) {
          queue.back() = {n, edge_index(n, p, d)};
        }
      } else {
        new_edges.push_back({p, d});
      }
    }
    if (!edge_exists(ca, cb)) {
      throw NumericalError("invalid-constraints",
                           "failed to recover constraint edge");
    }
    constrained.insert(key(ca, cb));
    // Restore local Delaunayness around the new edges.
    for (const auto& e : new_edges) {
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        if (!tris[t].alive) continue;
        const int k = edge_index(t, e[0], e[1]);
        if (k >= 0) {
          legalize(t, k);
          break;
        }
      }
    }
  }
};

}  // namespace

Triangulation2D constrained_delaunay(
    const std::vector<Eigen::Vector2d>& points,
    const std::vector<std::array<int, 2>>& constraints) {
  const int n = static_cast<int>(points.size());
  if (n < 3) {
    throw ValidationError("invalid-argument",
                          "triangulation needs at least 3 points");
  }
  // Normalize into the unit box so the predicates see O(1) magnitudes.
  Eigen::Vector2d lo = points[0];
  Eigen::Vector2d hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});

  Mesh2d m;
  m.pts.reserve(n + 3);
  for (const auto& p : points) m.pts.push_back((p - lo) / scale);
  m.pts.push_back({-10.0, -10.0});
  m.pts.push_back({12.0, -10.0});
  m.pts.push_back({0.5, 12.0});
  m.tris.push_back(Tri{{n, n + 1, n + 2}, {-1, -1, -1}, true});

  for (int i = 0; i < n; ++i) m.insert_point(i);
  for (const auto& c : constraints) {
    if (c[0] < 0 || c[1] < 0 || c[0] >= n || c[1] >= n) {
      throw ValidationError("invalid-constraints",
                            "constraint references an unknown point");
    }
    m.insert_constraint(c[0], c[1]);
  }

  Triangulation2D out;
  out.points = points;
  out.constraints = constraints;
  for (const Tri& t : m.tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.triangles.push_back({t.v[0], t.v[1], t.v[2]});
  }
  return out;
}

}  // namespace meshrecon
