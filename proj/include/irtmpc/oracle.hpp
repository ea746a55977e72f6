#pragma once

// Explicit planar polygons, used by the tests to check the implicit set
// calculus in n = 2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/setcalc.hpp"

namespace irtmpc::oracle {

using Vec2 = Eigen::Vector2d;

/// Convex polygon, vertices counter-clockwise. One vertex is a point, two a
/// segment.
struct Polygon2D {
  std::vector<Vec2> vertices;
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Andrew's monotone chain; drops collinear and duplicate points.
inline Polygon2D convex_hull(std::vector<Vec2> pts, double tol = 1e-12) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Vec2> uniq;
  for (const auto& p : pts)
    if (uniq.empty() || (p - uniq.back()).cwiseAbs().maxCoeff() > tol) uniq.push_back(p);
  if (uniq.size() <= 2) {
    if (uniq.size() == 2 && (uniq[0] - uniq[1]).norm() <= tol) uniq.pop_back();
    return {uniq};
  }
  double scale = 1.0;
  for (const auto& p : uniq) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = tol * scale * scale;
  std::vector<Vec2> h(2 * uniq.size());
  std::size_t k = 0;
  for (const auto& p : uniq) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= eps) --k;
    h[k++] = p;
  }
  for (std::size_t i = uniq.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], uniq[i]) <= eps) --k;
    h[k++] = uniq[i];
  }
  h.resize(k - 1);
  return {h};
}

inline double support_2d(const Polygon2D& P, const Vec2& y) {
  if (P.vertices.empty()) throw DataError("support_2d: empty polygon");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : P.vertices) best = std::max(best, y.dot(v));
  return best;
}

/// Closed membership with absolute tolerance on each edge.
inline bool member_2d(const Polygon2D& P, const Vec2& x, double tol = 1e-9) {
  const auto& v = P.vertices;
  if (v.empty()) return false;
  if (v.size() == 1) return (x - v[0]).norm() <= tol;
  if (v.size() == 2) {
    const Vec2 d = v[1] - v[0];
    const double t = std::clamp((x - v[0]).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (v[0] + t * d - x).norm() <= tol;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    const double len = (b - a).norm();
    if (cross(a, b, x) / len < -tol) return false;
  }
  return true;
}

inline Polygon2D transform(const Eigen::Matrix2d& M, const Polygon2D& P) {
  std::vector<Vec2> pts;
  for (const auto& v : P.vertices) pts.push_back(M * v);
  return convex_hull(pts);
}

inline Polygon2D scaled(const Polygon2D& P, double s) {
  Polygon2D out = P;
  for (auto& v : out.vertices) v *= s;
  if (s < 0) return convex_hull(out.vertices);
  return out;
}

namespace detail {

inline std::size_t lowest_vertex(const std::vector<Vec2>& v) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i].y() < v[k].y() || (v[i].y() == v[k].y() && v[i].x() < v[k].x())) k = i;
  return k;
}

}  // namespace detail

/// Minkowski sum by merging the edge sequences sorted by polar angle. Points
/// and segments go through the hull of pairwise sums instead.
inline Polygon2D minkowski_sum_2d(const Polygon2D& P, const Polygon2D& Q) {
  if (P.vertices.empty() || Q.vertices.empty()) return {};
  if (P.vertices.size() < 3 || Q.vertices.size() < 3) {
    std::vector<Vec2> pts;
    for (const auto& a : P.vertices)
      for (const auto& b : Q.vertices) pts.push_back(a + b);
    return convex_hull(pts);
  }
  const auto& a = P.vertices;
  const auto& b = Q.vertices;
  const std::size_t i0 = detail::lowest_vertex(a), j0 = detail::lowest_vertex(b);
  const std::size_t na = a.size(), nb = b.size();
  std::vector<Vec2> out;
  std::size_t i = 0, j = 0;
  while (i < na || j < nb) {
    out.push_back(a[(i0 + i) % na] + b[(j0 + j) % nb]);
    const Vec2 ea = a[(i0 + i + 1) % na] - a[(i0 + i) % na];
    const Vec2 eb = b[(j0 + j + 1) % nb] - b[(j0 + j) % nb];
    const double c = ea.x() * eb.y() - ea.y() * eb.x();
    if (j >= nb || (i < na && c > 0)) {
      ++i;
    } else if (i >= na || c < 0) {
      ++j;
    } else {
      ++i;
      ++j;
    }
  }
  return convex_hull(out);
}

/// Vertices of a bounded planar H-polyhedron, by pairwise row intersection.
inline Polygon2D vertices_of(const HPolyhedron& P, double tol = 1e-9);

struct HalfspaceIntersection {
  Polygon2D polygon;
  bool bounded = true;
};

/// {x : a_i x <= b_i}. Unbounded when the nonzero normals do not positively
/// span the plane (some angular gap between consecutive normals >= π).
inline HalfspaceIntersection intersect_halfspaces_2d(const MatrixXd& a,
                                                     const VectorXd& b,
                                                     double tol = 1e-9) {
  if (a.cols() != 2 || a.rows() != b.size())
    throw DataError("intersect_halfspaces_2d: expects rows in R^2");
  HalfspaceIntersection out;
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a.row(i).norm() == 0.0) continue;
    angles.push_back(std::atan2(a(i, 1), a(i, 0)));
  }
  std::sort(angles.begin(), angles.end());
  if (angles.size() < 3) {
    out.bounded = false;
  } else {
    double gap = angles.front() + 2 * std::numbers::pi - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
    out.bounded = gap < std::numbers::pi - 1e-12;
  }
  std::vector<Vec2> pts;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      Eigen::Matrix2d M;
      M << a.row(i), a.row(j);
      const double det = M.determinant();
      if (std::abs(det) <= 1e-14 * M.squaredNorm()) continue;
      const Vec2 p = M.inverse() * Vec2(b(i), b(j));
      bool ok = true;
      for (Eigen::Index k = 0; k < a.rows() && ok; ++k)
        ok = a.row(k).dot(p) <= b(k) + tol * std::max(1.0, std::abs(b(k)));
      if (ok) pts.push_back(p);
    }
  out.polygon = convex_hull(pts);
  return out;
}

inline Polygon2D vertices_of(const HPolyhedron& P, double tol) {
  auto r = intersect_halfspaces_2d(P.normals, P.offsets, tol);
  if (!r.bounded) throw DataError("vertices_of: polyhedron is unbounded");
  return r.polygon;
}

/// (1-α)⁻¹ (W ⊕ A_K W ⊕ ... ⊕ A_K^{N_S-1} W); scaling applied last.
inline Polygon2D explicit_S_2d(const ImplicitRPISet& S) {
  if (S.n() != 2) throw DataError("explicit_S_2d: n must be 2");
  const Polygon2D W = vertices_of(S.W());
  Polygon2D sum = W;
  for (int j = 1; j < S.N_S(); ++j)
    sum = minkowski_sum_2d(sum, transform(S.power(j), W));
  return scaled(sum, S.scale());
}

/// ∩_{k=0..N_Z} A_Z^{-k} Z_S as rows (ZS normals · A_Z^k, offsets).
inline HalfspaceIntersection explicit_Zf_2d(const ImplicitTerminalSet& T) {
  if (T.n() != 2) throw DataError("explicit_Zf_2d: n must be 2");
  const int p = T.ZS().rows();
  MatrixXd a((T.N_Z() + 1) * p, 2);
  VectorXd b((T.N_Z() + 1) * p);
  MatrixXd Pk = MatrixXd::Identity(2, 2);
  for (int k = 0; k <= T.N_Z(); ++k) {
    a.middleRows(k * p, p) = T.ZS().normals * Pk;
    b.segment(k * p, p) = T.ZS().offsets;
    Pk = T.A_Z() * Pk;
  }
  return intersect_halfspaces_2d(a, b);
}

/// 16 unit directions at equal angles.
inline std::vector<Vec2> compass(int count = 16) {
  std::vector<Vec2> out;
  for (int i = 0; i < count; ++i) {
    const double t = 2 * std::numbers::pi * i / count;
    out.emplace_back(std::cos(t), std::sin(t));
  }
  return out;
}

}  // namespace irtmpc::oracle
