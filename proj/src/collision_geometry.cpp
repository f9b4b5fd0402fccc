#include "catp/collision_geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace catp {

namespace {

constexpr double kCoincidenceTol = 1e-9;

void check_no_coincident(const PositionState& state) {
  const int N = state.robot_count();
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      if ((state.positions.row(i) - state.positions.row(j)).norm() <= kCoincidenceTol) {
        throw DegenerateGeometryError("neighbor_pairs: coincident robots " +
                                      std::to_string(i) + "," + std::to_string(j));
      }
    }
  }
}

bool all_collinear(const Eigen::MatrixXd& pts) {
  const int N = static_cast<int>(pts.rows());
  if (N < 3) return true;
  // Use the two farthest-from-first points to define the line direction.
  int anchor = 1;
  double best = 0.0;
  for (int i = 1; i < N; ++i) {
    const double d = (pts.row(i) - pts.row(0)).norm();
    if (d > best) {
      best = d;
      anchor = i;
    }
  }
  const Eigen::RowVector2d dir = (pts.row(anchor) - pts.row(0)).normalized();
  for (int i = 1; i < N; ++i) {
    const Eigen::RowVector2d rel = pts.row(i) - pts.row(0);
    const double cross = dir(0) * rel(1) - dir(1) * rel(0);
    if (std::abs(cross) > 1e-9 * std::max(1.0, rel.norm())) return false;
  }
  return true;
}

struct Triangle {
  std::array<int, 3> v;
  Eigen::Vector2d center;
  double radius_sq = 0.0;
  bool degenerate = false;
};

Triangle make_triangle(int a, int b, int c, const std::vector<Eigen::Vector2d>& pts) {
  Triangle t;
  t.v = {a, b, c};
  const Eigen::Vector2d& pa = pts[a];
  const Eigen::Vector2d& pb = pts[b];
  const Eigen::Vector2d& pc = pts[c];
  const Eigen::Vector2d ab = pb - pa;
  const Eigen::Vector2d ac = pc - pa;
  const double det = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  const double scale = std::max({ab.norm(), ac.norm(), 1.0});
  if (std::abs(det) < 1e-14 * scale * scale) {
    t.degenerate = true;
    return t;
  }
  const double ab2 = ab.squaredNorm();
  const double ac2 = ac.squaredNorm();
  t.center.x() = pa.x() + (ac.y() * ab2 - ab.y() * ac2) / det;
  t.center.y() = pa.y() + (ab.x() * ac2 - ac.x() * ab2) / det;
  t.radius_sq = (pa - t.center).squaredNorm();
  return t;
}

// Strictly-inside test; points on the circle count as outside so cocircular
// ties resolve by insertion order.
bool in_circumcircle(const Triangle& t, const Eigen::Vector2d& p) {
  if (t.degenerate) return true;
  const double d2 = (p - t.center).squaredNorm();
  return d2 < t.radius_sq * (1.0 - 1e-12);
}

// Bowyer-Watson over the point set; insertion in lexicographic order so that
// cocircular tie-breaking is deterministic.
std::vector<std::pair<int, int>> delaunay_edges(const Eigen::MatrixXd& positions) {
  const int N = static_cast<int>(positions.rows());
  std::vector<Eigen::Vector2d> pts(N);
  for (int i = 0; i < N; ++i) pts[i] = positions.row(i).transpose();

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
    return pts[a].y() < pts[b].y();
  });

  // Super-triangle comfortably containing every point.
  const Eigen::Vector2d lo(positions.col(0).minCoeff(), positions.col(1).minCoeff());
  const Eigen::Vector2d hi(positions.col(0).maxCoeff(), positions.col(1).maxCoeff());
  const Eigen::Vector2d mid = 0.5 * (lo + hi);
  const double span = std::max({(hi - lo).x(), (hi - lo).y(), 1.0});
  pts.push_back(mid + Eigen::Vector2d(-20.0 * span, -10.0 * span));
  pts.push_back(mid + Eigen::Vector2d(20.0 * span, -10.0 * span));
  pts.push_back(mid + Eigen::Vector2d(0.0, 20.0 * span));

  std::vector<Triangle> tris;
  tris.push_back(make_triangle(N, N + 1, N + 2, pts));

  for (const int pi : order) {
    const Eigen::Vector2d& p = pts[pi];
    std::vector<Triangle> keep;
    std::map<std::pair<int, int>, int> edge_count;
    for (const Triangle& t : tris) {
      if (in_circumcircle(t, p)) {
        for (int e = 0; e < 3; ++e) {
          int a = t.v[e];
          int b = t.v[(e + 1) % 3];
          if (a > b) std::swap(a, b);
          edge_count[{a, b}]++;
        }
      } else {
        keep.push_back(t);
      }
    }
    tris.swap(keep);
    for (const auto& [edge, count] : edge_count) {
      if (count == 1) tris.push_back(make_triangle(edge.first, edge.second, pi, pts));
    }
  }

  std::map<std::pair<int, int>, bool> edges;
  for (const Triangle& t : tris) {
    if (t.v[0] >= N || t.v[1] >= N || t.v[2] >= N) continue;
    for (int e = 0; e < 3; ++e) {
      int a = t.v[e];
      int b = t.v[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      edges[{a, b}] = true;
    }
  }
  std::vector<std::pair<int, int>> out;
  out.reserve(edges.size());
  for (const auto& [edge, _] : edges) out.push_back(edge);
  return out;
}

}  // namespace

int HalfspaceSystem::total_faces() const {
  int n = 0;
  for (const auto& cell : cells) n += static_cast<int>(cell.size());
  return n;
}

Eigen::MatrixXd HalfspaceSystem::block_constraint_matrix(int dim) const {
  const int N = robot_count();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(total_faces(), N * dim);
  int row = 0;
  for (int i = 0; i < N; ++i) {
    for (const HalfspaceFace& face : cells[i]) {
      c.block(row, i * dim, 1, dim) = face.normal.transpose();
      ++row;
    }
  }
  return c;
}

Eigen::VectorXd HalfspaceSystem::stacked_offsets() const {
  Eigen::VectorXd d(total_faces());
  int row = 0;
  for (const auto& cell : cells) {
    for (const HalfspaceFace& face : cell) d(row++) = face.offset;
  }
  return d;
}

bool HalfspaceSystem::contains(int robot, const Eigen::VectorXd& x, double tol) const {
  for (const HalfspaceFace& face : cells.at(robot)) {
    if (face.normal.dot(x) > face.offset + tol) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> neighbor_pairs(const PositionState& state,
                                                NeighborMode mode,
                                                bool* collinear_fallback) {
  state.validate();
  check_no_coincident(state);
  if (collinear_fallback) *collinear_fallback = false;
  const int N = state.robot_count();

  auto all_pairs = [N]() {
    std::vector<std::pair<int, int>> out;
    out.reserve(N * (N - 1) / 2);
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) out.emplace_back(i, j);
    }
    return out;
  };

  if (mode == NeighborMode::AllPairs) return all_pairs();

  if (state.dim() != 2) {
    throw std::invalid_argument("neighbor_pairs: delaunay mode requires dim 2");
  }
  if (N == 2) return all_pairs();
  if (all_collinear(state.positions)) {
    if (collinear_fallback) *collinear_fallback = true;
    return all_pairs();
  }
  return delaunay_edges(state.positions);
}

HalfspaceSystem buffered_voronoi(const PositionState& state, const BodyParams& bodies,
                                 const std::vector<std::pair<int, int>>& pairs) {
  state.validate();
  bodies.validate(state.robot_count());
  const double eps = bodies.clearance;
  HalfspaceSystem sys;
  sys.cells.resize(state.robot_count());

  for (const auto& [i, j] : pairs) {
    const Eigen::VectorXd pi = state.positions.row(i).transpose();
    const Eigen::VectorXd pj = state.positions.row(j).transpose();
    const Eigen::VectorXd diff = pj - pi;
    const double dist = diff.norm();
    if (dist <= kCoincidenceTol) {
      throw DegenerateGeometryError("buffered_voronoi: coincident robots " +
                                    std::to_string(i) + "," + std::to_string(j));
    }
    const Eigen::VectorXd c = diff / dist;
    const double mid = 0.5 * c.dot(pi + pj);

    HalfspaceFace fi{j, c, mid - (bodies.radii(i) + eps / 2.0)};
    HalfspaceFace fj{i, -c, -mid - (bodies.radii(j) + eps / 2.0)};

    // An infeasible start would make its own cell empty at the current
    // position; widen just enough that the position sits on the boundary.
    if (c.dot(pi) > fi.offset) {
      fi.offset = c.dot(pi);
      sys.relaxed = true;
    }
    if (-c.dot(pj) > fj.offset) {
      fj.offset = -c.dot(pj);
      sys.relaxed = true;
    }

    sys.cells[i].push_back(std::move(fi));
    sys.cells[j].push_back(std::move(fj));
  }

  for (auto& cell : sys.cells) {
    std::sort(cell.begin(), cell.end(),
              [](const HalfspaceFace& a, const HalfspaceFace& b) { return a.neighbor < b.neighbor; });
  }
  return sys;
}

double min_separation_margin(const PositionState& state, const BodyParams& bodies) {
  state.validate();
  bodies.validate(state.robot_count());
  const int N = state.robot_count();
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double d = (state.positions.row(i) - state.positions.row(j)).norm();
      margin = std::min(margin, d - bodies.radii(i) - bodies.radii(j) - bodies.clearance);
    }
  }
  return margin;
}

}  // namespace catp
