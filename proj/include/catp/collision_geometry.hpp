#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "catp/types.hpp"

namespace catp {

enum class NeighborMode { AllPairs, Delaunay };

// One buffered Voronoi face of a robot's cell: c'x <= d keeps the robot on
// its own side of the border with `neighbor`.
struct HalfspaceFace {
  int neighbor = -1;
  Eigen::VectorXd normal;  // unit
  double offset = 0.0;
};

// Per-robot buffered Voronoi cells plus the assembled block form used by the
// horizon constraints: C is block-diagonal over robots, d stacks the offsets.
struct HalfspaceSystem {
  std::vector<std::vector<HalfspaceFace>> cells;  // cells[i] = faces of robot i
  bool relaxed = false;  // some offsets were widened to keep an infeasible start on its boundary

  int robot_count() const { return static_cast<int>(cells.size()); }
  int total_faces() const;

  // C: total_faces x (N*dim), rows grouped by robot, each row acting on that
  // robot's position block only.
  Eigen::MatrixXd block_constraint_matrix(int dim) const;
  // d: total_faces, same row order as block_constraint_matrix.
  Eigen::VectorXd stacked_offsets() const;

  // True if x (a single robot position) satisfies every face of robot i's cell
  // within tol.
  bool contains(int robot, const Eigen::VectorXd& x, double tol = 0.0) const;
};

// Pairs of robots whose cells border each other. AllPairs returns every pair;
// Delaunay (dim 2 only) returns the edges of the Delaunay triangulation,
// falling back to all pairs when the points are collinear. The optional flag
// reports that fallback.
std::vector<std::pair<int, int>> neighbor_pairs(const PositionState& state,
                                                NeighborMode mode,
                                                bool* collinear_fallback = nullptr);

// Buffered Voronoi cells: for each listed pair (i,j),
//   c_ij = (p_j - p_i)/||p_j - p_i||,  d_ij = c_ij'(p_i + p_j)/2 - (r_i + eps/2),
// and symmetrically for j. Faces violated by the current positions are relaxed
// onto the position and flagged.
HalfspaceSystem buffered_voronoi(const PositionState& state, const BodyParams& bodies,
                                 const std::vector<std::pair<int, int>>& pairs);

// min over pairs of ||p_i - p_j|| - r_i - r_j - eps; negative means violation.
double min_separation_margin(const PositionState& state, const BodyParams& bodies);

}  // namespace catp
