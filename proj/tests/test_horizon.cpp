#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "catp/comm_model.hpp"
#include "catp/horizon.hpp"
#include "catp/rng.hpp"

using namespace catp;

namespace {

PositionState random_state(int robots, double spread, Rng& rng) {
  PositionState s;
  s.positions.resize(robots, 2);
  for (int i = 0; i < robots; ++i) {
    s.positions(i, 0) = rng.uniform(-spread, spread);
    s.positions(i, 1) = rng.uniform(-spread, spread);
  }
  s.radii = Eigen::VectorXd::Zero(robots);
  return s;
}

}  // namespace

TEST_CASE("lifted positions telescope the inputs") {
  // K = 2, one robot in one dimension starting at zero.
  const Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  const HorizonModel model = lift_positions(p, 2);
  Eigen::VectorXd u(2);
  u << 0.7, -0.3;
  const Eigen::VectorXd predicted = model.base + model.lifting * u;
  CHECK(predicted(0) == doctest::Approx(0.7));
  CHECK(predicted(1) == doctest::Approx(0.4));
}

TEST_CASE("horizon of one reduces to a single step") {
  Eigen::VectorXd p(4);
  p << 1.0, 2.0, 3.0, 4.0;
  const HorizonModel model = lift_positions(p, 1);
  Eigen::VectorXd u(4);
  u << 0.1, 0.2, 0.3, 0.4;
  CHECK(((model.base + model.lifting * u) - (p + u)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("lifting matrix block structure for K = 3") {
  const Eigen::MatrixXd b = lifting_matrix(3, 2);
  for (int k = 0; k < 3; ++k) {
    for (int h = 0; h < 3; ++h) {
      const Eigen::MatrixXd block = b.block(2 * k, 2 * h, 2, 2);
      if (h <= k) {
        CHECK((block - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
      } else {
        CHECK(block.cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("fiedler constraint reduces to the single-step inequality at K = 1") {
  Eigen::VectorXd m(4);
  m << 0.05, 0.0, -0.05, 0.0;
  const InequalitySystem sys = fiedler_horizon_constraint(0.8, m, 0.5, 1);
  REQUIRE(sys.matrix.rows() == 1);
  CHECK((sys.matrix.row(0).transpose() + m).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(sys.bound(0) == doctest::Approx(0.3));

  // lambda2 + m'u >= bound for a compliant input.
  Eigen::VectorXd u(4);
  u << 1.0, 0.0, 0.0, 0.0;
  CHECK(sys.matrix.row(0).dot(u) <= sys.bound(0));
}

TEST_CASE("zero input is feasible exactly when the bound already holds") {
  Eigen::VectorXd m(2);
  m << 0.1, -0.1;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  const InequalitySystem above = fiedler_horizon_constraint(0.6, m, 0.5, 2);
  CHECK((above.matrix * zero - above.bound).maxCoeff() <= 0.0);
  const InequalitySystem below = fiedler_horizon_constraint(0.4, m, 0.5, 2);
  CHECK((below.matrix * zero - below.bound).maxCoeff() > 0.0);
}

TEST_CASE("second fiedler row accumulates both input blocks") {
  Eigen::VectorXd m(2);
  m << 0.2, -0.3;
  const InequalitySystem sys = fiedler_horizon_constraint(1.0, m, 0.5, 2);
  REQUIRE(sys.matrix.rows() == 2);
  CHECK((sys.matrix.row(1).segment(0, 2).transpose() + m).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sys.matrix.row(1).segment(2, 2).transpose() + m).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("collision constraint at K = 1 is C u <= d - C p") {
  Rng rng(3);
  const PositionState s = random_state(3, 20.0, rng);
  BodyParams bodies{Eigen::VectorXd::Zero(3), 1.0};
  const HalfspaceSystem cells =
      buffered_voronoi(s, bodies, neighbor_pairs(s, NeighborMode::AllPairs));
  const Eigen::VectorXd p = s.stacked();
  const InequalitySystem sys = collision_horizon_constraint(cells, p, 1);

  const Eigen::MatrixXd c = cells.block_constraint_matrix(2);
  const Eigen::VectorXd d = cells.stacked_offsets();
  CHECK((sys.matrix - c).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((sys.bound - (d - c * p)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero input stays feasible and RHS blocks repeat") {
  Rng rng(5);
  const PositionState s = random_state(4, 25.0, rng);
  BodyParams bodies{Eigen::VectorXd::Zero(4), 0.5};
  const HalfspaceSystem cells =
      buffered_voronoi(s, bodies, neighbor_pairs(s, NeighborMode::AllPairs));
  const InequalitySystem sys = collision_horizon_constraint(cells, s.stacked(), 3);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.matrix.cols());
  CHECK((sys.matrix * zero - sys.bound).maxCoeff() <= 1e-12);

  const int rows = cells.total_faces();
  CHECK((sys.bound.segment(0, rows) - sys.bound.segment(rows, rows)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((sys.bound.segment(0, rows) - sys.bound.segment(2 * rows, rows)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("input box bounds and pinning") {
  HorizonParams params;
  params.K = 2;
  params.u_max = 1.0;
  const BoxBounds box = input_box(params, 3, 2);
  CHECK(box.lower.size() == 12);
  CHECK(box.lower.minCoeff() == -1.0);
  CHECK(box.upper.maxCoeff() == 1.0);

  HorizonParams pinned = params;
  Eigen::VectorXd per(3);
  per << 0.0, 2.0, 1.0;
  pinned.per_robot_u_max = per;
  const BoxBounds pinned_box = input_box(pinned, 3, 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(pinned_box.lower(k * 6 + 0) == 0.0);
    CHECK(pinned_box.upper(k * 6 + 1) == 0.0);
    CHECK(pinned_box.upper(k * 6 + 2) == 2.0);  // override beats the global bound
    CHECK(pinned_box.lower(k * 6 + 4) == -1.0);
  }
}

TEST_CASE("assembled matrices equal a naive step-by-step composition") {
  Rng rng(11);
  for (int K = 1; K <= 4; ++K) {
    for (int N = 2; N <= 3; ++N) {
      const PositionState s = random_state(N, 20.0, rng);
      const LinkParams link{0.1, 50.0};
      const CommGraphSnapshot snap = build_snapshot(s, link);
      const Eigen::VectorXd p = s.stacked();
      const int nv = N * 2;

      const HorizonModel model = build_horizon_model(p, snap.gradient, K);

      // Naive lifting: position block k sums the first k+1 input blocks.
      Eigen::MatrixXd b_naive = Eigen::MatrixXd::Zero(K * nv, K * nv);
      for (int k = 0; k < K; ++k) {
        for (int h = 0; h <= k; ++h) {
          for (int c = 0; c < nv; ++c) b_naive(k * nv + c, h * nv + c) = 1.0;
        }
      }
      CHECK((model.lifting - b_naive).cwiseAbs().maxCoeff() <= 1e-12);

      Eigen::MatrixXd m_naive = Eigen::MatrixXd::Zero(K, K * nv);
      for (int k = 0; k < K; ++k) {
        for (int h = 0; h <= k; ++h) {
          for (int c = 0; c < nv; ++c) m_naive(k, h * nv + c) = snap.gradient(c);
        }
      }
      CHECK((model.connectivity - m_naive).cwiseAbs().maxCoeff() <= 1e-12);

      BodyParams bodies{Eigen::VectorXd::Zero(N), 0.5};
      const HalfspaceSystem cells =
          buffered_voronoi(s, bodies, neighbor_pairs(s, NeighborMode::AllPairs));
      const Eigen::MatrixXd c = cells.block_constraint_matrix(2);
      const Eigen::VectorXd d = cells.stacked_offsets();
      const InequalitySystem sys = collision_horizon_constraint(cells, p, K);

      const int rows = cells.total_faces();
      Eigen::MatrixXd ct_naive = Eigen::MatrixXd::Zero(K * rows, K * nv);
      Eigen::VectorXd dt_naive(K * rows);
      for (int k = 0; k < K; ++k) {
        for (int h = 0; h <= k; ++h) ct_naive.block(k * rows, h * nv, rows, nv) = c;
        dt_naive.segment(k * rows, rows) = d - c * p;
      }
      CHECK((sys.matrix - ct_naive).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((sys.bound - dt_naive).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("feasible lifted inputs keep every predicted position in its cell") {
  Rng rng(13);
  const int K = 3;
  for (int trial = 0; trial < 20; ++trial) {
    const PositionState s = random_state(3, 25.0, rng);
    BodyParams bodies{Eigen::VectorXd::Zero(3), 0.5};
    if (min_separation_margin(s, bodies) <= 0.1) continue;
    const HalfspaceSystem cells =
        buffered_voronoi(s, bodies, neighbor_pairs(s, NeighborMode::AllPairs));
    const Eigen::VectorXd p = s.stacked();
    const InequalitySystem sys = collision_horizon_constraint(cells, p, K);
    const HorizonModel model = lift_positions(p, K);

    // Shrink a random input until the lifted constraint accepts it.
    Eigen::VectorXd u(K * 6);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform(-1.0, 1.0);
    for (int shrink = 0; shrink < 60; ++shrink) {
      if ((sys.matrix * u - sys.bound).maxCoeff() <= 0.0) break;
      u *= 0.7;
    }
    REQUIRE((sys.matrix * u - sys.bound).maxCoeff() <= 0.0);

    const Eigen::VectorXd predicted = model.base + model.lifting * u;
    for (int k = 0; k < K; ++k) {
      for (int robot = 0; robot < 3; ++robot) {
        const Eigen::VectorXd x = predicted.segment(k * 6 + robot * 2, 2);
        CHECK(cells.contains(robot, x, 1e-9));
      }
    }
  }
}
