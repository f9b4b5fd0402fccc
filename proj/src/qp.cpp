#include "catp/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace catp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

struct PolishResult {
  bool ok = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // stacked multipliers for [A; I] rows
};

// Equality-constrained solve on the guessed active set, with iterative
// refinement against the unregularized KKT system. Rows with equal bounds
// (pinned variables) are true equalities whose multipliers carry no sign
// restriction.
PolishResult polish(const Eigen::MatrixXd& h_ridge, const Eigen::VectorXd& g,
                    const Eigen::MatrixXd& a_stacked, const Eigen::VectorXd& lower,
                    const Eigen::VectorXd& upper, const std::vector<int>& active_equal,
                    const std::vector<int>& active_lower,
                    const std::vector<int>& active_upper) {
  const int nv = static_cast<int>(g.size());
  const int na =
      static_cast<int>(active_equal.size() + active_lower.size() + active_upper.size());
  PolishResult out;

  Eigen::MatrixXd gmat(na, nv);
  Eigen::VectorXd h(na);
  int row = 0;
  for (int i : active_equal) {
    gmat.row(row) = a_stacked.row(i);
    h(row++) = lower(i);
  }
  for (int i : active_lower) {
    gmat.row(row) = a_stacked.row(i);
    h(row++) = lower(i);
  }
  for (int i : active_upper) {
    gmat.row(row) = a_stacked.row(i);
    h(row++) = upper(i);
  }

  const double delta = 1e-9;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + na, nv + na);
  kkt.topLeftCorner(nv, nv) = h_ridge;
  kkt.topLeftCorner(nv, nv).diagonal().array() += delta;
  kkt.topRightCorner(nv, na) = gmat.transpose();
  kkt.bottomLeftCorner(na, nv) = gmat;
  kkt.bottomRightCorner(na, na).diagonal().setConstant(-delta);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd rhs(nv + na);
  rhs.head(nv) = -g;
  rhs.tail(na) = h;
  Eigen::VectorXd sol = lu.solve(rhs);

  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd resid(nv + na);
    resid.head(nv) = -g - h_ridge * sol.head(nv) -
                     (na > 0 ? Eigen::VectorXd(gmat.transpose() * sol.tail(na))
                             : Eigen::VectorXd::Zero(nv));
    resid.tail(na) = h - gmat * sol.head(nv);
    sol += lu.solve(resid);
  }

  if (!sol.allFinite()) return out;

  // Multiplier signs must match the active side; equality rows are free.
  const double sign_tol = 1e-7;
  row = 0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(a_stacked.rows());
  for (int i : active_equal) y(i) = sol(nv + row++);
  for (int i : active_lower) {
    const double nu = sol(nv + row++);
    if (nu > sign_tol) return out;
    y(i) = std::min(nu, 0.0);
  }
  for (int i : active_upper) {
    const double nu = sol(nv + row++);
    if (nu < -sign_tol) return out;
    y(i) = std::max(nu, 0.0);
  }

  // Inactive constraints must still hold.
  const Eigen::VectorXd ax = a_stacked * sol.head(nv);
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    if (ax(i) > upper(i) + 1e-8 || ax(i) < lower(i) - 1e-8) return out;
  }

  // Stationarity of the refined point certifies optimality of the guess.
  const Eigen::VectorXd stat =
      h_ridge * sol.head(nv) + g + a_stacked.transpose() * y;
  if (stat.cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    return out;
  }

  out.ok = true;
  out.x = sol.head(nv);
  out.y = y;
  return out;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const int nv = num_vars();
  if (H.rows() != nv || H.cols() != nv) {
    throw std::invalid_argument("QpProblem: H dimension mismatch");
  }
  if (nv > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("QpProblem: H must be symmetric");
  }
  if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != nv)) {
    throw std::invalid_argument("QpProblem: constraint dimension mismatch");
  }
  if (lb.size() != nv || ub.size() != nv) {
    throw std::invalid_argument("QpProblem: bound dimension mismatch");
  }
}

QpSolution solve(const QpProblem& problem, const QpSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  const int nv = problem.num_vars();
  const int mc = problem.num_constraints();
  const int mt = mc + nv;

  QpSolution sol;
  sol.x = Eigen::VectorXd::Zero(nv);
  sol.ineq_multipliers = Eigen::VectorXd::Zero(mc);
  sol.bound_multipliers = Eigen::VectorXd::Zero(nv);

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.objective = 0.5 * sol.x.dot(problem.H * sol.x) + problem.g.dot(sol.x);
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  };

  // Empty box means there is nothing to iterate on.
  if ((problem.lb.array() > problem.ub.array()).any()) {
    return finish(QpStatus::PrimalInfeasible);
  }

  Eigen::MatrixXd h_ridge = problem.H;
  h_ridge.diagonal().array() += settings.ridge;

  // Stack general rows and box rows; equilibrate row norms so that constraint
  // blocks with very different magnitudes (connectivity rows vs cell rows)
  // share one penalty parameter.
  Eigen::MatrixXd a_stacked(mt, nv);
  if (mc > 0) a_stacked.topRows(mc) = problem.A;
  a_stacked.bottomRows(nv).setIdentity();
  Eigen::VectorXd lower(mt), upper(mt);
  lower.head(mc).setConstant(-kInf);
  upper.head(mc) = problem.b;
  lower.tail(nv) = problem.lb;
  upper.tail(nv) = problem.ub;

  Eigen::VectorXd row_scale(mt);
  for (int i = 0; i < mt; ++i) {
    const double norm = a_stacked.row(i).cwiseAbs().maxCoeff();
    row_scale(i) = norm > 1e-10 ? 1.0 / norm : 1.0;
  }
  const Eigen::MatrixXd a_s = row_scale.asDiagonal() * a_stacked;
  const Eigen::VectorXd l_s = lower.cwiseProduct(row_scale);
  const Eigen::VectorXd u_s = upper.cwiseProduct(row_scale);

  // Cost scaling keeps the dual iterates O(1) when the linear term is large
  // (the relay gain pushes |g| to ~1e3); duals unscale on extraction.
  const double cost_scale =
      1.0 / std::max({1.0, inf_norm(problem.g),
                      h_ridge.size() > 0 ? h_ridge.cwiseAbs().maxCoeff() : 0.0});
  const Eigen::MatrixXd h_s = cost_scale * h_ridge;
  const Eigen::VectorXd g_s = cost_scale * problem.g;

  double rho = settings.rho;
  auto factorize = [&](double r) {
    return Eigen::LLT<Eigen::MatrixXd>(
        h_s + settings.sigma * Eigen::MatrixXd::Identity(nv, nv) +
        r * a_s.transpose() * a_s);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factorize(rho);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("qp solve: KKT factorization failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nv);
  if (settings.warm_start && settings.warm_start->size() == nv) {
    x = settings.warm_start->cwiseMax(problem.lb).cwiseMin(problem.ub);
  }
  Eigen::VectorXd z = (a_s * x).cwiseMax(l_s).cwiseMin(u_s);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(mt);
  if (settings.warm_start_dual && settings.warm_start_dual->size() == mt) {
    y = cost_scale * settings.warm_start_dual->cwiseQuotient(row_scale);
  }
  Eigen::VectorXd y_prev_check = y;

  // Active set read off the projected iterate: the projection writes the
  // bound value into z exactly, so equality identifies pinned rows.
  auto attempt_polish = [&](const Eigen::VectorXd& z_now) {
    std::vector<int> active_equal, active_lower, active_upper;
    for (int i = 0; i < mt; ++i) {
      if (l_s(i) == u_s(i) && std::isfinite(l_s(i))) {
        active_equal.push_back(i);
      } else if (std::isfinite(l_s(i)) && z_now(i) <= l_s(i)) {
        active_lower.push_back(i);
      } else if (std::isfinite(u_s(i)) && z_now(i) >= u_s(i)) {
        active_upper.push_back(i);
      }
    }
    return polish(h_ridge, problem.g, a_stacked, lower, upper, active_equal,
                  active_lower, active_upper);
  };
  PolishResult accepted;

  QpStatus status = QpStatus::MaxIterations;
  int iter = 0;
  int rho_updates = 0;
  bool restarted = false;
  for (; iter < settings.max_iterations; ++iter) {
    const Eigen::VectorXd rhs =
        settings.sigma * x - g_s + a_s.transpose() * (rho * z - y);
    const Eigen::VectorXd x_tilde = llt.solve(rhs);
    const Eigen::VectorXd z_tilde = a_s * x_tilde;

    const Eigen::VectorXd x_next = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
    const Eigen::VectorXd z_relaxed =
        settings.alpha * z_tilde + (1.0 - settings.alpha) * z;
    const Eigen::VectorXd z_next = (z_relaxed + y / rho).cwiseMax(l_s).cwiseMin(u_s);
    y += rho * (z_relaxed - z_next);
    x = x_next;
    z = z_next;

    if ((iter + 1) % settings.check_interval != 0) continue;

    const Eigen::VectorXd ax = a_s * x;
    const Eigen::VectorXd hx = h_s * x;
    const Eigen::VectorXd aty = a_s.transpose() * y;
    const double r_prim = inf_norm(ax - z);
    const double r_dual = inf_norm(hx + g_s + aty);
    const double eps_prim =
        settings.eps_abs + settings.eps_rel * std::max(inf_norm(ax), inf_norm(z));
    const double eps_dual =
        settings.eps_abs + settings.eps_rel *
                               std::max({inf_norm(hx), inf_norm(g_s), inf_norm(aty)});
    if (r_prim <= eps_prim && r_dual <= eps_dual) {
      status = QpStatus::Optimal;
      ++iter;
      break;
    }

    // A verified active-set solve certifies optimality well before the
    // first-order iterates meet the tolerance.
    if (settings.polish && (iter + 1) % (settings.check_interval * 4) == 0) {
      PolishResult early = attempt_polish(z);
      if (early.ok) {
        accepted = std::move(early);
        status = QpStatus::Optimal;
        ++iter;
        break;
      }
    }

    // Stagnation fallback: restart the duals at a stiffer penalty once.
    if (!restarted && iter + 1 >= settings.max_iterations / 2) {
      restarted = true;
      y.setZero();
      y_prev_check.setZero();
      rho = std::clamp(rho * 10.0, 1e-6, 1e6);
      llt = factorize(rho);
    }

    // Primal infeasibility certificate from the dual update direction.
    const Eigen::VectorXd dy = y - y_prev_check;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      const Eigen::VectorXd dyn = dy / dy_norm;
      bool unbounded_component = false;
      double support = 0.0;
      for (int i = 0; i < mt; ++i) {
        if (dyn(i) > settings.eps_infeasible && !std::isfinite(u_s(i))) {
          unbounded_component = true;
          break;
        }
        if (dyn(i) < -settings.eps_infeasible && !std::isfinite(l_s(i))) {
          unbounded_component = true;
          break;
        }
        if (dyn(i) > 0 && std::isfinite(u_s(i))) support += u_s(i) * dyn(i);
        if (dyn(i) < 0 && std::isfinite(l_s(i))) support += l_s(i) * dyn(i);
      }
      if (!unbounded_component && inf_norm(a_s.transpose() * dyn) <= settings.eps_infeasible &&
          support < -settings.eps_infeasible) {
        status = QpStatus::PrimalInfeasible;
        ++iter;
        break;
      }
    }
    y_prev_check = y;

    if (settings.adaptive_rho && rho_updates < 2 &&
        (iter + 1) % (settings.check_interval * 8) == 0) {
      const double scaled_prim = r_prim / std::max(1e-12, std::max(inf_norm(ax), inf_norm(z)));
      const double scaled_dual =
          r_dual / std::max(1e-12, std::max({inf_norm(hx), inf_norm(g_s), inf_norm(aty)}));
      const double ratio = scaled_prim / std::max(1e-16, scaled_dual);
      if (ratio > 25.0 || ratio < 0.04) {
        rho = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
        llt = factorize(rho);
        ++rho_updates;
      }
    }
  }
  sol.iterations = iter;
  sol.x = x;

  if (status == QpStatus::PrimalInfeasible) {
    return finish(QpStatus::PrimalInfeasible);
  }

  // Unscale multipliers for the caller-facing problem.
  Eigen::VectorXd y_orig = y.cwiseProduct(row_scale) / cost_scale;

  if (accepted.ok) {
    sol.x = accepted.x;
    y_orig = accepted.y;
    sol.polished = true;
  } else if (settings.polish) {
    PolishResult pol = attempt_polish(z);
    if (pol.ok) {
      sol.x = pol.x;
      y_orig = pol.y;
      sol.polished = true;
      status = QpStatus::Optimal;
    }
  }

  for (int i = 0; i < mc; ++i) sol.ineq_multipliers(i) = std::max(0.0, y_orig(i));
  sol.bound_multipliers = y_orig.tail(nv);
  return finish(status);
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution) {
  problem.validate();
  const int nv = problem.num_vars();
  const int mc = problem.num_constraints();
  const Eigen::VectorXd& x = solution.x;
  const Eigen::VectorXd& mu = solution.ineq_multipliers;
  const Eigen::VectorXd& yb = solution.bound_multipliers;
  if (x.size() != nv || mu.size() != mc || yb.size() != nv) {
    throw std::invalid_argument("kkt_residuals: solution dimension mismatch");
  }

  KktResiduals res;
  Eigen::VectorXd stat = problem.H * x + problem.g + yb;
  if (mc > 0) stat += problem.A.transpose() * mu;
  res.stationarity = inf_norm(stat);

  double primal = 0.0;
  if (mc > 0) primal = std::max(primal, (problem.A * x - problem.b).maxCoeff());
  for (int j = 0; j < nv; ++j) {
    if (std::isfinite(problem.lb(j))) primal = std::max(primal, problem.lb(j) - x(j));
    if (std::isfinite(problem.ub(j))) primal = std::max(primal, x(j) - problem.ub(j));
  }
  res.primal = std::max(0.0, primal);

  double dual = 0.0;
  double comp = 0.0;
  for (int i = 0; i < mc; ++i) {
    dual = std::max(dual, -mu(i));
    comp = std::max(comp, std::abs(mu(i) * (problem.A.row(i).dot(x) - problem.b(i))));
  }
  for (int j = 0; j < nv; ++j) {
    if (yb(j) > 0.0) {
      if (std::isfinite(problem.ub(j))) {
        comp = std::max(comp, std::abs(yb(j) * (x(j) - problem.ub(j))));
      } else {
        dual = std::max(dual, yb(j));
      }
    } else if (yb(j) < 0.0) {
      if (std::isfinite(problem.lb(j))) {
        comp = std::max(comp, std::abs(yb(j) * (x(j) - problem.lb(j))));
      } else {
        dual = std::max(dual, -yb(j));
      }
    }
  }
  res.dual = dual;
  res.complementarity = comp;
  return res;
}

}  // namespace catp
