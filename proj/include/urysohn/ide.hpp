#pragma once

// Integrodifference equations u_{t+1} = H(u_t): orbit iteration and damped
// Newton solves for fixed points of a Hammerstein operator.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"
#include "urysohn/holder.hpp"
#include "urysohn/operators.hpp"

namespace urysohn {

inline constexpr double kOverflowGuard = 1e12;

struct OrbitRecord {
  std::vector<GridFunction> states;   // states[0] = u0
  std::vector<double> sup_norms;      // per state
  std::vector<double> holder_seminorms;  // per state, empty when alpha = 0
  std::vector<std::size_t> clamp_audit;  // clamps in step t -> t+1
  double alpha = 0.0;
  bool overflow = false;
  std::string status = "ok";
};

/// Applies H `steps` times. alpha > 0 also records [u_t]_alpha. Stops early
/// (partial orbit, overflow = true) once the sup-norm exceeds the guard.
inline OrbitRecord iterate(const HammersteinOperator& op, const GridFunction& u0, std::size_t steps,
                           double alpha = 0.0, double guard = kOverflowGuard) {
  if (steps == 0) throw InputError("iterate: steps must be positive");
  if (!op.target()->same_as(*op.source()) || op.input_dim() != op.output_dim()) {
    throw InputError("iterate: operator must map a space into itself");
  }
  OrbitRecord rec;
  rec.alpha = alpha;
  auto record = [&](const GridFunction& u) {
    rec.states.push_back(u);
    rec.sup_norms.push_back(sup_norm(u));
    if (alpha > 0.0) rec.holder_seminorms.push_back(holder_seminorm(u, alpha).seminorm);
  };
  record(u0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::size_t clamps = 0;
    GridFunction next = op.apply(rec.states.back(), &clamps);
    rec.clamp_audit.push_back(clamps);
    record(next);
    if (rec.sup_norms.back() > guard) {
      rec.overflow = true;
      char buf[96];
      std::snprintf(buf, sizeof buf, "overflow guard tripped at step %zu", t + 1);
      rec.status = buf;
      break;
    }
  }
  return rec;
}

/// Orbit diagnostics as CSV: step, sup_norm, [seminorm,] clamps.
inline void write_csv(std::ostream& out, const OrbitRecord& rec) {
  const bool semi = !rec.holder_seminorms.empty();
  out << "step,sup_norm" << (semi ? ",holder_seminorm" : "") << ",clamps\n";
  for (std::size_t t = 0; t < rec.states.size(); ++t) {
    out << t << ',' << detail::format_double(rec.sup_norms[t]);
    if (semi) out << ',' << detail::format_double(rec.holder_seminorms[t]);
    out << ',' << (t == 0 ? 0 : rec.clamp_audit[t - 1]) << '\n';
  }
}

struct NewtonOptions {
  double tol = 1e-10;
  std::size_t max_iter = 50;
  std::size_t pre_iterations = 50;  // plain iterations before Newton
  double armijo_c = 1e-4;
  std::size_t max_halvings = 40;
  double max_condition = 1e14;
};

struct NewtonResult {
  GridFunction u_star;
  std::vector<double> residual_history;  // ||u - H(u)||_0 at each Newton iterate
  std::vector<double> step_lengths;      // accepted damping factors
  bool converged = false;
  bool line_search_failed = false;
  std::size_t newton_steps = 0;
  std::size_t clamps = 0;
  std::string message;

  /// r_{k+1} / r_k^2 for consecutive residuals (quadratic-convergence diagnostic).
  std::vector<double> quadratic_ratios() const {
    std::vector<double> q;
    for (std::size_t k = 1; k < residual_history.size(); ++k) {
      const double p = residual_history[k - 1];
      q.push_back(p > 0.0 ? residual_history[k] / (p * p) : 0.0);
    }
    return q;
  }
};

/// Solves u = H(u) by damped Newton on F(u) = u - H(u): each step solves
/// (I - DH(u)) s = -F(u) by partial-pivoting LU and backtracks (halving)
/// until ||F(u + t s)||_0 <= (1 - c t) ||F(u)||_0.
inline NewtonResult newton_fixed_point(const HammersteinOperator& op, const GridFunction& u0,
                                       const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InputError("newton_fixed_point: tol must be positive");
  if (!op.target()->same_as(*op.source()) || op.input_dim() != op.output_dim()) {
    throw InputError("newton_fixed_point: operator must map a space into itself");
  }
  if (!u0.domain().same_as(*op.source())) throw InputError("newton_fixed_point: u0 domain mismatch");

  GridFunction u = u0;
  std::size_t clamps = 0;
  for (std::size_t t = 0; t < opt.pre_iterations; ++t) {
    u = op.apply(u, &clamps);
    if (sup_norm(u) > kOverflowGuard) {
      throw NumericalError("newton_fixed_point: pre-iteration diverged");
    }
  }

  auto residual = [&](const GridFunction& v, GridFunction* fv) {
    GridFunction f = v - op.apply(v, &clamps);
    const double r = sup_norm(f);
    if (fv) *fv = std::move(f);
    return r;
  };

  NewtonResult res{u, {}, {}, false, false, 0, 0, ""};
  GridFunction f = u;
  double r = residual(u, &f);
  const auto m = static_cast<Eigen::Index>(u.values().size());
  for (std::size_t k = 0;; ++k) {
    res.residual_history.push_back(r);
    if (!std::isfinite(r)) throw NumericalError("newton_fixed_point: non-finite residual");
    if (r <= opt.tol) {
      res.converged = true;
      break;
    }
    if (k >= opt.max_iter) {
      res.message = "maximum number of Newton iterations reached";
      break;
    }
    const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(m, m) - op.derivative(u, 1).matrix();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || 1.0 / rcond > opt.max_condition) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "singular linearization at Newton iterate %zu (condition estimate %.3g)", k,
                    rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
      throw NumericalError(buf);
    }
    Eigen::Map<const Eigen::VectorXd> fv(f.values().data(), m);
    const Eigen::VectorXd s = lu.solve(-fv);
    const GridFunction step(u.domain_ptr(), u.dim(), std::vector<double>(s.data(), s.data() + m));

    double t = 1.0;
    bool accepted = false;
    for (std::size_t h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      GridFunction trial = lincomb(1.0, u, t, step);
      GridFunction ft = trial;
      const double rt = residual(trial, &ft);
      if (rt <= (1.0 - opt.armijo_c * t) * r) {
        u = std::move(trial);
        f = std::move(ft);
        r = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.line_search_failed = true;
      res.message = "line search failed at Newton iterate " + std::to_string(k);
      break;
    }
    res.step_lengths.push_back(t);
    ++res.newton_steps;
  }
  res.u_star = u;
  res.clamps = clamps;
  return res;
}

inline void write_csv(std::ostream& out, const NewtonResult& r) {
  out << "iterate,residual\n";
  for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
    out << k << ',' << detail::format_double(r.residual_history[k]) << '\n';
  }
}

}  // namespace urysohn
