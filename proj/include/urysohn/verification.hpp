#pragma once

/**
 * @file verification.hpp
 * @brief Taylor-remainder certification of Fréchet derivatives, bound
 * inequality suites, Nyström convergence tables and the convolution
 * smoothing suite.
 *
 * Bounds built from registered analytic data are hard checks. Bounds built
 * from sampled suprema are lower estimates of the true constants and are
 * report-only.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"
#include "urysohn/holder.hpp"
#include "urysohn/kernels.hpp"
#include "urysohn/metric_domain.hpp"
#include "urysohn/operators.hpp"
#include "urysohn/quadrature.hpp"

namespace urysohn {

// ---------------------------------------------------------------------------
// Taylor checks

struct TaylorCheckResult {
  int order = 1;
  std::vector<double> epsilons;
  std::vector<double> residual_norms;       // sup-norm
  std::vector<double> residual_beta_norms;  // Hölder beta-norm, when requested
  double fitted_slope = 0.0;
  std::optional<double> fitted_slope_beta;
  bool exact = false;  // residuals at rounding level (linear or polynomial-exact case)
  bool pass = false;
};

struct TaylorOptions {
  std::optional<double> beta;          // also measure residuals in the beta-norm
  double exact_tolerance = 1e-13;      // relative to the size of the Taylor terms
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

/// Residuals r(eps) = ||op(u + eps v) - sum_{j<=order} eps^j/j! op^j(u)[v,...,v]||.
/// Passes when the log-log slope is at least order + 0.8, or when all
/// residuals sit at rounding level (flagged `exact`).
template <class Op>
TaylorCheckResult taylor_check(const Op& op, const GridFunction& u, const GridFunction& v,
                               const std::vector<double>& epsilons, int order,
                               const TaylorOptions& opt = {}) {
  if (order != 1 && order != 2) throw InputError("taylor_check: order must be 1 or 2");
  if (epsilons.size() < 3) throw InputError("taylor_check: need at least 3 epsilons");
  if (!op.admissible(u)) throw InputError("taylor_check: base point is not admissible");
  const GridFunction fu = op.apply(u);
  const GridFunction d1v = op.derivative(u, 1).apply(v);
  std::optional<GridFunction> d2vv;
  if (order == 2) d2vv = op.derivative(u, 2).apply(v, v);

  TaylorCheckResult res;
  res.order = order;
  res.epsilons = epsilons;
  double scale = std::max(sup_norm(fu), 1e-300);
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw InputError("taylor_check: epsilons must be positive");
    const GridFunction probe = lincomb(1.0, u, eps, v);
    if (!op.admissible(probe)) {
      throw InputError("taylor_check: probe u + eps*v inadmissible at eps = " +
                       detail::format_double(eps));
    }
    GridFunction r = lincomb(1.0, op.apply(probe), -1.0, fu);
    r = lincomb(1.0, r, -eps, d1v);
    if (d2vv) r = lincomb(1.0, r, -0.5 * eps * eps, *d2vv);
    scale = std::max(scale, eps * sup_norm(d1v));
    res.residual_norms.push_back(sup_norm(r));
    if (opt.beta) res.residual_beta_norms.push_back(holder_norm(r, *opt.beta).norm);
  }
  res.fitted_slope = loglog_slope(res.epsilons, res.residual_norms);
  if (opt.beta) res.fitted_slope_beta = loglog_slope(res.epsilons, res.residual_beta_norms);
  res.exact = std::all_of(res.residual_norms.begin(), res.residual_norms.end(),
                          [&](double r) { return r <= opt.exact_tolerance * scale; });
  const double need = order + 0.8;
  res.pass = res.exact ||
             (res.fitted_slope >= need && (!res.fitted_slope_beta || *res.fitted_slope_beta >= need));
  return res;
}

inline void write_csv(std::ostream& out, const TaylorCheckResult& r) {
  out << "epsilon,residual_sup" << (r.residual_beta_norms.empty() ? "" : ",residual_beta") << '\n';
  for (std::size_t i = 0; i < r.epsilons.size(); ++i) {
    std::vector<double> row{r.epsilons[i], r.residual_norms[i]};
    if (!r.residual_beta_norms.empty()) row.push_back(r.residual_beta_norms[i]);
    detail::write_row(out, row);
  }
}

// ---------------------------------------------------------------------------
// Bound suites

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool hard = false;   // analytic bound data registered
  bool holds = true;
  std::string note;
  double margin() const { return rhs - lhs; }
};

struct BoundReport {
  std::vector<BoundCheck> checks;

  std::size_t hard_failures() const {
    return static_cast<std::size_t>(std::count_if(
        checks.begin(), checks.end(), [](const BoundCheck& c) { return c.hard && !c.holds; }));
  }
  /// With strict = true, report-only violations count as failures too.
  std::size_t failures(bool strict) const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [&](const BoundCheck& c) {
      return !c.holds && (c.hard || strict);
    }));
  }
  void append(const BoundReport& other, const std::string& prefix) {
    for (auto c : other.checks) {
      c.name = prefix + c.name;
      checks.push_back(std::move(c));
    }
  }
};

inline void write_csv(std::ostream& out, const BoundReport& r) {
  out << "check,lhs,rhs,margin,hard,holds\n";
  for (const auto& c : r.checks) {
    out << c.name << ',' << detail::format_double(c.lhs) << ',' << detail::format_double(c.rhs)
        << ',' << detail::format_double(c.margin()) << ',' << (c.hard ? 1 : 0) << ','
        << (c.holds ? 1 : 0) << '\n';
  }
}

namespace detail {

// Accumulates the worst (largest lhs - rhs) instance of one inequality family.
struct WorstCase {
  BoundCheck check;
  bool any = false;
  double worst = -std::numeric_limits<double>::infinity();

  void add(double lhs, double rhs, double abs_slack) {
    const bool ok = lhs <= rhs * (1 + kSumSlack) + abs_slack;
    const double excess = lhs - rhs;
    if (!any || (!ok && check.holds) || (ok == check.holds && excess > worst)) {
      check.lhs = lhs;
      check.rhs = rhs;
      worst = excess;
    }
    check.holds = check.holds && ok;
    any = true;
  }
};

inline double min_positive_distance(const DiscreteDomain& dom) {
  double m = std::numeric_limits<double>::infinity();
  if (dom.is_uniform()) return dom.gap_distance(1);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    for (std::size_t j = i + 1; j < dom.size(); ++j) m = std::min(m, dom.dist(i, j));
  }
  return m;
}

inline constexpr double kRound = 64 * std::numeric_limits<double>::epsilon();

inline void require_radius(const std::vector<GridFunction>& tests, double r) {
  for (const auto& u : tests) {
    if (sup_norm(u) > r) throw InputError("bound_suite: test function outside the radius r");
  }
}

}  // namespace detail

/// Boundedness, Hölder-on-bounded-sets and image-seminorm bounds of an
/// Urysohn operator over test functions with ||u||_0 <= r.
inline BoundReport bound_suite(const UrysohnOperator& op, const std::vector<GridFunction>& tests,
                               double r) {
  detail::require_radius(tests, r);
  const auto& k = op.kernel();
  const auto& mu = op.measure();
  const auto& tgt = *op.target();
  std::vector<GridFunction> images;
  for (const auto& u : tests) images.push_back(op.apply(u));

  BoundReport rep;
  // sup_x sum_y w_y b(x,y) for a bound function b
  auto row_max = [&](auto&& b) {
    double best = 0.0;
    for (std::size_t xi = 0; xi < tgt.size(); ++xi) {
      detail::CompensatedSum s;
      for (std::size_t yi = 0; yi < mu.size(); ++yi) s.add(mu.weight(yi) * b(xi, yi));
      best = std::max(best, s.value());
    }
    return best;
  };

  {
    detail::WorstCase wc;
    wc.check.name = "urysohn_sup_bound";
    double c;
    if (k.bounds.b0) {
      c = row_max([&](std::size_t xi, std::size_t yi) {
        return k.bounds.b0(r, tgt.coord(xi), mu.domain().coord(yi));
      });
      wc.check.hard = true;
    } else {
      const auto t = estimate_caratheodory_bounds(k, tgt, mu.domain(), r, 0, 64);
      c = row_max([&](std::size_t xi, std::size_t yi) { return t(xi, yi); });
      wc.check.note = t.label;
    }
    for (const auto& img : images) {
      const double s = sup_norm(img);
      wc.add(s, c, detail::kRound * s);
    }
    rep.checks.push_back(wc.check);
  }
  {
    detail::WorstCase wc;
    wc.check.name = "urysohn_holder_on_bounded_sets";
    double c;
    double theta = 1.0;
    if (k.bounds.lipschitz) {
      c = row_max([&](std::size_t xi, std::size_t yi) {
        return k.bounds.lipschitz(r, tgt.coord(xi), mu.domain().coord(yi));
      });
      theta = k.bounds.theta;
      wc.check.hard = true;
    } else {
      const auto t = estimate_caratheodory_bounds(k, tgt, mu.domain(), r, 1, 64);
      c = row_max([&](std::size_t xi, std::size_t yi) { return t(xi, yi); });
      wc.check.note = t.label;
    }
    for (std::size_t a = 0; a < tests.size(); ++a) {
      for (std::size_t b = a + 1; b < tests.size(); ++b) {
        const double lhs = sup_norm(images[a] - images[b]);
        const double du = sup_norm(tests[a] - tests[b]);
        const double slack = detail::kRound * std::max(sup_norm(images[a]), sup_norm(images[b]));
        wc.add(lhs, c * std::pow(du, theta), slack);
      }
    }
    if (wc.any) rep.checks.push_back(wc.check);
  }
  if (k.bounds.hbar0) {
    detail::WorstCase wc;
    wc.check.name = "urysohn_image_seminorm";
    wc.check.hard = true;
    const auto [xlo, xhi] = std::minmax_element(tgt.coords().begin(), tgt.coords().end());
    detail::CompensatedSum s;
    for (std::size_t yi = 0; yi < mu.size(); ++yi) {
      s.add(mu.weight(yi) * k.bounds.hbar0(r, mu.domain().coord(yi), *xlo, *xhi));
    }
    const double beta = k.bounds.beta;
    const double dmin = tgt.size() > 1 ? detail::min_positive_distance(tgt) : 1.0;
    if (tgt.size() > 1) {
      for (const auto& img : images) {
        const double lhs = holder_seminorm(img, beta).seminorm;
        wc.add(lhs, s.value(), detail::kRound * sup_norm(img) / std::pow(dmin, beta));
      }
      rep.checks.push_back(wc.check);
    }
  }
  return rep;
}

/// ||K u||_0 <= norm_bound(alpha) ||u||_alpha and, with a registered
/// x-Lipschitz constant, [K u]_beta <= L mu(Omega) ||u||_0.
inline BoundReport bound_suite(const FredholmOperator& op, const std::vector<GridFunction>& tests,
                               double alpha) {
  BoundReport rep;
  const double nb = op.norm_bound(alpha);
  detail::WorstCase wc;
  wc.check.name = "fredholm_norm_bound";
  wc.check.hard = true;
  detail::WorstCase ws;
  ws.check.name = "fredholm_image_seminorm";
  ws.check.hard = true;
  const auto factor = op.seminorm_bound_factor();
  const double beta = op.kernel().beta_x;
  const auto& tgt = *op.target();
  const double dmin = tgt.size() > 1 ? detail::min_positive_distance(tgt) : 1.0;
  for (const auto& u : tests) {
    const auto img = op.apply(u);
    const double s = sup_norm(img);
    wc.add(s, nb * holder_norm(u, alpha).norm, detail::kRound * s);
    if (factor && tgt.size() > 1) {
      ws.add(holder_seminorm(img, beta).seminorm, *factor * sup_norm(u),
             detail::kRound * s / std::pow(dmin, beta));
    }
  }
  rep.checks.push_back(wc.check);
  if (ws.any) rep.checks.push_back(ws.check);
  return rep;
}

/// ||G u - G v||_0 <= l'_r ||u - v||_0^theta and ||G u||_0 <= sup_r g.
inline BoundReport bound_suite(const NemytskiiOperator& op, const std::vector<GridFunction>& tests,
                               double r) {
  detail::require_radius(tests, r);
  const auto& g = op.growth();
  std::vector<GridFunction> images;
  for (const auto& u : tests) images.push_back(op.apply(u));
  BoundReport rep;
  if (g.bounds.lipschitz) {
    detail::WorstCase wc;
    wc.check.name = "nemytskii_holder_on_bounded_sets";
    wc.check.hard = true;
    const double l = g.bounds.lipschitz(r);
    for (std::size_t a = 0; a < tests.size(); ++a) {
      for (std::size_t b = a + 1; b < tests.size(); ++b) {
        const double slack = detail::kRound * std::max(sup_norm(images[a]), sup_norm(images[b]));
        wc.add(sup_norm(images[a] - images[b]),
               l * std::pow(sup_norm(tests[a] - tests[b]), g.bounds.theta), slack);
      }
    }
    if (wc.any) rep.checks.push_back(wc.check);
  }
  if (g.bounds.sup) {
    detail::WorstCase wc;
    wc.check.name = "nemytskii_sup_bound";
    wc.check.hard = true;
    for (const auto& img : images) {
      const double s = sup_norm(img);
      wc.add(s, g.bounds.sup(r), detail::kRound * s);
    }
    rep.checks.push_back(wc.check);
  }
  return rep;
}

/// Hammerstein bounds: the Urysohn-form suite plus the Fredholm and
/// Nemytskii factor suites.
inline BoundReport bound_suite(const HammersteinOperator& op, const std::vector<GridFunction>& tests,
                               double r, double alpha = 0.0) {
  BoundReport rep;
  rep.append(bound_suite(op.urysohn_form(), tests, r), "hammerstein/");
  rep.append(bound_suite(op.nemytskii(), tests, r), "hammerstein/");
  std::vector<GridFunction> inner;
  for (const auto& u : tests) inner.push_back(op.nemytskii().apply(u));
  rep.append(bound_suite(op.fredholm(), inner, alpha), "hammerstein/");
  return rep;
}

// ---------------------------------------------------------------------------
// Nyström convergence

struct ConvergenceRow {
  std::size_t n = 0;
  double sup_error = 0.0;
  double holder_error = 0.0;
  std::optional<double> rate;  // log(e_prev/e) / log(N/N_prev); log2 of the ratio for doubling N
};

struct ConvergenceTable {
  double beta = 1.0;
  std::vector<ConvergenceRow> rows;

  /// Number of steps where the sup error increased.
  std::size_t non_monotone_steps() const {
    std::size_t c = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) c += rows[i].sup_error > rows[i - 1].sup_error;
    return c;
  }
};

inline void write_csv(std::ostream& out, const ConvergenceTable& t) {
  out << "N,sup_error,holder_error,rate\n";
  for (const auto& r : t.rows) {
    out << r.n << ',' << detail::format_double(r.sup_error) << ','
        << detail::format_double(r.holder_error) << ','
        << (r.rate ? detail::format_double(*r.rate) : std::string("")) << '\n';
  }
}

namespace detail {

inline void fill_rates(ConvergenceTable& t) {
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& p = t.rows[i - 1];
    auto& c = t.rows[i];
    if (p.sup_error > 0.0 && c.sup_error > 0.0) {
      c.rate = std::log(p.sup_error / c.sup_error) /
               std::log(static_cast<double>(c.n) / static_cast<double>(p.n));
    }
  }
}

inline void check_levels(const std::vector<std::size_t>& ns, std::size_t reference_n) {
  if (ns.empty()) throw InputError("nystrom_convergence: empty level list");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw InputError("nystrom_convergence: N must be strictly increasing");
  }
  if (reference_n < 4 * ns.back()) {
    throw InputError("nystrom_convergence: reference not strictly finer (need reference_N >= 4 max N)");
  }
}

}  // namespace detail

/// Errors of U_N(E_N u) against a Gauss-Legendre reference with reference_n
/// nodes, both evaluated on `target`. u is sampled at each rule's nodes.
inline ConvergenceTable nystrom_convergence(const UrysohnKernel& k,
                                            const std::function<void(double, std::span<double>)>& u,
                                            double a, double b, const std::vector<std::size_t>& ns,
                                            Scheme scheme, std::size_t reference_n,
                                            const DomainPtr& target, double beta = 1.0) {
  detail::check_levels(ns, reference_n);
  auto run = [&](const QuadratureMeasure& mu) {
    const auto un = GridFunction::sample(mu.domain_ptr(), k.n, u);
    return UrysohnOperator(k, mu, target).apply(un);
  };
  const GridFunction ref = run(lebesgue_rule(a, b, reference_n, Scheme::gauss_legendre));
  ConvergenceTable t;
  t.beta = beta;
  for (std::size_t n : ns) {
    const GridFunction e = run(lebesgue_rule(a, b, n, scheme)) - ref;
    ConvergenceRow row;
    row.n = n;
    row.sup_error = sup_norm(e);
    row.holder_error = target->size() > 1 ? holder_seminorm(e, beta).seminorm : 0.0;
    t.rows.push_back(row);
  }
  detail::fill_rates(t);
  return t;
}

/// Scalar-sampler convenience overload.
inline ConvergenceTable nystrom_convergence(const UrysohnKernel& k, const ScalarFn& u, double a,
                                            double b, const std::vector<std::size_t>& ns,
                                            Scheme scheme, std::size_t reference_n,
                                            const DomainPtr& target, double beta = 1.0) {
  return nystrom_convergence(
      k, [u](double x, std::span<double> o) { o[0] = u(x); }, a, b, ns, scheme, reference_n, target,
      beta);
}

/// Variant for data given on a fine uniform grid: the reference is the
/// trapezoid rule on the fine grid itself, and each level N (trapezoid, N
/// nodes) uses E_N u = u restricted to its nodes, which must be fine-grid nodes.
inline ConvergenceTable nystrom_convergence(const UrysohnKernel& k, const GridFunction& u_fine,
                                            const std::vector<std::size_t>& ns,
                                            const DomainPtr& target, double beta = 1.0) {
  if (!u_fine.domain().is_uniform()) {
    throw InputError("nystrom_convergence: fine data must live on a uniform interval");
  }
  detail::check_levels(ns, u_fine.size());
  const auto [a, b] = u_fine.domain().interval();
  const auto fine_mu = lebesgue_rule(a, b, u_fine.size(), Scheme::trapezoid);
  const GridFunction ref = UrysohnOperator(k, fine_mu, target).apply(
      GridFunction(fine_mu.domain_ptr(), u_fine.dim(),
                   std::vector<double>(u_fine.values().begin(), u_fine.values().end())));
  ConvergenceTable t;
  t.beta = beta;
  for (std::size_t n : ns) {
    const auto mu = lebesgue_rule(a, b, n, Scheme::trapezoid);
    const GridFunction un = restrict_to(u_fine, mu.domain_ptr());
    const GridFunction e = UrysohnOperator(k, mu, target).apply(un) - ref;
    ConvergenceRow row;
    row.n = n;
    row.sup_error = sup_norm(e);
    row.holder_error = target->size() > 1 ? holder_seminorm(e, beta).seminorm : 0.0;
    t.rows.push_back(row);
  }
  detail::fill_rates(t);
  return t;
}

// ---------------------------------------------------------------------------
// Smoothing suite

struct SmoothingCase {
  double u_seminorm = 0.0;
  double image_seminorm = 0.0;
  double interior_seminorm = 0.0;  // on [a+delta, b-delta]
  double bound = 0.0;              // [u]_alpha int l~ + 2C
  bool holds = true;
};

struct SmoothingReport {
  double alpha = 0.0;
  double r = 0.0;
  double ltilde_integral = 0.0;
  double c = 0.0;
  bool c_analytic = false;
  bool hard = false;  // analytic l~ and C registered
  std::vector<SmoothingCase> cases;

  std::size_t failures(bool strict) const {
    if (!hard && !strict) return 0;
    return static_cast<std::size_t>(
        std::count_if(cases.begin(), cases.end(), [](const SmoothingCase& c) { return !c.holds; }));
  }
};

/// [U~(u)]_alpha <= [u]_alpha int l~_r + 2C on the grid. The integral of l~_r
/// over [a-b, b-a] is a fine trapezoid sum; C comes from the registered
/// constant or, failing that, from sampled ratios (report-only).
inline SmoothingReport smoothing_suite(const ConvolutiveOperator& op,
                                       const std::vector<GridFunction>& family, double alpha,
                                       double r, double delta = 0.1) {
  detail::check_alpha(alpha, false);
  const auto& kb = op.kernel().bounds;
  const auto [a, b] = op.interval();
  SmoothingReport rep;
  rep.alpha = alpha;
  rep.r = r;
  const double wlo = a - b, whi = b - a;
  auto ltilde = kb.ltilde;
  if (!ltilde) {
    const auto kern = op.kernel();
    // sampled Lipschitz constant in z: max |D2 f~| over Halton probes
    if (!kern.d2) throw InputError("smoothing_suite: kernel needs l~ or D2 f~");
    const auto probes = caratheodory_probes(kern.z_set, r, 64);
    ltilde = [kern, probes](double, double w) {
      std::vector<double> jv(kern.d * kern.n);
      double best = 0.0;
      for (const auto& z : probes) {
        kern.d2(w, z, jv);
        best = std::max(best, detail::spectral_norm(jv.data(), kern.d, kern.n));
      }
      return best;
    };
  }
  {
    const std::size_t m = 20001;
    const double h = (whi - wlo) / static_cast<double>(m - 1);
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = wlo + h * static_cast<double>(i);
      s.add((i == 0 || i == m - 1 ? 0.5 : 1.0) * h * ltilde(r, w));
    }
    rep.ltilde_integral = s.value();
  }
  if (kb.coass) {
    rep.c = kb.coass(r, alpha, a, b);
    rep.c_analytic = true;
  } else {
    const auto kern = op.kernel();
    const auto probes = caratheodory_probes(kern.z_set, r, 64);
    const std::size_t m = 801;
    const double h = (whi - wlo) / static_cast<double>(m - 1);
    std::vector<double> cum(m, 0.0), bt(m);
    std::vector<double> val(kern.d);
    for (std::size_t i = 0; i < m; ++i) {
      double best = 0.0;
      for (const auto& z : probes) {
        kern.eval(wlo + h * static_cast<double>(i), z, val);
        best = std::max(best, detail::frobenius(val));
      }
      bt[i] = best;
      if (i > 0) cum[i] = cum[i - 1] + 0.5 * h * (bt[i] + bt[i - 1]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        rep.c = std::max(rep.c, (cum[j] - cum[i]) / std::pow(h * static_cast<double>(j - i), alpha));
      }
    }
  }
  rep.hard = kb.ltilde && rep.c_analytic;

  std::vector<double> inner;
  for (std::size_t i = 0; i < op.target()->size(); ++i) {
    const double x = op.target()->coord(i);
    if (x >= a + delta && x <= b - delta) inner.push_back(x);
  }
  DomainPtr sub = inner.size() >= 2 ? DiscreteDomain::from_coordinates(inner) : nullptr;
  for (const auto& u : family) {
    if (sup_norm(u) > r) throw InputError("smoothing_suite: test function outside the radius r");
    SmoothingCase c;
    const auto img = op.apply(u);
    c.u_seminorm = holder_seminorm(u, alpha).seminorm;
    c.image_seminorm = holder_seminorm(img, alpha).seminorm;
    if (sub) c.interior_seminorm = holder_seminorm(restrict_to(img, sub), alpha).seminorm;
    c.bound = c.u_seminorm * rep.ltilde_integral + 2.0 * rep.c;
    const double dmin = detail::min_positive_distance(*op.target());
    const double slack = detail::kRound * sup_norm(img) / std::pow(dmin, alpha);
    c.holds = c.image_seminorm <= c.bound * (1 + kSumSlack) + slack &&
              c.interior_seminorm <= c.image_seminorm * (1 + kQuotientSlack) + slack;
    rep.cases.push_back(c);
  }
  return rep;
}

}  // namespace urysohn
