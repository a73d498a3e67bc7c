#pragma once

/**
 * @file holder.hpp
 * @brief Discrete Hölder seminorms and norms, embedding and calculus checks,
 * the noncompactness diagnostic and the pathology studies.
 *
 * The discrete seminorm is the exhaustive maximum over all unordered point
 * pairs of |u(x)-u(y)| / d(x,y)^alpha (Euclidean norm on values). It is exact
 * on the grid and a lower bound for the continuum seminorm.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urysohn/detail/errors.hpp"
#include "urysohn/detail/parallel.hpp"
#include "urysohn/metric_domain.hpp"
#include "urysohn/test_functions.hpp"

namespace urysohn {

/// Relative slack for inequalities whose two sides are single quotients.
inline constexpr double kQuotientSlack = 16 * std::numeric_limits<double>::epsilon();
/// Relative slack for inequalities involving sums of several terms.
inline constexpr double kSumSlack = 1e-12;

struct HolderReport {
  double alpha = 0.0;
  double sup_norm = 0.0;
  double seminorm = 0.0;
  double norm = 0.0;
  std::pair<std::size_t, std::size_t> argmax_pair{0, 0};
};

namespace detail {

inline double value_diff_norm(const GridFunction& u, std::size_t i, std::size_t j) {
  if (u.dim() == 1) return std::fabs(u.value(i) - u.value(j));
  double s = 0.0;
  for (std::size_t c = 0; c < u.dim(); ++c) {
    const double d = u.value(i, c) - u.value(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

inline void check_alpha(double alpha, bool allow_zero) {
  const bool ok = allow_zero ? (alpha >= 0.0 && alpha <= 1.0) : (alpha > 0.0 && alpha <= 1.0);
  if (!ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "Hölder exponent %.17g outside %s", alpha,
                  allow_zero ? "[0,1]" : "(0,1]");
    throw InputError(buf);
  }
}

struct PairMax {
  double value = -1.0;
  std::size_t i = 0, j = 0;
};

// Row-range scan; strict '>' keeps the lexicographically lowest maximizing pair.
template <class Powed>
PairMax scan_rows(const GridFunction& u, std::size_t begin, std::size_t end, Powed&& powed) {
  PairMax best;
  const std::size_t n = u.size();
  const bool scalar = u.dim() == 1;
  const double* v = u.values().data();
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double num = scalar ? std::fabs(v[i] - v[j]) : value_diff_norm(u, i, j);
      const double q = num / powed(i, j);
      if (q > best.value) best = {q, i, j};
    }
  }
  return best;
}

// Table of d^alpha per index gap for uniform grids.
inline std::vector<double> powed_gaps(const DiscreteDomain& dom, double alpha) {
  std::vector<double> t(dom.size());
  t[0] = 0.0;
  for (std::size_t g = 1; g < t.size(); ++g) t[g] = std::pow(dom.gap_distance(g), alpha);
  return t;
}

}  // namespace detail

/// The Hölder quotient at a single pair, computed exactly as the seminorm scan does.
inline double holder_quotient(const GridFunction& u, std::size_t i, std::size_t j, double alpha) {
  if (i == j || i >= u.size() || j >= u.size()) throw InputError("holder_quotient: invalid pair");
  if (i > j) std::swap(i, j);
  return detail::value_diff_norm(u, i, j) / std::pow(u.domain().dist(i, j), alpha);
}

/// [u]_alpha by exhaustive pair enumeration. Ties go to the lowest (i,j).
inline HolderReport holder_seminorm(const GridFunction& u, double alpha) {
  detail::check_alpha(alpha, false);
  const std::size_t n = u.size();
  if (n < 2) throw InputError("holder_seminorm: domain needs at least 2 points");
  const DiscreteDomain& dom = u.domain();

  const std::size_t chunks = detail::chunk_count(n, 512);
  std::vector<detail::PairMax> partial(chunks);
  if (dom.is_uniform()) {
    const auto table = detail::powed_gaps(dom, alpha);
    detail::parallel_chunks(n, 512, [&](std::size_t c, std::size_t b, std::size_t e) {
      partial[c] = detail::scan_rows(u, b, e, [&](std::size_t i, std::size_t j) { return table[j - i]; });
    });
  } else {
    detail::parallel_chunks(n, 512, [&](std::size_t c, std::size_t b, std::size_t e) {
      partial[c] = detail::scan_rows(
          u, b, e, [&](std::size_t i, std::size_t j) { return std::pow(dom.dist(i, j), alpha); });
    });
  }
  detail::PairMax best;
  for (const auto& p : partial) {
    if (p.value > best.value) best = p;
  }

  HolderReport r;
  r.alpha = alpha;
  r.sup_norm = sup_norm(u);
  r.seminorm = best.value;
  r.norm = std::max(r.sup_norm, r.seminorm);
  r.argmax_pair = {best.i, best.j};
  return r;
}

/// ||u||_alpha = max{||u||_0, [u]_alpha}; for alpha = 0 the sup-norm alone.
inline HolderReport holder_norm(const GridFunction& u, double alpha) {
  detail::check_alpha(alpha, true);
  if (alpha == 0.0) {
    HolderReport r;
    r.sup_norm = sup_norm(u);
    r.norm = r.sup_norm;
    return r;
  }
  return holder_seminorm(u, alpha);
}

/// max{|u(x0)|, [u]_alpha}.
inline double equivalent_norm(const GridFunction& u, double alpha, std::size_t base_index) {
  detail::check_alpha(alpha, false);
  if (base_index >= u.size()) {
    throw InputError("equivalent_norm: base index " + std::to_string(base_index) +
                     " out of range");
  }
  return std::max(euclid(u[base_index]), holder_seminorm(u, alpha).seminorm);
}

/// Upper constant c in ||u||_alpha <= c * ||u||'_alpha.
inline double equivalent_norm_constant(const DiscreteDomain& dom, double alpha) {
  return 1.0 + std::max(std::pow(dom.diameter(), alpha), 1.0);
}

struct EmbeddingCheck {
  double seminorm_lhs = 0.0, seminorm_rhs = 0.0;
  double norm_lhs = 0.0, norm_rhs = 0.0;
  bool holds = true;
};

/// [u]_alpha <= diam^(beta-alpha) [u]_beta  and
/// ||u||_alpha <= max{1, diam^(beta-alpha)} ||u||_beta.
inline EmbeddingCheck embedding_check(const GridFunction& u, double alpha, double beta) {
  detail::check_alpha(alpha, false);
  detail::check_alpha(beta, false);
  if (alpha > beta) throw InputError("embedding_check: need alpha <= beta");
  const auto ra = holder_seminorm(u, alpha);
  const auto rb = alpha == beta ? ra : holder_seminorm(u, beta);
  const double factor = std::pow(u.domain().diameter(), beta - alpha);
  EmbeddingCheck c;
  c.seminorm_lhs = ra.seminorm;
  c.seminorm_rhs = factor * rb.seminorm;
  c.norm_lhs = ra.norm;
  c.norm_rhs = std::max(1.0, factor) * rb.norm;
  c.holds = c.seminorm_lhs <= c.seminorm_rhs * (1 + kQuotientSlack) &&
            c.norm_lhs <= c.norm_rhs * (1 + kQuotientSlack);
  return c;
}

/// A scalar outer map with its analytic Hölder exponent and constant.
struct OuterMap {
  std::function<double(double)> fn;
  double alpha = 1.0;
  double holder_constant = 1.0;
};

struct RuleCheck {
  double lhs = 0.0, rhs = 0.0;
  bool holds = true;
  std::pair<std::size_t, std::size_t> witness{0, 0};  // argmax pair of the lhs
};

struct CalculusRulesCheck {
  RuleCheck sum, product, chain;
};

/// Sum, product and chain rules. The sum and product rules use alpha1; the
/// chain rule checks [outer o u1]_{alpha1*outer.alpha} <= [u1]_{alpha1}^{outer.alpha} * H.
inline CalculusRulesCheck calculus_rules_check(const GridFunction& u1, const GridFunction& u2,
                                               double alpha1, double lambda1, double lambda2,
                                               const OuterMap& outer) {
  require_compatible(u1, u2, "calculus_rules_check");
  detail::check_alpha(alpha1, false);
  detail::check_alpha(outer.alpha, false);
  const auto r1 = holder_seminorm(u1, alpha1);
  const auto r2 = holder_seminorm(u2, alpha1);

  CalculusRulesCheck out;
  {
    const auto rs = holder_seminorm(lincomb(lambda1, u1, lambda2, u2), alpha1);
    out.sum.lhs = rs.seminorm;
    out.sum.rhs = std::fabs(lambda1) * r1.seminorm + std::fabs(lambda2) * r2.seminorm;
    out.sum.witness = rs.argmax_pair;
    out.sum.holds = out.sum.lhs <= out.sum.rhs * (1 + kSumSlack);
  }
  {
    std::vector<double> p(u1.values().size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = u1.values()[k] * u2.values()[k];
    const auto rp = holder_seminorm(GridFunction(u1.domain_ptr(), u1.dim(), std::move(p)), alpha1);
    out.product.lhs = rp.seminorm;
    out.product.rhs = r2.sup_norm * r1.seminorm + r1.sup_norm * r2.seminorm;
    out.product.witness = rp.argmax_pair;
    out.product.holds = out.product.lhs <= out.product.rhs * (1 + kSumSlack);
  }
  {
    if (u1.dim() != 1) throw InputError("calculus_rules_check: chain rule needs scalar u1");
    std::vector<double> c(u1.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = outer.fn(u1.value(i));
    const auto rc =
        holder_seminorm(GridFunction(u1.domain_ptr(), 1, std::move(c)), alpha1 * outer.alpha);
    out.chain.lhs = rc.seminorm;
    out.chain.rhs = std::pow(r1.seminorm, outer.alpha) * outer.holder_constant;
    out.chain.witness = rc.argmax_pair;
    out.chain.holds = out.chain.lhs <= out.chain.rhs * (1 + kSumSlack);
  }
  return out;
}

struct ChiEntry {
  double epsilon = 0.0;
  std::optional<double> chi;  // empty when no pair lies within epsilon
};

/// chi_eps = sup over the family of the Hölder quotients at pairs with
/// 0 < d(x,y) <= eps, for each eps of a decreasing list.
inline std::vector<ChiEntry> noncompactness_chi(const std::vector<GridFunction>& family,
                                                double alpha,
                                                const std::vector<double>& epsilons) {
  if (family.empty()) throw InputError("noncompactness_chi: empty family");
  detail::check_alpha(alpha, false);
  if (epsilons.empty()) throw InputError("noncompactness_chi: no epsilons");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0)) throw InputError("noncompactness_chi: epsilons must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) {
      throw InputError("noncompactness_chi: epsilons must be strictly decreasing");
    }
  }
  const std::size_t m = epsilons.size();
  std::vector<double> best(m, -1.0);
  for (const auto& u : family) {
    const DiscreteDomain& dom = u.domain();
    const std::size_t n = u.size();
    const std::size_t chunks = detail::chunk_count(n, 512);
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(m, -1.0));
    detail::parallel_chunks(n, 512, [&](std::size_t c, std::size_t b, std::size_t e) {
      auto& loc = partial[c];
      for (std::size_t i = b; i < e; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double d = dom.dist(i, j);
          if (d > epsilons[0]) continue;
          const double q = detail::value_diff_norm(u, i, j) / std::pow(d, alpha);
          for (std::size_t k = 0; k < m && d <= epsilons[k]; ++k) loc[k] = std::max(loc[k], q);
        }
      }
    });
    for (const auto& loc : partial) {
      for (std::size_t k = 0; k < m; ++k) best[k] = std::max(best[k], loc[k]);
    }
  }
  std::vector<ChiEntry> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    out[k].epsilon = epsilons[k];
    if (best[k] >= 0.0) out[k].chi = best[k];
  }
  return out;
}

struct PathologyConfig {
  std::vector<std::size_t> levels{64, 256, 1024, 4096};  // subintervals per level
  std::vector<double> log_alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double weierstrass_tolerance = 0.05;  // max relative change between levels
  std::size_t smooth_points = 1001;
};

struct PathologyReport {
  std::vector<std::size_t> levels;
  // (a) log_table[a][l] = [u]_alpha at level l for log_alphas[a]
  std::vector<double> log_alphas;
  std::vector<std::vector<double>> log_table;
  std::vector<bool> log_strictly_increasing;
  bool log_pass = true;
  // (b) Weierstrass on [0,1]
  double weierstrass_alpha = 0.0;
  std::vector<double> weierstrass_alpha_seminorms;
  std::vector<double> weierstrass_lipschitz;
  double weierstrass_max_change = 0.0;
  bool weierstrass_bounded = true;
  bool weierstrass_lipschitz_grows = true;
  // (c) sin on [0,2], alpha = 1/2
  double smooth_seminorm = 0.0;
  double smooth_bound = 0.0;
  bool smooth_pass = true;

  bool pass() const { return log_pass && weierstrass_bounded && smooth_pass; }
};

inline PathologyReport pathology_suite(const PathologyConfig& cfg = {}) {
  if (cfg.levels.size() < 2) throw InputError("pathology_suite: need at least 2 levels");
  PathologyReport rep;
  rep.levels = cfg.levels;
  rep.log_alphas = cfg.log_alphas;

  rep.log_table.assign(cfg.log_alphas.size(), {});
  for (std::size_t level : cfg.levels) {
    auto dom = DiscreteDomain::uniform_interval(-0.5, 0.5, level + 1);
    const auto u = GridFunction::sample(dom, log_pathology());
    for (std::size_t a = 0; a < cfg.log_alphas.size(); ++a) {
      rep.log_table[a].push_back(holder_seminorm(u, cfg.log_alphas[a]).seminorm);
    }
  }
  for (const auto& row : rep.log_table) {
    bool inc = true;
    for (std::size_t l = 1; l < row.size(); ++l) inc = inc && row[l] > row[l - 1];
    rep.log_strictly_increasing.push_back(inc);
    rep.log_pass = rep.log_pass && inc;
  }

  rep.weierstrass_alpha = weierstrass_exponent(0.5, 13);
  const auto w = weierstrass(0.5, 13, 60);
  for (std::size_t level : cfg.levels) {
    auto dom = DiscreteDomain::uniform_interval(0.0, 1.0, level + 1);
    const auto u = GridFunction::sample(dom, w);
    rep.weierstrass_alpha_seminorms.push_back(holder_seminorm(u, rep.weierstrass_alpha).seminorm);
    rep.weierstrass_lipschitz.push_back(holder_seminorm(u, 1.0).seminorm);
  }
  for (std::size_t l = 1; l < cfg.levels.size(); ++l) {
    const double prev = rep.weierstrass_alpha_seminorms[l - 1];
    const double change = std::fabs(rep.weierstrass_alpha_seminorms[l] - prev) / prev;
    rep.weierstrass_max_change = std::max(rep.weierstrass_max_change, change);
    rep.weierstrass_lipschitz_grows =
        rep.weierstrass_lipschitz_grows &&
        rep.weierstrass_lipschitz[l] > rep.weierstrass_lipschitz[l - 1];
  }
  rep.weierstrass_bounded = rep.weierstrass_max_change < cfg.weierstrass_tolerance;

  {
    auto dom = DiscreteDomain::uniform_interval(0.0, 2.0, cfg.smooth_points);
    const auto u = GridFunction::sample(dom, [](double x) { return std::sin(x); });
    rep.smooth_seminorm = holder_seminorm(u, 0.5).seminorm;
    rep.smooth_bound = std::pow(dom->diameter(), 0.5) * 1.0;  // sup|cos| = 1
    rep.smooth_pass = rep.smooth_seminorm <= rep.smooth_bound * (1 + kQuotientSlack);
  }
  return rep;
}

/// Key/value text form of a report.
inline std::string to_text(const HolderReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "alpha=%.17g\nsup_norm=%.17g\nseminorm=%.17g\nnorm=%.17g\nargmax_i=%zu\n"
                "argmax_j=%zu\n",
                r.alpha, r.sup_norm, r.seminorm, r.norm, r.argmax_pair.first,
                r.argmax_pair.second);
  return buf;
}

}  // namespace urysohn
