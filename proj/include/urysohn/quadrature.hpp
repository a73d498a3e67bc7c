#pragma once

// Finite measures on a DiscreteDomain: composite Lebesgue rules and arbitrary
// node/weight (Nyström) measures behind one integration interface.

#include <cmath>
#include <cstddef>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"
#include "urysohn/detail/summation.hpp"
#include "urysohn/metric_domain.hpp"

namespace urysohn {

enum class Scheme { trapezoid, midpoint, gauss_legendre };

inline Scheme parse_scheme(const std::string& name) {
  if (name == "trapezoid") return Scheme::trapezoid;
  if (name == "midpoint") return Scheme::midpoint;
  if (name == "gauss_legendre") return Scheme::gauss_legendre;
  throw InputError("unknown quadrature scheme '" + name + "'");
}

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::trapezoid: return "trapezoid";
    case Scheme::midpoint: return "midpoint";
    case Scheme::gauss_legendre: return "gauss_legendre";
  }
  return "?";
}

class QuadratureMeasure {
 public:
  QuadratureMeasure(DomainPtr domain, std::vector<double> weights)
      : domain_(std::move(domain)), weights_(std::move(weights)) {
    if (!domain_) throw InputError("QuadratureMeasure: null domain");
    if (weights_.size() != domain_->size()) {
      throw InputError("QuadratureMeasure: " + std::to_string(weights_.size()) +
                       " weights for " + std::to_string(domain_->size()) + " points");
    }
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!std::isfinite(weights_[i])) throw InputError("QuadratureMeasure: non-finite weight");
      if (weights_[i] < 0.0) {
        throw InputError("unstable rule: negative weight " + detail::format_double(weights_[i]) +
                         " at node " + std::to_string(i));
      }
    }
    total_mass_ = detail::compensated_sum(weights_);
    if (!std::isfinite(total_mass_)) throw InputError("QuadratureMeasure: infinite total mass");
  }

  const DiscreteDomain& domain() const noexcept { return *domain_; }
  const DomainPtr& domain_ptr() const noexcept { return domain_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double total_mass() const noexcept { return total_mass_; }

 private:
  DomainPtr domain_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
};

/// Gauss-Legendre nodes (ascending) and weights on [-1,1], by Newton iteration
/// on the three-term recurrence.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
  if (n == 0) throw InputError("gauss_legendre: need at least one node");
  std::vector<double> x(n), w(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2 * kk - 1) * z * p1 - (kk - 1) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) <= 1e-16 * std::max(1.0, std::fabs(z))) break;
    }
    // Recompute P'_n at the converged root for the weight.
    {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2 * kk - 1) * z * p1 - (kk - 1) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = n == 1 ? 1.0 : static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
    }
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[n - 1 - i] = z;
    x[i] = -z;
    w[i] = w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return {x, w};
}

/// Composite rule for Lebesgue measure on [a,b]. The domain is generated to
/// carry the rule's own nodes.
inline QuadratureMeasure lebesgue_rule(double a, double b, std::size_t n, Scheme scheme) {
  if (!(a < b)) throw InputError("lebesgue_rule: need a < b");
  switch (scheme) {
    case Scheme::trapezoid: {
      if (n < 2) throw InputError("lebesgue_rule: trapezoid needs N >= 2");
      auto dom = DiscreteDomain::uniform_interval(a, b, n);
      const double h = (b - a) / static_cast<double>(n - 1);
      std::vector<double> w(n, h);
      w.front() = w.back() = 0.5 * h;
      return {dom, std::move(w)};
    }
    case Scheme::midpoint: {
      if (n < 1) throw InputError("lebesgue_rule: midpoint needs N >= 1");
      const double h = (b - a) / static_cast<double>(n);
      DomainPtr dom = n == 1 ? DiscreteDomain::from_coordinates({0.5 * (a + b)})
                             : DiscreteDomain::uniform_interval(a + 0.5 * h, b - 0.5 * h, n);
      return {dom, std::vector<double>(n, h)};
    }
    case Scheme::gauss_legendre: {
      auto [t, wt] = gauss_legendre(n);
      const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = mid + rad * t[i];
        wt[i] *= rad;
      }
      return {DiscreteDomain::from_coordinates(std::move(t)), std::move(wt)};
    }
  }
  throw InputError("lebesgue_rule: invalid scheme");
}

/// Arbitrary node/weight measure; a negative weight is rejected as an unstable rule.
inline QuadratureMeasure nystrom_measure(DomainPtr domain, std::vector<double> weights) {
  return {std::move(domain), std::move(weights)};
}

/// Componentwise  sum_y w_y u(y)  with compensated summation.
inline std::vector<double> integrate(const QuadratureMeasure& mu, const GridFunction& u) {
  if (!mu.domain().same_as(u.domain())) throw InputError("integrate: domain mismatch");
  std::vector<double> out(u.dim());
  for (std::size_t c = 0; c < u.dim(); ++c) {
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < mu.size(); ++i) s.add(mu.weight(i) * u.value(i, c));
    out[c] = s.value();
  }
  return out;
}

/// Two-column CSV "x,w".
inline void write_measure_csv(std::ostream& out, const QuadratureMeasure& mu) {
  out << "x,w\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    detail::write_row(out, {mu.domain().coord(i), mu.weight(i)});
  }
}

inline QuadratureMeasure read_measure_csv(std::istream& in) {
  auto table = detail::read_numeric_csv(in);
  if (table.header.size() != 2) throw CsvError(1, "expected two columns x,w");
  if (table.rows.empty()) throw CsvError(2, "no data rows");
  std::vector<double> x, w;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    x.push_back(table.rows[r][0]);
    w.push_back(table.rows[r][1]);
    if (w.back() < 0.0) throw CsvError(table.row_lines[r], "unstable rule: negative weight");
  }
  DomainPtr dom;
  if (x.size() >= 2 && x.front() < x.back()) {
    auto uni = DiscreteDomain::uniform_interval(x.front(), x.back(), x.size());
    if (std::equal(x.begin(), x.end(), uni->coords().begin())) dom = uni;
  }
  if (!dom) {
    try {
      dom = DiscreteDomain::from_coordinates(x);
    } catch (const InputError& e) {
      throw CsvError(table.row_lines.front(), e.what());
    }
  }
  return {dom, std::move(w)};
}

}  // namespace urysohn
