#pragma once

/**
 * @file metric_domain.hpp
 * @brief Finite stand-ins for compact metric spaces and functions sampled on them.
 *
 * A DiscreteDomain is an ordered point set with a metric. Three flavours exist:
 *
 *   - uniform intervals [a,b] with N nodes (index-gap metric, exact diameter b-a),
 *   - arbitrary coordinate sets with d(x,y) = |x-y|,
 *   - point clouds carrying a user-supplied symmetric distance matrix.
 *
 * GridFunction holds R^n-valued samples, one vector per point. Both types are
 * immutable after construction and can be shared across threads.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"

namespace urysohn {

/// Coordinate tolerance used when matching points of two domains.
inline constexpr double kPointMatchTolerance = 1e-12;

class DiscreteDomain;
using DomainPtr = std::shared_ptr<const DiscreteDomain>;

class DiscreteDomain {
 public:
  enum class Kind { uniform, coordinates, point_cloud };

  /// N equally spaced nodes on [a,b], both endpoints included.
  static DomainPtr uniform_interval(double a, double b, std::size_t n) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
      throw InputError("uniform_interval: need finite a < b");
    }
    if (n < 2) throw InputError("uniform_interval: need at least 2 points");
    std::vector<double> x(n);
    const double len = b - a;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + (static_cast<double>(i) / denom) * len;
    x.back() = b;
    auto d = std::shared_ptr<DiscreteDomain>(new DiscreteDomain(Kind::uniform, std::move(x)));
    d->a_ = a;
    d->b_ = b;
    d->diameter_ = len;
    return d;
  }

  /// Distinct real coordinates with the metric |x - y|. Order is preserved.
  static DomainPtr from_coordinates(std::vector<double> x) {
    if (x.empty()) throw InputError("from_coordinates: empty point set");
    for (double v : x) {
      if (!std::isfinite(v)) throw InputError("from_coordinates: non-finite coordinate");
    }
    auto d = std::shared_ptr<DiscreteDomain>(new DiscreteDomain(Kind::coordinates, std::move(x)));
    d->build_sorted_index();
    const auto [lo, hi] = std::minmax_element(d->x_.begin(), d->x_.end());
    d->diameter_ = *hi - *lo;
    return d;
  }

  /// Explicit point cloud with a row-major n*n distance matrix.
  static DomainPtr point_cloud(std::vector<double> x, std::vector<double> distances) {
    const std::size_t n = x.size();
    if (n == 0) throw InputError("point_cloud: empty point set");
    if (distances.size() != n * n) throw InputError("point_cloud: distance matrix must be n*n");
    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (distances[i * n + i] != 0.0) throw InputError("point_cloud: nonzero diagonal distance");
      for (std::size_t j = 0; j < n; ++j) {
        const double dij = distances[i * n + j];
        if (!std::isfinite(dij) || dij < 0.0) throw InputError("point_cloud: invalid distance");
        if (dij != distances[j * n + i]) throw InputError("point_cloud: distance matrix not symmetric");
        if (i != j && dij == 0.0) throw InputError("point_cloud: distinct points at distance 0");
        diam = std::max(diam, dij);
      }
    }
    auto d = std::shared_ptr<DiscreteDomain>(new DiscreteDomain(Kind::point_cloud, std::move(x)));
    d->dist_ = std::move(distances);
    d->diameter_ = diam;
    d->build_sorted_index();
    return d;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_uniform() const noexcept { return kind_ == Kind::uniform; }
  std::size_t size() const noexcept { return x_.size(); }
  double coord(std::size_t i) const { return x_[i]; }
  std::span<const double> coords() const noexcept { return x_; }
  double diameter() const noexcept { return diameter_; }

  /// Endpoints of a uniform interval.
  std::pair<double, double> interval() const {
    if (!is_uniform()) throw InputError("interval(): domain is not a uniform interval");
    return {a_, b_};
  }

  /// For uniform domains, the distance between nodes whose indices differ by gap.
  double gap_distance(std::size_t gap) const {
    return (static_cast<double>(gap) / static_cast<double>(x_.size() - 1)) * (b_ - a_);
  }

  double dist(std::size_t i, std::size_t j) const {
    switch (kind_) {
      case Kind::uniform:
        return gap_distance(i > j ? i - j : j - i);
      case Kind::coordinates:
        return std::fabs(x_[i] - x_[j]);
      case Kind::point_cloud:
        return dist_[i * x_.size() + j];
    }
    return 0.0;
  }

  /// Index of the node at coordinate x (within tol), if any.
  std::optional<std::size_t> find(double x, double tol = kPointMatchTolerance) const {
    if (is_uniform()) {
      const double pos = (x - a_) / (b_ - a_) * static_cast<double>(x_.size() - 1);
      const double r = std::round(pos);
      if (r < 0.0 || r > static_cast<double>(x_.size() - 1)) return std::nullopt;
      const auto i = static_cast<std::size_t>(r);
      if (std::fabs(x_[i] - x) <= tol) return i;
      return std::nullopt;
    }
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x - tol,
                               [&](std::size_t idx, double v) { return x_[idx] < v; });
    std::optional<std::size_t> best;
    for (; it != sorted_.end() && x_[*it] <= x + tol; ++it) {
      if (!best || std::fabs(x_[*it] - x) < std::fabs(x_[*best] - x)) best = *it;
    }
    return best;
  }

  /// Same points (bitwise coordinates) and same metric.
  bool same_as(const DiscreteDomain& other) const {
    if (this == &other) return true;
    return kind_ == other.kind_ && x_ == other.x_ && dist_ == other.dist_ && a_ == other.a_ &&
           b_ == other.b_;
  }

  /// Checks d(i,k) <= d(i,j) + d(j,k) on `samples` pseudo-random triples.
  /// Returns the worst relative excess (<= 0 when the inequality holds).
  double triangle_excess(std::size_t samples, std::uint64_t seed) const {
    const std::size_t n = size();
    if (n < 3) return 0.0;
    std::uint64_t s = seed ? seed : 0x9E3779B97F4A7C15ull;
    auto next = [&s, n] {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      return static_cast<std::size_t>(s % n);
    };
    double worst = -INFINITY;
    for (std::size_t t = 0; t < samples; ++t) {
      const std::size_t i = next(), j = next(), k = next();
      const double lhs = dist(i, k);
      const double rhs = dist(i, j) + dist(j, k);
      const double scale = std::max(diameter_, 1e-300);
      worst = std::max(worst, (lhs - rhs) / scale);
    }
    return worst;
  }

 private:
  DiscreteDomain(Kind kind, std::vector<double> x) : kind_(kind), x_(std::move(x)) {}

  void build_sorted_index() {
    sorted_.resize(x_.size());
    std::iota(sorted_.begin(), sorted_.end(), std::size_t{0});
    std::stable_sort(sorted_.begin(), sorted_.end(),
                     [&](std::size_t i, std::size_t j) { return x_[i] < x_[j]; });
    if (kind_ == Kind::coordinates) {
      for (std::size_t k = 1; k < sorted_.size(); ++k) {
        if (x_[sorted_[k]] == x_[sorted_[k - 1]]) {
          throw InputError("from_coordinates: duplicate coordinate " +
                           detail::format_double(x_[sorted_[k]]));
        }
      }
    }
  }

  Kind kind_;
  std::vector<double> x_;
  std::vector<double> dist_;
  std::vector<std::size_t> sorted_;
  double a_ = 0.0;
  double b_ = 0.0;
  double diameter_ = 0.0;
};

/// R^n-valued samples on a DiscreteDomain; values stored point-major.
class GridFunction {
 public:
  GridFunction(DomainPtr domain, std::size_t dim, std::vector<double> values)
      : domain_(std::move(domain)), dim_(dim), values_(std::move(values)) {
    if (!domain_) throw InputError("GridFunction: null domain");
    if (dim_ == 0) throw InputError("GridFunction: codomain dimension must be positive");
    if (values_.size() != domain_->size() * dim_) {
      throw InputError("GridFunction: expected " + std::to_string(domain_->size() * dim_) +
                       " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw NumericalError("GridFunction: non-finite value at point " +
                             std::to_string(k / dim_) + " (x = " +
                             detail::format_double(domain_->coord(k / dim_)) + ")");
      }
    }
  }

  /// Samples a scalar function x -> f(x).
  static GridFunction sample(DomainPtr domain, const std::function<double(double)>& f) {
    std::vector<double> v(domain->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(domain->coord(i));
    return GridFunction(std::move(domain), 1, std::move(v));
  }

  /// Samples a vector function; f(x, out) writes dim values.
  static GridFunction sample(DomainPtr domain, std::size_t dim,
                             const std::function<void(double, std::span<double>)>& f) {
    std::vector<double> v(domain->size() * dim);
    for (std::size_t i = 0; i < domain->size(); ++i) {
      f(domain->coord(i), std::span<double>(v.data() + i * dim, dim));
    }
    return GridFunction(std::move(domain), dim, std::move(v));
  }

  static GridFunction constant(DomainPtr domain, std::span<const double> c) {
    std::vector<double> v;
    v.reserve(domain->size() * c.size());
    for (std::size_t i = 0; i < domain->size(); ++i) v.insert(v.end(), c.begin(), c.end());
    return GridFunction(std::move(domain), c.size(), std::move(v));
  }

  static GridFunction constant(DomainPtr domain, double c) {
    const double cs[1] = {c};
    return constant(std::move(domain), cs);
  }

  static GridFunction zeros(DomainPtr domain, std::size_t dim) {
    const std::size_t n = domain->size() * dim;
    return GridFunction(std::move(domain), dim, std::vector<double>(n, 0.0));
  }

  const DiscreteDomain& domain() const noexcept { return *domain_; }
  const DomainPtr& domain_ptr() const noexcept { return domain_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return domain_->size(); }

  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  double value(std::size_t i, std::size_t c = 0) const { return values_[i * dim_ + c]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  DomainPtr domain_;
  std::size_t dim_;
  std::vector<double> values_;
};

inline bool same_domain(const GridFunction& u, const GridFunction& v) {
  return u.domain().same_as(v.domain());
}

inline void require_compatible(const GridFunction& u, const GridFunction& v, const char* who) {
  if (!same_domain(u, v)) throw InputError(std::string(who) + ": domain mismatch");
  if (u.dim() != v.dim()) throw InputError(std::string(who) + ": codomain dimension mismatch");
}

/// a*u + b*v on the common domain.
inline GridFunction lincomb(double a, const GridFunction& u, double b, const GridFunction& v) {
  require_compatible(u, v, "lincomb");
  std::vector<double> w(u.values().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = a * u.values()[k] + b * v.values()[k];
  return GridFunction(u.domain_ptr(), u.dim(), std::move(w));
}

inline GridFunction operator+(const GridFunction& u, const GridFunction& v) {
  return lincomb(1.0, u, 1.0, v);
}
inline GridFunction operator-(const GridFunction& u, const GridFunction& v) {
  return lincomb(1.0, u, -1.0, v);
}
inline GridFunction operator*(double a, const GridFunction& u) {
  std::vector<double> w(u.values().begin(), u.values().end());
  for (double& x : w) x *= a;
  return GridFunction(u.domain_ptr(), u.dim(), std::move(w));
}

/// Euclidean norm of a value vector.
inline double euclid(std::span<const double> v) {
  if (v.size() == 1) return std::fabs(v[0]);
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// ||u||_0 = max over points of the Euclidean norm of u(x).
inline double sup_norm(const GridFunction& u) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, euclid(u[i]));
  return m;
}

/// E u := u restricted to the points of `sub`.
inline GridFunction restrict_to(const GridFunction& u, const DomainPtr& sub) {
  if (sub->same_as(u.domain())) return u;
  std::vector<double> v;
  v.reserve(sub->size() * u.dim());
  for (std::size_t i = 0; i < sub->size(); ++i) {
    auto idx = u.domain().find(sub->coord(i));
    if (!idx) {
      throw InputError("restrict: point x = " + detail::format_double(sub->coord(i)) +
                       " is not a node of the source domain");
    }
    auto val = u[*idx];
    v.insert(v.end(), val.begin(), val.end());
  }
  return GridFunction(sub, u.dim(), std::move(v));
}

/// CSV: header "x,u0,...,u{n-1}", one row per point.
inline void write_csv(std::ostream& out, const GridFunction& u) {
  out << "x";
  for (std::size_t c = 0; c < u.dim(); ++c) out << ",u" << c;
  out << '\n';
  for (std::size_t i = 0; i < u.size(); ++i) {
    out << detail::format_double(u.domain().coord(i));
    for (double v : u[i]) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

/// Inverse of write_csv. Rebuilds a uniform interval when the coordinates are
/// bitwise identical to uniform_interval(x_first, x_last, N).
inline GridFunction read_grid_function_csv(std::istream& in) {
  auto table = detail::read_numeric_csv(in);
  if (table.header.size() < 2) {
    throw CsvError(1, "need a coordinate column and at least one value column");
  }
  if (table.rows.empty()) throw CsvError(2, "no data rows");
  const std::size_t dim = table.header.size() - 1;
  std::vector<double> x, v;
  for (const auto& row : table.rows) {
    x.push_back(row[0]);
    v.insert(v.end(), row.begin() + 1, row.end());
  }
  DomainPtr domain;
  if (x.size() >= 2 && x.front() < x.back()) {
    auto uni = DiscreteDomain::uniform_interval(x.front(), x.back(), x.size());
    if (std::equal(x.begin(), x.end(), uni->coords().begin())) domain = uni;
  }
  if (!domain) {
    try {
      domain = DiscreteDomain::from_coordinates(x);
    } catch (const InputError& e) {
      throw CsvError(table.row_lines.front(), e.what());
    }
  }
  return GridFunction(domain, dim, std::move(v));
}

}  // namespace urysohn
