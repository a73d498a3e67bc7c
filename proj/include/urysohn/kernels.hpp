#pragma once

/**
 * @file kernels.hpp
 * @brief Kernel functions for every operator class, the builtin kernel
 * library, and sampled Carathéodory bound tables.
 *
 * Kernels are evaluation callbacks with optional analytic derivatives.
 * Callbacks must be pure and reentrant, and must be evaluable on a small
 * neighbourhood of the admissible set Z (finite differences and boundary
 * derivatives probe slightly outside Z).
 *
 * Layouts: D3 f is d x n row-major, D3^2 f is d x n x n with index
 * (i*n + j)*n + l.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"
#include "urysohn/metric_domain.hpp"

namespace urysohn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Axis-aligned box admissible set (bounds may be infinite).
struct ZSet {
  std::vector<double> lo, hi;
  /// Violations larger than this are errors instead of clamps.
  double clamp_tolerance = kInf;

  static ZSet all(std::size_t n) { return {std::vector<double>(n, -kInf), std::vector<double>(n, kInf)}; }
  static ZSet box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size()) throw InputError("ZSet: bound size mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(lo[i] <= hi[i])) throw InputError("ZSet: empty box");
    }
    return {std::move(lo), std::move(hi)};
  }
  static ZSet interval(double lo, double hi) { return box({lo}, {hi}); }

  std::size_t dim() const { return lo.size(); }
  bool convex() const { return true; }

  bool contains(std::span<const double> z) const {
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] < lo[i] || z[i] > hi[i]) return false;
    }
    return true;
  }

  /// Projects z onto the box. Returns true when a coordinate moved.
  bool clamp(std::span<double> z) const {
    bool moved = false;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double c = std::clamp(z[i], lo[i], hi[i]);
      if (c != z[i]) {
        if (std::fabs(c - z[i]) > clamp_tolerance) {
          throw InputError("value " + detail::format_double(z[i]) + " outside the admissible set");
        }
        z[i] = c;
        moved = true;
      }
    }
    return moved;
  }
};

using UrysohnFn = std::function<void(double x, double y, std::span<const double> z, std::span<double> out)>;
using GrowthFn = std::function<void(double x, std::span<const double> z, std::span<double> out)>;
using FredholmFn = std::function<void(double x, double y, std::span<double> out)>;
using ConvFn = std::function<void(double w, std::span<const double> z, std::span<double> out)>;

/// Analytic bound functions registered with an Urysohn kernel (all optional).
struct UrysohnBounds {
  /// |f(x,y,z)| <= b0(r,x,y) for z in Z with |z| <= r.
  std::function<double(double r, double x, double y)> b0;
  /// |f(x,y,z)-f(x,y,z')| <= lipschitz(r,x,y) |z-z'|^theta.
  std::function<double(double r, double x, double y)> lipschitz;
  double theta = 1.0;
  /// |f(x,y,z)-f(x',y,z)| <= hbar0(r,y,xlo,xhi) |x-x'|^beta for x,x' in [xlo,xhi].
  std::function<double(double r, double y, double xlo, double xhi)> hbar0;
  double beta = 1.0;
};

struct UrysohnKernel {
  std::string name;
  std::size_t n = 1;  // state dimension
  std::size_t d = 1;  // output dimension
  UrysohnFn eval;
  UrysohnFn d3;   // d x n, optional
  UrysohnFn d33;  // d x n x n, optional
  ZSet z_set = ZSet::all(1);
  UrysohnBounds bounds;
};

/// Matrix kernel k(x,y) in R^{d x p}.
struct FredholmKernel {
  std::string name;
  std::size_t d = 1, p = 1;
  FredholmFn eval;
  /// Optional: |k(x,y)-k(x',y)| <= lipschitz_x |x-x'|^beta_x.
  double lipschitz_x = kInf;
  double beta_x = 1.0;
};

struct GrowthBounds {
  /// |g(x,z)-g(x,z')| <= lipschitz(r) |z-z'|^theta on Z with |z|,|z'| <= r.
  std::function<double(double r)> lipschitz;
  double theta = 1.0;
  /// sup |g(x,z)| over x and z in Z with |z| <= r.
  std::function<double(double r)> sup;
};

/// Nemytskii generator g(x,z) in R^p.
struct GrowthSpec {
  std::string name;
  std::size_t n = 1, p = 1;
  GrowthFn eval;
  GrowthFn d2;   // p x n, optional
  GrowthFn d22;  // p x n x n, optional
  ZSet z_set = ZSet::all(1);
  GrowthBounds bounds;
};

struct ConvolutionBounds {
  /// |f~(w,z)-f~(w,z')| <= ltilde(r,w) |z-z'|.
  std::function<double(double r, double w)> ltilde;
  /// |f~(w,z)| <= btilde0(r,w).
  std::function<double(double r, double w)> btilde0;
  /// C with  int_x^x' btilde0(r,y) dy <= C (x'-x)^alpha  on [a-b, b-a].
  std::function<double(double r, double alpha, double a, double b)> coass;
};

/// Convolution kernel f~(w,z) in R^d, w in [a-b, b-a].
struct ConvolutionKernel {
  std::string name;
  std::size_t n = 1, d = 1;
  ConvFn eval;
  ConvFn d1;  // d, optional
  ConvFn d2;  // d x n, optional
  ZSet z_set = ZSet::all(1);
  ConvolutionBounds bounds;
};

using AnyKernel = std::variant<UrysohnKernel, FredholmKernel, GrowthSpec, ConvolutionKernel>;

// ---------------------------------------------------------------------------
// Builtins

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(what) + " must be positive");
}

inline void require_params(const std::vector<double>& p, std::size_t lo, std::size_t hi,
                           const std::string& name) {
  if (p.size() < lo || p.size() > hi) {
    throw InputError(name + ": expected " + std::to_string(lo) +
                     (lo == hi ? "" : ".." + std::to_string(hi)) + " parameters, got " +
                     std::to_string(p.size()));
  }
}

inline double spectral_norm(const double* a, std::size_t rows, std::size_t cols) {
  if (rows == 1 || cols == 1) {
    double s = 0.0;
    for (std::size_t k = 0; k < rows * cols; ++k) s += a[k] * a[k];
    return std::sqrt(s);
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      a, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline double frobenius(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

/// k(x,y) = (2 pi s^2)^{-1/2} exp(-(x-y)^2 / (2 s^2)).
inline FredholmKernel gaussian_dispersal(double sigma) {
  detail::require_positive(sigma, "gaussian_dispersal: sigma");
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
  FredholmKernel k;
  k.name = "gaussian_dispersal";
  k.eval = [c, sigma](double x, double y, std::span<double> out) {
    const double w = (x - y) / sigma;
    out[0] = c * std::exp(-0.5 * w * w);
  };
  k.lipschitz_x = c * std::exp(-0.5) / sigma;
  return k;
}

/// k(x,y) = exp(-|x-y|/s) / (2 s).
inline FredholmKernel laplace_dispersal(double sigma) {
  detail::require_positive(sigma, "laplace_dispersal: sigma");
  FredholmKernel k;
  k.name = "laplace_dispersal";
  k.eval = [sigma](double x, double y, std::span<double> out) {
    out[0] = std::exp(-std::fabs(x - y) / sigma) / (2.0 * sigma);
  };
  k.lipschitz_x = 1.0 / (2.0 * sigma * sigma);
  return k;
}

/// f(x,y,z) = x^px y^py sum_j c_j z^j  (px, py nonnegative integers).
inline UrysohnKernel separable_poly(int px, int py, std::vector<double> c) {
  if (px < 0 || py < 0) throw InputError("separable_poly: exponents must be nonnegative integers");
  if (c.empty()) throw InputError("separable_poly: need at least one coefficient");
  auto mono = [](double t, int k) {
    double s = 1.0;
    for (int i = 0; i < k; ++i) s *= t;
    return s;
  };
  auto poly = [c](double z, int deriv) {
    // deriv-th derivative of sum c_j z^j, Horner form
    double s = 0.0;
    for (std::size_t j = c.size(); j-- > static_cast<std::size_t>(deriv);) {
      double f = 1.0;
      for (int m = 0; m < deriv; ++m) f *= static_cast<double>(j - static_cast<std::size_t>(m));
      s = s * z + f * c[j];
    }
    return s;
  };
  auto abs_poly = [c](double r, int deriv) {
    double s = 0.0;
    for (std::size_t j = static_cast<std::size_t>(deriv); j < c.size(); ++j) {
      double f = 1.0;
      for (int m = 0; m < deriv; ++m) f *= static_cast<double>(j - static_cast<std::size_t>(m));
      s += f * std::fabs(c[j]) * std::pow(r, static_cast<double>(j) - deriv);
    }
    return s;
  };
  UrysohnKernel k;
  k.name = "separable_poly";
  k.eval = [=](double x, double y, std::span<const double> z, std::span<double> out) {
    out[0] = mono(x, px) * mono(y, py) * poly(z[0], 0);
  };
  k.d3 = [=](double x, double y, std::span<const double> z, std::span<double> out) {
    out[0] = mono(x, px) * mono(y, py) * poly(z[0], 1);
  };
  k.d33 = [=](double x, double y, std::span<const double> z, std::span<double> out) {
    out[0] = mono(x, px) * mono(y, py) * poly(z[0], 2);
  };
  k.bounds.b0 = [=](double r, double x, double y) {
    return std::fabs(mono(x, px) * mono(y, py)) * abs_poly(r, 0);
  };
  k.bounds.lipschitz = [=](double r, double x, double y) {
    return std::fabs(mono(x, px) * mono(y, py)) * abs_poly(r, 1);
  };
  k.bounds.hbar0 = [=](double r, double y, double xlo, double xhi) {
    const double lip_x =
        px == 0 ? 0.0 : px * mono(std::max(std::fabs(xlo), std::fabs(xhi)), px - 1);
    return lip_x * std::fabs(mono(y, py)) * abs_poly(r, 0);
  };
  return k;
}

/// g(z) = r z / (1 + z/K) on Z = [0, inf).
inline GrowthSpec beverton_holt(double r, double K) {
  detail::require_positive(r, "beverton_holt: r");
  detail::require_positive(K, "beverton_holt: K");
  GrowthSpec g;
  g.name = "beverton_holt";
  g.z_set = ZSet::interval(0.0, kInf);
  g.eval = [r, K](double, std::span<const double> z, std::span<double> out) {
    out[0] = r * z[0] / (1.0 + z[0] / K);
  };
  g.d2 = [r, K](double, std::span<const double> z, std::span<double> out) {
    const double q = 1.0 + z[0] / K;
    out[0] = r / (q * q);
  };
  g.d22 = [r, K](double, std::span<const double> z, std::span<double> out) {
    const double q = 1.0 + z[0] / K;
    out[0] = -2.0 * r / (K * q * q * q);
  };
  g.bounds.lipschitz = [r](double) { return r; };
  g.bounds.sup = [r, K](double rho) { return r * rho / (1.0 + rho / K); };
  return g;
}

/// g(z) = z exp(r (1 - z)) on Z = [0, inf).
inline GrowthSpec ricker(double r) {
  detail::require_positive(r, "ricker: r");
  GrowthSpec g;
  g.name = "ricker";
  g.z_set = ZSet::interval(0.0, kInf);
  g.eval = [r](double, std::span<const double> z, std::span<double> out) {
    out[0] = z[0] * std::exp(r * (1.0 - z[0]));
  };
  g.d2 = [r](double, std::span<const double> z, std::span<double> out) {
    out[0] = std::exp(r * (1.0 - z[0])) * (1.0 - r * z[0]);
  };
  g.d22 = [r](double, std::span<const double> z, std::span<double> out) {
    out[0] = -r * std::exp(r * (1.0 - z[0])) * (2.0 - r * z[0]);
  };
  g.bounds.lipschitz = [r](double) { return std::exp(r); };
  g.bounds.sup = [r](double rho) {
    return rho >= 1.0 / r ? std::exp(r - 1.0) / r : rho * std::exp(r * (1.0 - rho));
  };
  return g;
}

/// g(z) = r z (1 - z) on Z = [0, 1].
inline GrowthSpec logistic(double r) {
  detail::require_positive(r, "logistic: r");
  GrowthSpec g;
  g.name = "logistic";
  g.z_set = ZSet::interval(0.0, 1.0);
  g.eval = [r](double, std::span<const double> z, std::span<double> out) {
    out[0] = r * z[0] * (1.0 - z[0]);
  };
  g.d2 = [r](double, std::span<const double> z, std::span<double> out) {
    out[0] = r * (1.0 - 2.0 * z[0]);
  };
  g.d22 = [r](double, std::span<const double>, std::span<double> out) { out[0] = -2.0 * r; };
  g.bounds.lipschitz = [r](double) { return r; };
  g.bounds.sup = [r](double rho) {
    const double t = std::min(rho, 1.0);
    return t >= 0.5 ? 0.25 * r : r * t * (1.0 - t);
  };
  return g;
}

/// g(x,z) = A z + b with A in R^{p x n} (row-major).
inline GrowthSpec affine(std::size_t n, std::vector<double> A, std::vector<double> b) {
  if (n == 0 || A.size() % n != 0 || A.size() / n != b.size() || b.empty()) {
    throw InputError("affine: A must be p x n and b of length p");
  }
  const std::size_t p = b.size();
  GrowthSpec g;
  g.name = "affine";
  g.n = n;
  g.p = p;
  g.z_set = ZSet::all(n);
  g.eval = [n, p, A, b](double, std::span<const double> z, std::span<double> out) {
    for (std::size_t i = 0; i < p; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < n; ++j) s += A[i * n + j] * z[j];
      out[i] = s;
    }
  };
  g.d2 = [A](double, std::span<const double>, std::span<double> out) {
    std::copy(A.begin(), A.end(), out.begin());
  };
  g.d22 = [](double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  const double norm_a = detail::spectral_norm(A.data(), p, n);
  const double norm_b = detail::frobenius(b);
  g.bounds.lipschitz = [norm_a](double) { return norm_a; };
  g.bounds.sup = [norm_a, norm_b](double rho) { return norm_a * rho + norm_b; };
  return g;
}

/// g(x,z) = z.
inline GrowthSpec identity_growth(std::size_t n = 1) {
  std::vector<double> A(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) A[i * n + i] = 1.0;
  GrowthSpec g = affine(n, std::move(A), std::vector<double>(n, 0.0));
  g.name = "identity";
  g.bounds.sup = [](double rho) { return rho; };
  return g;
}

/// f~(w,z) = exp(-|w|/s)/(2s) * z.
inline ConvolutionKernel laplace_convolution(double sigma) {
  detail::require_positive(sigma, "conv_laplace: sigma");
  auto dens = [sigma](double w) { return std::exp(-std::fabs(w) / sigma) / (2.0 * sigma); };
  ConvolutionKernel k;
  k.name = "conv_laplace";
  k.eval = [dens](double w, std::span<const double> z, std::span<double> out) { out[0] = dens(w) * z[0]; };
  k.d1 = [dens, sigma](double w, std::span<const double> z, std::span<double> out) {
    const double s = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
    out[0] = -s / sigma * dens(w) * z[0];
  };
  k.d2 = [dens](double w, std::span<const double>, std::span<double> out) { out[0] = dens(w); };
  k.bounds.ltilde = [dens](double, double w) { return dens(w); };
  k.bounds.btilde0 = [dens](double r, double w) { return r * dens(w); };
  // int_x^x' r dens <= r/(2s) (x'-x) and x'-x <= 2(b-a)
  k.bounds.coass = [sigma](double r, double alpha, double a, double b) {
    return r / (2.0 * sigma) * std::pow(2.0 * (b - a), 1.0 - alpha);
  };
  return k;
}

/// f~(w,z) = z.
inline ConvolutionKernel identity_convolution() {
  ConvolutionKernel k;
  k.name = "conv_identity";
  k.eval = [](double, std::span<const double> z, std::span<double> out) { out[0] = z[0]; };
  k.d1 = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  k.d2 = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  k.bounds.ltilde = [](double, double) { return 1.0; };
  k.bounds.btilde0 = [](double r, double) { return r; };
  k.bounds.coass = [](double r, double alpha, double a, double b) {
    return r * std::pow(2.0 * (b - a), 1.0 - alpha);
  };
  return k;
}

/// f~(w,z) = w.
inline ConvolutionKernel shift_convolution() {
  ConvolutionKernel k;
  k.name = "conv_shift";
  k.eval = [](double w, std::span<const double>, std::span<double> out) { out[0] = w; };
  k.d1 = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  k.d2 = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  k.bounds.ltilde = [](double, double) { return 0.0; };
  k.bounds.btilde0 = [](double, double w) { return std::fabs(w); };
  k.bounds.coass = [](double, double alpha, double a, double b) {
    return (b - a) * std::pow(2.0 * (b - a), 1.0 - alpha);
  };
  return k;
}

/// Builtin kernel by name and parameter list.
inline AnyKernel builtin_kernel(const std::string& name, const std::vector<double>& p) {
  auto as_int = [&](double v, const char* what) {
    if (v != std::floor(v) || v < 0 || v > 64) {
      throw InputError(name + ": " + what + " must be a small nonnegative integer");
    }
    return static_cast<int>(v);
  };
  if (name == "gaussian_dispersal") {
    detail::require_params(p, 1, 1, name);
    return gaussian_dispersal(p[0]);
  }
  if (name == "laplace_dispersal") {
    detail::require_params(p, 1, 1, name);
    return laplace_dispersal(p[0]);
  }
  if (name == "separable_poly") {
    detail::require_params(p, 3, 64, name);
    return separable_poly(as_int(p[0], "px"), as_int(p[1], "py"),
                          std::vector<double>(p.begin() + 2, p.end()));
  }
  if (name == "beverton_holt") {
    detail::require_params(p, 2, 2, name);
    return beverton_holt(p[0], p[1]);
  }
  if (name == "ricker") {
    detail::require_params(p, 1, 1, name);
    return ricker(p[0]);
  }
  if (name == "logistic") {
    detail::require_params(p, 1, 1, name);
    return logistic(p[0]);
  }
  if (name == "identity") {
    detail::require_params(p, 0, 1, name);
    return identity_growth(p.empty() ? 1 : static_cast<std::size_t>(as_int(p[0], "n")));
  }
  if (name == "affine") {
    if (p.empty()) throw InputError("affine: expected n, A (p x n), b (p)");
    const int n = as_int(p[0], "n");
    if (n == 0 || (p.size() - 1) % static_cast<std::size_t>(n + 1) != 0 || p.size() == 1) {
      throw InputError("affine: parameter count must be 1 + p*n + p");
    }
    const std::size_t rows = (p.size() - 1) / static_cast<std::size_t>(n + 1);
    std::vector<double> A(p.begin() + 1, p.begin() + 1 + static_cast<std::ptrdiff_t>(rows * n));
    std::vector<double> b(p.begin() + 1 + static_cast<std::ptrdiff_t>(rows * n), p.end());
    return affine(static_cast<std::size_t>(n), std::move(A), std::move(b));
  }
  if (name == "conv_laplace") {
    detail::require_params(p, 1, 1, name);
    return laplace_convolution(p[0]);
  }
  if (name == "conv_identity") {
    detail::require_params(p, 0, 0, name);
    return identity_convolution();
  }
  if (name == "conv_shift") {
    detail::require_params(p, 0, 0, name);
    return shift_convolution();
  }
  throw InputError("unknown kernel '" + name + "'");
}

/// Urysohn form f(x,y,z) = k(x,y) g(y,z) of a Hammerstein pair, with bounds
/// assembled from the registered Fredholm and growth data.
inline UrysohnKernel hammerstein_kernel(const FredholmKernel& k, const GrowthSpec& g) {
  if (k.p != g.p) throw InputError("hammerstein_kernel: Fredholm input dim != growth output dim");
  const std::size_t d = k.d, p = k.p, n = g.n;
  UrysohnKernel f;
  f.name = k.name + "*" + g.name;
  f.n = n;
  f.d = d;
  f.z_set = g.z_set;
  // out = K (d x p) * G where G is p x m
  auto contract = [d, p](std::span<const double> K, std::span<const double> G, std::size_t m,
                         std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t q = 0; q < p; ++q) s += K[i * p + q] * G[q * m + c];
        out[i * m + c] = s;
      }
    }
  };
  auto make = [k, contract, d, p](GrowthFn gf, std::size_t m) -> UrysohnFn {
    if (!gf) return {};
    return [k, gf, contract, d, p, m](double x, double y, std::span<const double> z,
                                      std::span<double> out) {
      std::vector<double> K(d * p), G(p * m);
      k.eval(x, y, K);
      gf(y, z, G);
      contract(K, G, m, out);
    };
  };
  f.eval = make(g.eval, 1);
  f.d3 = make(g.d2, n);
  f.d33 = make(g.d22, n * n);

  auto knorm = [k, d, p](double x, double y) {
    std::vector<double> K(d * p);
    k.eval(x, y, K);
    return detail::spectral_norm(K.data(), d, p);
  };
  if (g.bounds.sup) {
    auto sup = g.bounds.sup;
    f.bounds.b0 = [knorm, sup](double r, double x, double y) { return knorm(x, y) * sup(r); };
    if (std::isfinite(k.lipschitz_x)) {
      const double lx = k.lipschitz_x;
      f.bounds.hbar0 = [lx, sup](double r, double, double, double) { return lx * sup(r); };
      f.bounds.beta = k.beta_x;
    }
  }
  if (g.bounds.lipschitz) {
    auto lip = g.bounds.lipschitz;
    f.bounds.lipschitz = [knorm, lip](double r, double x, double y) { return knorm(x, y) * lip(r); };
    f.bounds.theta = g.bounds.theta;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Finite-difference fallbacks

/// Relative step used by the finite-difference fallbacks.
inline double fd_step(double z) { return 1e-6 * (1.0 + std::fabs(z)); }

/// Central difference of a map z -> R^m along each coordinate; out is m x n.
template <class Fn>
void central_jacobian(Fn&& fn, std::span<const double> z, std::size_t m, std::span<double> out,
                      double step_scale = 1.0) {
  const std::size_t n = z.size();
  std::vector<double> zp(z.begin(), z.end()), fp(m), fm(m);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = step_scale * fd_step(z[j]);
    zp[j] = z[j] + h;
    fn(std::span<const double>(zp), std::span<double>(fp));
    zp[j] = z[j] - h;
    fn(std::span<const double>(zp), std::span<double>(fm));
    zp[j] = z[j];
    for (std::size_t i = 0; i < m; ++i) out[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
  }
}

/// D3 f or its fallback; sets *fallback when differences were used.
inline UrysohnFn urysohn_d3_or_fd(const UrysohnKernel& k, bool* fallback) {
  if (k.d3) return k.d3;
  if (fallback) *fallback = true;
  return [k](double x, double y, std::span<const double> z, std::span<double> out) {
    central_jacobian([&](std::span<const double> zz, std::span<double> o) { k.eval(x, y, zz, o); },
                     z, k.d, out);
  };
}

/// D3^2 f or its fallback (differences of D3, or second differences of f with a 100x step).
inline UrysohnFn urysohn_d33_or_fd(const UrysohnKernel& k, bool* fallback) {
  if (k.d33) return k.d33;
  if (fallback) *fallback = true;
  if (k.d3) {
    return [k](double x, double y, std::span<const double> z, std::span<double> out) {
      central_jacobian([&](std::span<const double> zz, std::span<double> o) { k.d3(x, y, zz, o); },
                       z, k.d * k.n, out);
    };
  }
  return [k](double x, double y, std::span<const double> z, std::span<double> out) {
    auto inner = [&](std::span<const double> zz, std::span<double> o) {
      central_jacobian([&](std::span<const double> z3, std::span<double> o3) { k.eval(x, y, z3, o3); },
                       zz, k.d, o, 100.0);
    };
    central_jacobian(inner, z, k.d * k.n, out, 100.0);
  };
}

inline GrowthFn growth_d2_or_fd(const GrowthSpec& g, bool* fallback) {
  if (g.d2) return g.d2;
  if (fallback) *fallback = true;
  return [g](double x, std::span<const double> z, std::span<double> out) {
    central_jacobian([&](std::span<const double> zz, std::span<double> o) { g.eval(x, zz, o); }, z,
                     g.p, out);
  };
}

inline GrowthFn growth_d22_or_fd(const GrowthSpec& g, bool* fallback) {
  if (g.d22) return g.d22;
  if (fallback) *fallback = true;
  if (g.d2) {
    return [g](double x, std::span<const double> z, std::span<double> out) {
      central_jacobian([&](std::span<const double> zz, std::span<double> o) { g.d2(x, zz, o); }, z,
                       g.p * g.n, out);
    };
  }
  return [g](double x, std::span<const double> z, std::span<double> out) {
    auto inner = [&](std::span<const double> zz, std::span<double> o) {
      central_jacobian([&](std::span<const double> z3, std::span<double> o3) { g.eval(x, z3, o3); },
                       zz, g.p, o, 100.0);
    };
    central_jacobian(inner, z, g.p * g.n, out, 100.0);
  };
}

// ---------------------------------------------------------------------------
// Derivative consistency

struct DerivativeConsistency {
  double max_rel_error_d1 = 0.0;    // analytic first derivative vs central difference, step h
  double max_rel_error_d1_half = 0.0;  // same at step h/2
  double max_rel_error_d2 = 0.0;    // analytic second derivative vs differences of the first
  bool has_d1 = false, has_d2 = false;
  /// err(h)/err(h/2); close to 4 when the error is truncation-dominated,
  /// empty when both errors sit at rounding level.
  std::optional<double> richardson_ratio;
};

namespace detail {

// probe(x,y,z) evaluators: f0 -> m0 values, f1 -> m0*n values, f2 -> m0*n*n values
template <class F0, class F1, class F2>
DerivativeConsistency check_consistency(std::size_t n, std::size_t m0, const ZSet& zs, F0&& f0,
                                        F1* f1, F2* f2, std::size_t probes, std::uint64_t seed,
                                        double xlo, double xhi, double zrad, double step) {
  DerivativeConsistency out;
  out.has_d1 = f1 != nullptr;
  out.has_d2 = f2 != nullptr;
  std::mt19937_64 gen(seed);
  auto u01 = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  std::vector<double> z(n), a1(m0 * n), fd(m0 * n), fdh(m0 * n), a2(m0 * n * n), fd2(m0 * n * n);
  double worst_abs_h = 0.0, worst_abs_h2 = 0.0;
  for (std::size_t t = 0; t < probes; ++t) {
    const double x = xlo + (xhi - xlo) * u01();
    const double y = xlo + (xhi - xlo) * u01();
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = std::max(zs.lo[j], -zrad), hi = std::min(zs.hi[j], zrad);
      z[j] = lo + (hi - lo) * u01();
    }
    auto e0 = [&](std::span<const double> zz, std::span<double> o) { f0(x, y, zz, o); };
    if (f1) {
      (*f1)(x, y, z, a1);
      double scale = 1.0;
      for (double v : a1) scale = std::max(scale, std::fabs(v));
      // fixed absolute steps (not the fallback's relative step)
      std::vector<double> zp(z);
      auto diff = [&](double h, std::vector<double>& res) {
        std::vector<double> fp(m0), fm(m0);
        for (std::size_t j = 0; j < n; ++j) {
          zp[j] = z[j] + h;
          e0(zp, fp);
          zp[j] = z[j] - h;
          e0(zp, fm);
          zp[j] = z[j];
          for (std::size_t i = 0; i < m0; ++i) res[i * n + j] = (fp[i] - fm[i]) / (2 * h);
        }
      };
      diff(step, fd);
      diff(step / 2, fdh);
      double eh = 0.0, eh2 = 0.0;
      for (std::size_t k = 0; k < a1.size(); ++k) {
        eh = std::max(eh, std::fabs(a1[k] - fd[k]));
        eh2 = std::max(eh2, std::fabs(a1[k] - fdh[k]));
      }
      out.max_rel_error_d1 = std::max(out.max_rel_error_d1, eh / scale);
      out.max_rel_error_d1_half = std::max(out.max_rel_error_d1_half, eh2 / scale);
      worst_abs_h = std::max(worst_abs_h, eh / scale);
      worst_abs_h2 = std::max(worst_abs_h2, eh2 / scale);
      if (f2) {
        (*f2)(x, y, z, a2);
        double s2 = 1.0;
        for (double v : a2) s2 = std::max(s2, std::fabs(v));
        std::vector<double> gp(m0 * n), gm(m0 * n);
        for (std::size_t l = 0; l < n; ++l) {
          zp[l] = z[l] + step;
          (*f1)(x, y, zp, gp);
          zp[l] = z[l] - step;
          (*f1)(x, y, zp, gm);
          zp[l] = z[l];
          for (std::size_t q = 0; q < m0 * n; ++q) fd2[q * n + l] = (gp[q] - gm[q]) / (2 * step);
        }
        double e2 = 0.0;
        for (std::size_t k = 0; k < a2.size(); ++k) e2 = std::max(e2, std::fabs(a2[k] - fd2[k]));
        out.max_rel_error_d2 = std::max(out.max_rel_error_d2, e2 / s2);
      }
    }
  }
  if (worst_abs_h > 1e-9 && worst_abs_h2 > 0.0) out.richardson_ratio = worst_abs_h / worst_abs_h2;
  return out;
}

}  // namespace detail

/// Compares analytic derivatives of an Urysohn kernel with central
/// differences at random admissible probes x,y in [xlo,xhi], |z_j| <= zrad.
inline DerivativeConsistency check_derivatives(const UrysohnKernel& k, std::size_t probes,
                                               std::uint64_t seed, double xlo, double xhi,
                                               double zrad, double step = 1e-5) {
  return detail::check_consistency(k.n, k.d, k.z_set, k.eval, k.d3 ? &k.d3 : nullptr,
                                   k.d33 ? &k.d33 : nullptr, probes, seed, xlo, xhi, zrad, step);
}

inline DerivativeConsistency check_derivatives(const GrowthSpec& g, std::size_t probes,
                                               std::uint64_t seed, double xlo, double xhi,
                                               double zrad, double step = 1e-5) {
  auto lift = [](const GrowthFn& fn) -> UrysohnFn {
    if (!fn) return {};
    return [fn](double x, double, std::span<const double> z, std::span<double> o) { fn(x, z, o); };
  };
  const UrysohnFn e = lift(g.eval), a = lift(g.d2), b = lift(g.d22);
  return detail::check_consistency(g.n, g.p, g.z_set, e, a ? &a : nullptr, b ? &b : nullptr,
                                   probes, seed, xlo, xhi, zrad, step);
}

inline DerivativeConsistency check_derivatives(const ConvolutionKernel& c, std::size_t probes,
                                               std::uint64_t seed, double wlo, double whi,
                                               double zrad, double step = 1e-5) {
  const UrysohnFn e = [c](double w, double, std::span<const double> z, std::span<double> o) {
    c.eval(w, z, o);
  };
  UrysohnFn a;
  if (c.d2) {
    a = [c](double w, double, std::span<const double> z, std::span<double> o) { c.d2(w, z, o); };
  }
  return detail::check_consistency(c.n, c.d, c.z_set, e, a ? &a : nullptr,
                                   static_cast<UrysohnFn*>(nullptr), probes, seed, wlo, whi, zrad,
                                   step);
}

// ---------------------------------------------------------------------------
// Carathéodory bound tables

/// Halton point (index >= 1) in [0,1)^dim using the first primes as bases.
inline std::vector<double> halton(std::uint64_t index, std::size_t dim) {
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (dim > std::size(primes)) throw InputError("halton: dimension too large");
  std::vector<double> p(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    double f = 1.0, r = 0.0;
    std::uint64_t i = index;
    while (i > 0) {
      f /= primes[k];
      r += f * static_cast<double>(i % primes[k]);
      i /= primes[k];
    }
    p[k] = r;
  }
  return p;
}

/// Deterministic probe set in Z_r = Z ∩ closed r-ball: the origin and the
/// clipped box corners when admissible, then Halton points.
inline std::vector<std::vector<double>> caratheodory_probes(const ZSet& zs, double r,
                                                            std::size_t z_samples) {
  const std::size_t n = zs.dim();
  std::vector<double> lo(n), hi(n);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = std::max(zs.lo[j], -r);
    hi[j] = std::min(zs.hi[j], r);
    if (lo[j] > hi[j]) throw InputError("caratheodory_probes: Z ∩ B_r is empty");
  }
  auto in_ball = [r](const std::vector<double>& z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s) <= r * (1 + 1e-15);
  };
  std::vector<std::vector<double>> probes;
  std::vector<double> zero(n, 0.0);
  if (zs.contains(zero)) probes.push_back(zero);
  if (n <= 10) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> c(n);
      for (std::size_t j = 0; j < n; ++j) c[j] = (mask >> j) & 1 ? hi[j] : lo[j];
      if (in_ball(c)) probes.push_back(std::move(c));
    }
  }
  std::uint64_t idx = 1;
  std::size_t taken = 0;
  while (taken < z_samples && idx < 64 * (z_samples + 1)) {
    auto h = halton(idx++, n);
    for (std::size_t j = 0; j < n; ++j) h[j] = lo[j] + (hi[j] - lo[j]) * h[j];
    if (!in_ball(h)) continue;
    probes.push_back(std::move(h));
    ++taken;
  }
  return probes;
}

/// Sampled suprema b_r^k(x,y) = max_z |D3^k f(x,y,z)| over the probe set.
/// Entries are lower estimates of the true suprema.
struct CaratheodoryTable {
  double r = 0.0;
  int order = 0;
  std::size_t z_samples = 0;
  std::size_t probe_count = 0;
  std::size_t rows = 0, cols = 0;  // target points x source points
  std::vector<double> b;           // row-major rows x cols
  std::string label = "sampled lower estimate of the sup";

  double operator()(std::size_t xi, std::size_t yi) const { return b[xi * cols + yi]; }

  /// h_r^0(x,x0,y) = max_z |f(x,y,z) - f(x0,y,z)| over the same probes.
  std::function<double(double x, double x0, double y)> h0;
};

inline CaratheodoryTable estimate_caratheodory_bounds(const UrysohnKernel& k,
                                                      const DiscreteDomain& target,
                                                      const DiscreteDomain& source, double r,
                                                      int order, std::size_t z_samples) {
  if (!(r > 0.0)) throw InputError("estimate_caratheodory_bounds: r must be positive");
  UrysohnFn fn;
  std::size_t m = k.d;
  if (order == 0) {
    fn = k.eval;
  } else if (order == 1) {
    fn = k.d3;
    m = k.d * k.n;
  } else if (order == 2) {
    fn = k.d33;
    m = k.d * k.n * k.n;
  } else {
    throw InputError("estimate_caratheodory_bounds: order must be 0, 1 or 2");
  }
  if (!fn) {
    throw InputError("estimate_caratheodory_bounds: derivative of order " + std::to_string(order) +
                     " not available");
  }
  auto probes = std::make_shared<const std::vector<std::vector<double>>>(
      caratheodory_probes(k.z_set, r, z_samples));
  CaratheodoryTable t;
  t.r = r;
  t.order = order;
  t.z_samples = z_samples;
  t.probe_count = probes->size();
  t.rows = target.size();
  t.cols = source.size();
  t.b.assign(t.rows * t.cols, 0.0);
  std::vector<double> val(m);
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t j = 0; j < t.cols; ++j) {
      double best = 0.0;
      for (const auto& z : *probes) {
        fn(target.coord(i), source.coord(j), z, val);
        const double nv = order == 1 ? detail::spectral_norm(val.data(), k.d, k.n)
                                     : detail::frobenius(val);
        best = std::max(best, nv);
      }
      t.b[i * t.cols + j] = best;
    }
  }
  t.h0 = [k, probes](double x, double x0, double y) {
    std::vector<double> a(k.d), c(k.d);
    double best = 0.0;
    for (const auto& z : *probes) {
      k.eval(x, y, z, a);
      k.eval(x0, y, z, c);
      double s = 0.0;
      for (std::size_t i = 0; i < k.d; ++i) s += (a[i] - c[i]) * (a[i] - c[i]);
      best = std::max(best, std::sqrt(s));
    }
    return best;
  };
  return t;
}

}  // namespace urysohn
