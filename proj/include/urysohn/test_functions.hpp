#pragma once

// Sample functions for Hölder studies and seeded random generators.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "urysohn/detail/errors.hpp"
#include "urysohn/metric_domain.hpp"

namespace urysohn {

using ScalarFn = std::function<double(double)>;

/// Uniform double in [0,1) from a 64-bit engine; identical on every platform.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// x -> |x|^alpha.
inline ScalarFn abs_pow(double alpha) {
  return [alpha](double x) { return std::pow(std::fabs(x), alpha); };
}

/// x -> -1/ln|x| with value 0 at x = 0. Continuous on [-1/2,1/2], not Hölder at 0.
inline ScalarFn log_pathology() {
  return [](double x) {
    if (x == 0.0) return 0.0;
    return -1.0 / std::log(std::fabs(x));
  };
}

/// Truncated Weierstrass sum  sum_{k<terms} a^k cos(b^k pi x)  for integer b.
///
/// The phase b^k x is reduced mod 2 step by step, which is exact for dyadic x
/// with few mantissa bits (all uniform dyadic grids used by the suites).
inline ScalarFn weierstrass(double a = 0.5, int b = 13, int terms = 60) {
  if (b < 2) throw InputError("weierstrass: b must be an integer >= 2");
  if (!(a > 0.0 && a < 1.0)) throw InputError("weierstrass: need 0 < a < 1");
  return [a, b, terms](double x) {
    double t = std::fmod(std::fabs(x), 2.0);
    double ak = 1.0;
    double s = 0.0;
    for (int k = 0; k < terms; ++k) {
      s += ak * std::cos(std::numbers::pi * t);
      ak *= a;
      t = std::fmod(static_cast<double>(b) * t, 2.0);
    }
    return s;
  };
}

/// Hölder exponent -log(a)/log(b) of the Weierstrass sum.
inline double weierstrass_exponent(double a, int b) {
  return -std::log(a) / std::log(static_cast<double>(b));
}

/// Continuous piecewise-linear function through `knots` equispaced knots on
/// [lo, hi] with values uniform in [-amplitude, amplitude].
inline ScalarFn random_piecewise_linear(std::uint64_t seed, double lo, double hi,
                                        int knots = 9, double amplitude = 1.0) {
  if (knots < 2) throw InputError("random_piecewise_linear: need at least 2 knots");
  std::mt19937_64 gen(seed);
  std::vector<double> v(static_cast<std::size_t>(knots));
  for (double& y : v) y = uniform(gen, -amplitude, amplitude);
  return [v, lo, hi](double x) {
    const double s = (x - lo) / (hi - lo) * static_cast<double>(v.size() - 1);
    if (s <= 0.0) return v.front();
    if (s >= static_cast<double>(v.size() - 1)) return v.back();
    const auto k = static_cast<std::size_t>(s);
    const double t = s - static_cast<double>(k);
    return (1.0 - t) * v[k] + t * v[k + 1];
  };
}

/// Random short Weierstrass-type sum: a in [0.3,0.7], b in {2..6}, 12 terms,
/// random phase and amplitude.
inline ScalarFn random_weierstrass(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const double a = uniform(gen, 0.3, 0.7);
  const double b = static_cast<double>(2 + gen() % 5);
  const double phase = uniform(gen, 0.0, 2.0);
  const double amp = uniform(gen, 0.2, 1.0);
  return [a, b, phase, amp](double x) {
    double s = 0.0, ak = 1.0, bk = 1.0;
    for (int k = 0; k < 12; ++k) {
      s += ak * std::cos(std::numbers::pi * (bk * x + phase));
      ak *= a;
      bk *= b;
    }
    return amp * s;
  };
}

/// Builtin scalar generator by name: "abs_pow", "log_pathology", "weierstrass",
/// "random_pl", "random_weierstrass", "sin", "zero".
inline ScalarFn builtin_function(const std::string& name, double param, std::uint64_t seed,
                                 double lo, double hi) {
  if (name == "abs_pow") return abs_pow(param);
  if (name == "log_pathology") return log_pathology();
  if (name == "weierstrass") return weierstrass();
  if (name == "random_pl") return random_piecewise_linear(seed, lo, hi);
  if (name == "random_weierstrass") return random_weierstrass(seed);
  if (name == "sin") return [](double x) { return std::sin(x); };
  if (name == "zero") return [](double) { return 0.0; };
  throw InputError("unknown function generator '" + name + "'");
}

}  // namespace urysohn
