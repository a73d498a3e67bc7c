#pragma once

/**
 * @file operators.hpp
 * @brief Discretized Urysohn, Fredholm, Nemytskii, Hammerstein and
 * convolutive operators and their Fréchet derivatives.
 *
 * An Urysohn operator maps u on the source domain to
 *
 *     U(u)(x) = sum_y w_y f(x, y, u(y)),   x in target,
 *
 * with the weights of a QuadratureMeasure. First derivatives are assembled
 * densely (they feed Newton solves); second derivatives are matrix-free.
 *
 * State values outside the admissible set Z are projected onto Z before the
 * kernel is evaluated; the number of projections is reported through the
 * optional `clamps` counter.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "urysohn/detail/csv.hpp"
#include "urysohn/detail/errors.hpp"
#include "urysohn/detail/parallel.hpp"
#include "urysohn/detail/summation.hpp"
#include "urysohn/kernels.hpp"
#include "urysohn/metric_domain.hpp"
#include "urysohn/quadrature.hpp"

namespace urysohn {

namespace detail {

// Copies u's values and projects each point onto Z.
inline std::vector<double> clamped_values(const GridFunction& u, const ZSet& zs,
                                          std::size_t* clamps) {
  std::vector<double> z(u.values().begin(), u.values().end());
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (zs.clamp(std::span<double>(z.data() + i * u.dim(), u.dim()))) ++count;
  }
  if (clamps) *clamps += count;
  return z;
}

inline void check_finite(std::span<const double> v, double x, double y) {
  for (double e : v) {
    if (!std::isfinite(e)) {
      throw NumericalError("kernel returned a non-finite value at (x, y) = (" + format_double(x) +
                           ", " + format_double(y) + ")");
    }
  }
}

inline constexpr std::size_t kRowChunk = 8;

}  // namespace detail

/// Assembled k-linear map representing a Fréchet derivative on the grid.
///
/// Order 1: a (|target| d) x (|source| n) matrix, stored dense or as per-point
/// d x n blocks for pointwise (Nemytskii) operators. Order 2: applied
/// matrix-free through per-(x,y) blocks of shape d x n x n (weights included).
class DerivativeOperator {
 public:
  using Block2Fn = std::function<void(std::size_t xi, std::size_t yi, std::span<double> out)>;

  static DerivativeOperator dense(DomainPtr target, std::size_t d, DomainPtr source,
                                  std::size_t n, Eigen::MatrixXd m, bool fallback) {
    DerivativeOperator op(1, std::move(target), d, std::move(source), n, fallback);
    op.dense_ = std::move(m);
    return op;
  }

  static DerivativeOperator block_diagonal(DomainPtr dom, std::size_t d, std::size_t n,
                                           std::vector<double> blocks, bool fallback) {
    DerivativeOperator op(1, dom, d, dom, n, fallback);
    op.diagonal_ = true;
    op.blocks_ = std::move(blocks);
    return op;
  }

  static DerivativeOperator second_order(DomainPtr target, std::size_t d, DomainPtr source,
                                         std::size_t n, Block2Fn block, bool diagonal,
                                         bool fallback) {
    DerivativeOperator op(2, std::move(target), d, std::move(source), n, fallback);
    op.block2_ = std::move(block);
    op.diagonal_ = diagonal;
    return op;
  }

  int order() const noexcept { return order_; }
  bool is_block_diagonal() const noexcept { return diagonal_; }
  /// True when some kernel derivative came from finite differences.
  bool uses_fallback() const noexcept { return fallback_; }
  std::size_t rows() const noexcept { return target_->size() * d_; }
  std::size_t cols() const noexcept { return source_->size() * n_; }
  const DomainPtr& target() const noexcept { return target_; }
  const DomainPtr& source() const noexcept { return source_; }

  /// Order-1 action v -> U^1(u) v.
  GridFunction apply(const GridFunction& v) const {
    if (order_ != 1) throw InputError("DerivativeOperator: order-1 apply on order-2 operator");
    check_input(v);
    std::vector<double> out(rows(), 0.0);
    if (diagonal_) {
      for (std::size_t x = 0; x < target_->size(); ++x) {
        for (std::size_t i = 0; i < d_; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < n_; ++j) s += blocks_[(x * d_ + i) * n_ + j] * v.value(x, j);
          out[x * d_ + i] = s;
        }
      }
    } else {
      Eigen::Map<const Eigen::VectorXd> vv(v.values().data(), static_cast<Eigen::Index>(cols()));
      Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(rows())) = dense_ * vv;
    }
    return GridFunction(target_, d_, std::move(out));
  }

  /// Order-2 action (v1, v2) -> U^2(u)[v1, v2].
  GridFunction apply(const GridFunction& v1, const GridFunction& v2) const {
    if (order_ != 2) throw InputError("DerivativeOperator: bilinear apply on order-1 operator");
    check_input(v1);
    check_input(v2);
    const std::size_t nt = target_->size(), ns = source_->size();
    std::vector<double> out(rows(), 0.0);
    detail::parallel_chunks(nt, detail::kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      std::vector<double> blk(d_ * n_ * n_);
      std::vector<detail::CompensatedSum> acc(d_);
      for (std::size_t x = b; x < e; ++x) {
        std::fill(acc.begin(), acc.end(), detail::CompensatedSum{});
        const std::size_t y0 = diagonal_ ? x : 0, y1 = diagonal_ ? x + 1 : ns;
        for (std::size_t y = y0; y < y1; ++y) {
          block2_(x, y, blk);
          for (std::size_t i = 0; i < d_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) {
              for (std::size_t l = 0; l < n_; ++l) {
                s += blk[(i * n_ + j) * n_ + l] * v1.value(y, j) * v2.value(y, l);
              }
            }
            acc[i].add(s);
          }
        }
        for (std::size_t i = 0; i < d_; ++i) out[x * d_ + i] = acc[i].value();
      }
    });
    return GridFunction(target_, d_, std::move(out));
  }

  /// Dense order-1 matrix (block-diagonal storage is expanded).
  Eigen::MatrixXd matrix() const {
    if (order_ != 1) throw InputError("DerivativeOperator: matrix() needs order 1");
    if (!diagonal_) return dense_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()),
                                              static_cast<Eigen::Index>(cols()));
    for (std::size_t x = 0; x < target_->size(); ++x) {
      for (std::size_t i = 0; i < d_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          m(static_cast<Eigen::Index>(x * d_ + i), static_cast<Eigen::Index>(x * n_ + j)) =
              blocks_[(x * d_ + i) * n_ + j];
        }
      }
    }
    return m;
  }

  /// The (x,y) block: d x n for order 1, d x n x n for order 2.
  std::vector<double> block(std::size_t xi, std::size_t yi) const {
    if (order_ == 2) {
      std::vector<double> out(d_ * n_ * n_, 0.0);
      if (!diagonal_ || xi == yi) block2_(xi, yi, out);
      return out;
    }
    std::vector<double> out(d_ * n_, 0.0);
    for (std::size_t i = 0; i < d_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (diagonal_) {
          if (xi == yi) out[i * n_ + j] = blocks_[(xi * d_ + i) * n_ + j];
        } else {
          out[i * n_ + j] = dense_(static_cast<Eigen::Index>(xi * d_ + i),
                                   static_cast<Eigen::Index>(yi * n_ + j));
        }
      }
    }
    return out;
  }

  /// Dense CSV: first line "rows=R,cols=C", then R rows of C values.
  void write_csv(std::ostream& out) const {
    const Eigen::MatrixXd m = matrix();
    out << "rows=" << m.rows() << ",cols=" << m.cols() << '\n';
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
      detail::write_row(out, row);
    }
  }

 private:
  DerivativeOperator(int order, DomainPtr target, std::size_t d, DomainPtr source, std::size_t n,
                     bool fallback)
      : order_(order), target_(std::move(target)), source_(std::move(source)), d_(d), n_(n),
        fallback_(fallback) {}

  void check_input(const GridFunction& v) const {
    if (!v.domain().same_as(*source_)) throw InputError("DerivativeOperator: domain mismatch");
    if (v.dim() != n_) throw InputError("DerivativeOperator: direction dimension mismatch");
  }

  int order_;
  DomainPtr target_, source_;
  std::size_t d_, n_;
  bool fallback_ = false;
  bool diagonal_ = false;
  Eigen::MatrixXd dense_;
  std::vector<double> blocks_;
  Block2Fn block2_;
};

// ---------------------------------------------------------------------------

class UrysohnOperator {
 public:
  UrysohnOperator(UrysohnKernel f, QuadratureMeasure mu, DomainPtr target)
      : f_(std::move(f)), mu_(std::move(mu)), target_(std::move(target)) {
    if (!f_.eval) throw InputError("UrysohnOperator: kernel has no evaluation callback");
    if (!target_) throw InputError("UrysohnOperator: null target domain");
    if (f_.z_set.dim() != f_.n) throw InputError("UrysohnOperator: Z dimension != kernel n");
  }

  const UrysohnKernel& kernel() const noexcept { return f_; }
  const QuadratureMeasure& measure() const noexcept { return mu_; }
  const DomainPtr& target() const noexcept { return target_; }
  const DomainPtr& source() const noexcept { return mu_.domain_ptr(); }
  std::size_t input_dim() const noexcept { return f_.n; }
  std::size_t output_dim() const noexcept { return f_.d; }

  /// When false, derivative() refuses to fall back to finite differences.
  bool allow_fallback = true;

  bool admissible(const GridFunction& u) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!f_.z_set.contains(u[i])) return false;
    }
    return true;
  }

  GridFunction apply(const GridFunction& u, std::size_t* clamps = nullptr) const {
    check(u);
    const auto z = detail::clamped_values(u, f_.z_set, clamps);
    const std::size_t nt = target_->size(), ns = mu_.size(), n = f_.n, d = f_.d;
    std::vector<double> out(nt * d);
    detail::parallel_chunks(nt, detail::kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      std::vector<double> val(d);
      std::vector<detail::CompensatedSum> acc(d);
      for (std::size_t xi = b; xi < e; ++xi) {
        std::fill(acc.begin(), acc.end(), detail::CompensatedSum{});
        const double x = target_->coord(xi);
        for (std::size_t yi = 0; yi < ns; ++yi) {
          const double y = mu_.domain().coord(yi);
          f_.eval(x, y, std::span<const double>(z.data() + yi * n, n), val);
          detail::check_finite(val, x, y);
          for (std::size_t i = 0; i < d; ++i) acc[i].add(mu_.weight(yi) * val[i]);
        }
        for (std::size_t i = 0; i < d; ++i) out[xi * d + i] = acc[i].value();
      }
    });
    return GridFunction(target_, d, std::move(out));
  }

  /// U^k(u) for k in {1, 2}.
  DerivativeOperator derivative(const GridFunction& u, int k) const {
    check(u);
    if (k != 1 && k != 2) throw InputError("derivative order must be 1 or 2");
    if ((k == 1 && !f_.d3 && !allow_fallback) || (k == 2 && !f_.d33 && !allow_fallback)) {
      throw InputError("kernel derivative of order " + std::to_string(k) +
                       " unavailable and finite-difference fallback disabled");
    }
    bool fallback = false;
    auto z = std::make_shared<const std::vector<double>>(detail::clamped_values(u, f_.z_set, nullptr));
    const std::size_t nt = target_->size(), ns = mu_.size(), n = f_.n, d = f_.d;
    if (k == 1) {
      const UrysohnFn d3 = urysohn_d3_or_fd(f_, &fallback);
      Eigen::MatrixXd m(static_cast<Eigen::Index>(nt * d), static_cast<Eigen::Index>(ns * n));
      detail::parallel_chunks(nt, detail::kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> blk(d * n);
        for (std::size_t xi = b; xi < e; ++xi) {
          const double x = target_->coord(xi);
          for (std::size_t yi = 0; yi < ns; ++yi) {
            const double y = mu_.domain().coord(yi);
            d3(x, y, std::span<const double>(z->data() + yi * n, n), blk);
            detail::check_finite(blk, x, y);
            for (std::size_t i = 0; i < d; ++i) {
              for (std::size_t j = 0; j < n; ++j) {
                m(static_cast<Eigen::Index>(xi * d + i), static_cast<Eigen::Index>(yi * n + j)) =
                    mu_.weight(yi) * blk[i * n + j];
              }
            }
          }
        }
      });
      return DerivativeOperator::dense(target_, d, source(), n, std::move(m), fallback);
    }
    const UrysohnFn d33 = urysohn_d33_or_fd(f_, &fallback);
    auto tgt = target_;
    auto src = source();
    std::vector<double> w = mu_.weights();
    auto block = [d33, z, tgt, src, w, n](std::size_t xi, std::size_t yi, std::span<double> out) {
      d33(tgt->coord(xi), src->coord(yi), std::span<const double>(z->data() + yi * n, n), out);
      for (double& v : out) v *= w[yi];
    };
    return DerivativeOperator::second_order(target_, d, source(), n, block, false, fallback);
  }

 private:
  void check(const GridFunction& u) const {
    if (!u.domain().same_as(mu_.domain())) {
      throw InputError("UrysohnOperator: input is not defined on the measure's domain");
    }
    if (u.dim() != f_.n) {
      throw InputError("UrysohnOperator: input dimension " + std::to_string(u.dim()) +
                       " != kernel state dimension " + std::to_string(f_.n));
    }
  }

  UrysohnKernel f_;
  QuadratureMeasure mu_;
  DomainPtr target_;
};

// ---------------------------------------------------------------------------

class FredholmOperator {
 public:
  FredholmOperator(FredholmKernel k, QuadratureMeasure mu, DomainPtr target)
      : k_(std::move(k)), mu_(std::move(mu)), target_(std::move(target)) {
    if (!k_.eval) throw InputError("FredholmOperator: kernel has no evaluation callback");
    if (!target_) throw InputError("FredholmOperator: null target domain");
    const std::size_t nt = target_->size(), ns = mu_.size(), d = k_.d, p = k_.p;
    raw_.resize(nt * ns * d * p);
    detail::parallel_chunks(nt, detail::kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t xi = b; xi < e; ++xi) {
        const double x = target_->coord(xi);
        for (std::size_t yi = 0; yi < ns; ++yi) {
          const double y = mu_.domain().coord(yi);
          std::span<double> blk(raw_.data() + (xi * ns + yi) * d * p, d * p);
          k_.eval(x, y, blk);
          detail::check_finite(blk, x, y);
        }
      }
    });
    matrix_.resize(static_cast<Eigen::Index>(nt * d), static_cast<Eigen::Index>(ns * p));
    for (std::size_t xi = 0; xi < nt; ++xi) {
      for (std::size_t yi = 0; yi < ns; ++yi) {
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t q = 0; q < p; ++q) {
            matrix_(static_cast<Eigen::Index>(xi * d + i), static_cast<Eigen::Index>(yi * p + q)) =
                mu_.weight(yi) * raw_[((xi * ns + yi) * d + i) * p + q];
          }
        }
      }
    }
  }

  const FredholmKernel& kernel() const noexcept { return k_; }
  const QuadratureMeasure& measure() const noexcept { return mu_; }
  const DomainPtr& target() const noexcept { return target_; }
  const DomainPtr& source() const noexcept { return mu_.domain_ptr(); }
  std::size_t input_dim() const noexcept { return k_.p; }
  std::size_t output_dim() const noexcept { return k_.d; }
  /// Weighted matrix with entries w_y k(x,y)_{iq}.
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

  bool admissible(const GridFunction&) const { return true; }

  GridFunction apply(const GridFunction& u, std::size_t* = nullptr) const {
    check(u);
    const std::size_t nt = target_->size(), ns = mu_.size(), d = k_.d, p = k_.p;
    std::vector<double> out(nt * d);
    detail::parallel_chunks(nt, detail::kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t xi = b; xi < e; ++xi) {
        for (std::size_t i = 0; i < d; ++i) {
          detail::CompensatedSum acc;
          for (std::size_t yi = 0; yi < ns; ++yi) {
            double s = 0.0;
            for (std::size_t q = 0; q < p; ++q) {
              s += raw_[((xi * ns + yi) * d + i) * p + q] * u.value(yi, q);
            }
            acc.add(mu_.weight(yi) * s);
          }
          out[xi * d + i] = acc.value();
        }
      }
    });
    return GridFunction(target_, d, std::move(out));
  }

  /// The operator is linear: its first derivative is itself, the second is zero.
  DerivativeOperator derivative(const GridFunction& u, int k) const {
    check(u);
    if (k == 1) return DerivativeOperator::dense(target_, k_.d, source(), k_.p, matrix_, false);
    if (k == 2) {
      return DerivativeOperator::second_order(
          target_, k_.d, source(), k_.p,
          [](std::size_t, std::size_t, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
          true, false);
    }
    throw InputError("derivative order must be 1 or 2");
  }

  /// max{1, diam^alpha} * max_x sum_y w_y |k(x,y)|  (spectral norm of the blocks).
  double norm_bound(double alpha) const {
    return std::max(1.0, std::pow(mu_.domain().diameter(), alpha)) * row_integral_max();
  }

  /// max_x sum_y w_y |k(x,y)|.
  double row_integral_max() const {
    const std::size_t nt = target_->size(), ns = mu_.size(), d = k_.d, p = k_.p;
    double best = 0.0;
    for (std::size_t xi = 0; xi < nt; ++xi) {
      detail::CompensatedSum acc;
      for (std::size_t yi = 0; yi < ns; ++yi) {
        acc.add(mu_.weight(yi) * detail::spectral_norm(raw_.data() + (xi * ns + yi) * d * p, d, p));
      }
      best = std::max(best, acc.value());
    }
    return best;
  }

  /// With a registered x-Lipschitz constant L: [K u]_beta <= L mu(Omega) ||u||_0.
  std::optional<double> seminorm_bound_factor() const {
    if (!std::isfinite(k_.lipschitz_x)) return std::nullopt;
    return k_.lipschitz_x * mu_.total_mass();
  }

  /// Raw kernel block k(x_i, y_j), d x p.
  std::span<const double> kernel_block(std::size_t xi, std::size_t yi) const {
    return {raw_.data() + (xi * mu_.size() + yi) * k_.d * k_.p, k_.d * k_.p};
  }

 private:
  void check(const GridFunction& u) const {
    if (!u.domain().same_as(mu_.domain())) {
      throw InputError("FredholmOperator: input is not defined on the measure's domain");
    }
    if (u.dim() != k_.p) throw InputError("FredholmOperator: input dimension mismatch");
  }

  FredholmKernel k_;
  QuadratureMeasure mu_;
  DomainPtr target_;
  std::vector<double> raw_;
  Eigen::MatrixXd matrix_;
};

// ---------------------------------------------------------------------------

class NemytskiiOperator {
 public:
  NemytskiiOperator(GrowthSpec g, DomainPtr domain) : g_(std::move(g)), domain_(std::move(domain)) {
    if (!g_.eval) throw InputError("NemytskiiOperator: growth map has no evaluation callback");
    if (!domain_) throw InputError("NemytskiiOperator: null domain");
    if (g_.z_set.dim() != g_.n) throw InputError("NemytskiiOperator: Z dimension != n");
  }

  const GrowthSpec& growth() const noexcept { return g_; }
  const DomainPtr& target() const noexcept { return domain_; }
  const DomainPtr& source() const noexcept { return domain_; }
  std::size_t input_dim() const noexcept { return g_.n; }
  std::size_t output_dim() const noexcept { return g_.p; }
  bool allow_fallback = true;

  bool admissible(const GridFunction& u) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!g_.z_set.contains(u[i])) return false;
    }
    return true;
  }

  GridFunction apply(const GridFunction& u, std::size_t* clamps = nullptr) const {
    check(u);
    const auto z = detail::clamped_values(u, g_.z_set, clamps);
    const std::size_t n = g_.n, p = g_.p;
    std::vector<double> out(u.size() * p);
    for (std::size_t xi = 0; xi < u.size(); ++xi) {
      const double x = domain_->coord(xi);
      std::span<double> o(out.data() + xi * p, p);
      g_.eval(x, std::span<const double>(z.data() + xi * n, n), o);
      detail::check_finite(o, x, x);
    }
    return GridFunction(domain_, p, std::move(out));
  }

  /// Block-diagonal G^k(u): per-point D2^k g(x, u(x)).
  DerivativeOperator derivative(const GridFunction& u, int k) const {
    check(u);
    if (k != 1 && k != 2) throw InputError("derivative order must be 1 or 2");
    if (((k == 1 && !g_.d2) || (k == 2 && !g_.d22)) && !allow_fallback) {
      throw InputError("growth derivative unavailable and finite-difference fallback disabled");
    }
    bool fallback = false;
    auto z = std::make_shared<const std::vector<double>>(detail::clamped_values(u, g_.z_set, nullptr));
    const std::size_t n = g_.n, p = g_.p;
    if (k == 1) {
      const GrowthFn d2 = growth_d2_or_fd(g_, &fallback);
      std::vector<double> blocks(u.size() * p * n);
      for (std::size_t xi = 0; xi < u.size(); ++xi) {
        std::span<double> o(blocks.data() + xi * p * n, p * n);
        d2(domain_->coord(xi), std::span<const double>(z->data() + xi * n, n), o);
        detail::check_finite(o, domain_->coord(xi), domain_->coord(xi));
      }
      return DerivativeOperator::block_diagonal(domain_, p, n, std::move(blocks), fallback);
    }
    const GrowthFn d22 = growth_d22_or_fd(g_, &fallback);
    auto dom = domain_;
    auto block = [d22, z, dom, n](std::size_t xi, std::size_t, std::span<double> out) {
      d22(dom->coord(xi), std::span<const double>(z->data() + xi * n, n), out);
    };
    return DerivativeOperator::second_order(domain_, p, domain_, n, block, true, fallback);
  }

 private:
  void check(const GridFunction& u) const {
    if (!u.domain().same_as(*domain_)) throw InputError("NemytskiiOperator: domain mismatch");
    if (u.dim() != g_.n) throw InputError("NemytskiiOperator: input dimension mismatch");
  }

  GrowthSpec g_;
  DomainPtr domain_;
};

// ---------------------------------------------------------------------------

/// H = K o G.
class HammersteinOperator {
 public:
  HammersteinOperator(FredholmOperator k, NemytskiiOperator g) : k_(std::move(k)), g_(std::move(g)) {
    if (!k_.source()->same_as(*g_.source())) {
      throw InputError("HammersteinOperator: Fredholm and Nemytskii domains differ");
    }
    if (k_.input_dim() != g_.output_dim()) {
      throw InputError("HammersteinOperator: Fredholm input dim " + std::to_string(k_.input_dim()) +
                       " != growth output dim " + std::to_string(g_.output_dim()));
    }
  }

  /// Convenience: kernel k and growth g over the measure mu, target = mu's domain.
  HammersteinOperator(const FredholmKernel& k, const GrowthSpec& g, const QuadratureMeasure& mu)
      : HammersteinOperator(FredholmOperator(k, mu, mu.domain_ptr()),
                            NemytskiiOperator(g, mu.domain_ptr())) {}

  const FredholmOperator& fredholm() const noexcept { return k_; }
  const NemytskiiOperator& nemytskii() const noexcept { return g_; }
  const DomainPtr& target() const noexcept { return k_.target(); }
  const DomainPtr& source() const noexcept { return g_.source(); }
  std::size_t input_dim() const noexcept { return g_.input_dim(); }
  std::size_t output_dim() const noexcept { return k_.output_dim(); }

  bool admissible(const GridFunction& u) const { return g_.admissible(u); }

  GridFunction apply(const GridFunction& u, std::size_t* clamps = nullptr) const {
    return k_.apply(g_.apply(u, clamps));
  }

  /// H^k(u) = K G^k(u).
  DerivativeOperator derivative(const GridFunction& u, int k) const {
    const DerivativeOperator gk = g_.derivative(u, k);
    const std::size_t nt = target()->size(), ns = source()->size();
    const std::size_t d = output_dim(), p = k_.input_dim(), n = input_dim();
    if (k == 1) {
      const Eigen::MatrixXd& km = k_.matrix();
      Eigen::MatrixXd m(static_cast<Eigen::Index>(nt * d), static_cast<Eigen::Index>(ns * n));
      for (std::size_t yi = 0; yi < ns; ++yi) {
        const auto b = gk.block(yi, yi);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> bm(
            b.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
        m.middleCols(static_cast<Eigen::Index>(yi * n), static_cast<Eigen::Index>(n)) =
            km.middleCols(static_cast<Eigen::Index>(yi * p), static_cast<Eigen::Index>(p)) * bm;
      }
      return DerivativeOperator::dense(target(), d, source(), n, std::move(m), gk.uses_fallback());
    }
    // order 2: block(x,y) = w_y k(x,y) D2^2 g(y,u(y)), contracted over the p axis
    auto gblocks = std::make_shared<std::vector<std::vector<double>>>(ns);
    for (std::size_t yi = 0; yi < ns; ++yi) (*gblocks)[yi] = gk.block(yi, yi);
    auto km = std::make_shared<const Eigen::MatrixXd>(k_.matrix());
    auto block = [gblocks, km, d, p, n](std::size_t xi, std::size_t yi, std::span<double> out) {
      const auto& gb = (*gblocks)[yi];
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t jl = 0; jl < n * n; ++jl) {
          double s = 0.0;
          for (std::size_t q = 0; q < p; ++q) {
            s += (*km)(static_cast<Eigen::Index>(xi * d + i), static_cast<Eigen::Index>(yi * p + q)) *
                 gb[q * n * n + jl];
          }
          out[i * n * n + jl] = s;
        }
      }
    };
    return DerivativeOperator::second_order(target(), d, source(), n, block, false,
                                            gk.uses_fallback());
  }

  /// The same operator written as an Urysohn operator with f = k(x,y) g(y,z).
  UrysohnOperator urysohn_form() const {
    return UrysohnOperator(hammerstein_kernel(k_.kernel(), g_.growth()), k_.measure(), target());
  }

 private:
  FredholmOperator k_;
  NemytskiiOperator g_;
};

// ---------------------------------------------------------------------------

/// U~(u)(x) = int_a^b f~(x - y, u(y)) dy on [a,b] with a composite Lebesgue rule.
class ConvolutiveOperator {
 public:
  ConvolutiveOperator(ConvolutionKernel f, double a, double b, std::size_t nodes, Scheme scheme)
      : f_(std::move(f)), a_(a), b_(b), mu_(lebesgue_rule(a, b, nodes, scheme)) {
    if (!f_.eval) throw InputError("ConvolutiveOperator: kernel has no evaluation callback");
  }

  const ConvolutionKernel& kernel() const noexcept { return f_; }
  const QuadratureMeasure& measure() const noexcept { return mu_; }
  const DomainPtr& target() const noexcept { return mu_.domain_ptr(); }
  const DomainPtr& source() const noexcept { return mu_.domain_ptr(); }
  std::pair<double, double> interval() const noexcept { return {a_, b_}; }
  std::size_t input_dim() const noexcept { return f_.n; }
  std::size_t output_dim() const noexcept { return f_.d; }

  bool admissible(const GridFunction& u) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!f_.z_set.contains(u[i])) return false;
    }
    return true;
  }

  GridFunction apply(const GridFunction& u, std::size_t* clamps = nullptr) const {
    return urysohn_operator().apply(u, clamps);
  }

  DerivativeOperator derivative(const GridFunction& u, int k) const {
    return urysohn_operator().derivative(u, k);
  }

  /// U~(u)(x) at an arbitrary x in [a,b] (same rule and samples).
  std::vector<double> apply_at(const GridFunction& u, double x) const {
    check(u);
    std::vector<double> val(f_.d);
    std::vector<detail::CompensatedSum> acc(f_.d);
    for (std::size_t yi = 0; yi < mu_.size(); ++yi) {
      const double y = mu_.domain().coord(yi);
      f_.eval(x - y, u[yi], val);
      detail::check_finite(val, x, y);
      for (std::size_t i = 0; i < f_.d; ++i) acc[i].add(mu_.weight(yi) * val[i]);
    }
    std::vector<double> out(f_.d);
    for (std::size_t i = 0; i < f_.d; ++i) out[i] = acc[i].value();
    return out;
  }

  /// Derivative in x of U~(u):
  ///   f~(x-a, u(a)) - f~(x-b, u(b)) + sign * int_a^b D2 f~(x-y, u(y)) u'(y) dy.
  /// The correct sign is +1; sign = -1 evaluates the variant with the integral
  /// term subtracted, kept for comparison.
  GridFunction derivative_formula(const GridFunction& u, const GridFunction& du,
                                  std::span<const double> u_a, std::span<const double> u_b,
                                  double sign = 1.0) const {
    check(u);
    if (!du.domain().same_as(mu_.domain()) || du.dim() != f_.n) {
      throw InputError("derivative_formula: u' must live on the rule's grid");
    }
    if (!f_.d2) throw InputError("derivative_formula: kernel has no D2 f~");
    if (u_a.size() != f_.n || u_b.size() != f_.n) {
      throw InputError("derivative_formula: endpoint values have the wrong dimension");
    }
    const std::size_t nt = mu_.size(), n = f_.n, d = f_.d;
    std::vector<double> out(nt * d);
    std::vector<double> ea(d), eb(d), j(d * n);
    std::vector<detail::CompensatedSum> acc(d);
    for (std::size_t xi = 0; xi < nt; ++xi) {
      const double x = mu_.domain().coord(xi);
      f_.eval(x - a_, u_a, ea);
      f_.eval(x - b_, u_b, eb);
      std::fill(acc.begin(), acc.end(), detail::CompensatedSum{});
      for (std::size_t yi = 0; yi < nt; ++yi) {
        const double y = mu_.domain().coord(yi);
        f_.d2(x - y, u[yi], j);
        for (std::size_t i = 0; i < d; ++i) {
          double s = 0.0;
          for (std::size_t c = 0; c < n; ++c) s += j[i * n + c] * du.value(yi, c);
          acc[i].add(mu_.weight(yi) * s);
        }
      }
      for (std::size_t i = 0; i < d; ++i) out[xi * d + i] = ea[i] - eb[i] + sign * acc[i].value();
    }
    return GridFunction(mu_.domain_ptr(), d, std::move(out));
  }

  /// Endpoint values read from the grid (rules whose nodes include a and b).
  GridFunction derivative_formula(const GridFunction& u, const GridFunction& du,
                                  double sign = 1.0) const {
    const auto ia = mu_.domain().find(a_), ib = mu_.domain().find(b_);
    if (!ia || !ib) {
      throw InputError("derivative_formula: rule nodes exclude the endpoints; pass u(a), u(b)");
    }
    return derivative_formula(u, du, u[*ia], u[*ib], sign);
  }

  /// The Urysohn kernel f(x,y,z) = f~(x-y,z).
  UrysohnKernel as_urysohn() const {
    UrysohnKernel k;
    k.name = f_.name;
    k.n = f_.n;
    k.d = f_.d;
    k.z_set = f_.z_set;
    const ConvFn e = f_.eval, d2 = f_.d2;
    k.eval = [e](double x, double y, std::span<const double> z, std::span<double> o) { e(x - y, z, o); };
    if (d2) {
      k.d3 = [d2](double x, double y, std::span<const double> z, std::span<double> o) { d2(x - y, z, o); };
    }
    if (f_.bounds.btilde0) {
      auto bt = f_.bounds.btilde0;
      k.bounds.b0 = [bt](double r, double x, double y) { return bt(r, x - y); };
    }
    if (f_.bounds.ltilde) {
      auto lt = f_.bounds.ltilde;
      k.bounds.lipschitz = [lt](double r, double x, double y) { return lt(r, x - y); };
    }
    return k;
  }

  UrysohnOperator urysohn_operator() const {
    return UrysohnOperator(as_urysohn(), mu_, mu_.domain_ptr());
  }

 private:
  void check(const GridFunction& u) const {
    if (!u.domain().same_as(mu_.domain())) throw InputError("ConvolutiveOperator: domain mismatch");
    if (u.dim() != f_.n) throw InputError("ConvolutiveOperator: input dimension mismatch");
  }

  ConvolutionKernel f_;
  double a_, b_;
  QuadratureMeasure mu_;
};

}  // namespace urysohn
