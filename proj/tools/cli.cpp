#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "urysohn/urysohn.hpp"

namespace urysohn::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Strict config access

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw InputError("unknown key '" + k + "' in " + where);
    }
  }
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing required key '" + key + "'");
  return j.at(key);
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InputError(what + ": must be finite");
  return d;
}

std::size_t as_size(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InputError(what + ": expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::uint64_t as_seed(const json& v, const std::string& what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw InputError(what + ": expected an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw InputError(what + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& what) {
  if (!v.is_boolean()) throw InputError(what + ": expected true or false");
  return v.get<bool>();
}

std::vector<double> as_numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw InputError(what + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> as_sizes(const json& v, const std::string& what) {
  if (!v.is_array()) throw InputError(what + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_size(v[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

double opt_number(const json& j, const char* key, double def, const std::string& where) {
  return j.contains(key) ? as_number(j.at(key), where + "." + key) : def;
}

std::size_t opt_size(const json& j, const char* key, std::size_t def, const std::string& where) {
  return j.contains(key) ? as_size(j.at(key), where + "." + key) : def;
}

// ---------------------------------------------------------------------------
// Experiment context

struct Context {
  json cfg;
  fs::path base_dir;  // relative CSV paths resolve against the config's directory
  fs::path out_dir;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::ostream* out = nullptr;

  std::uint64_t require_seed(const std::string& why) const {
    if (!seed) throw InputError(why + " needs a seed: set \"seed\" in the config or pass --seed");
    return *seed;
  }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  std::ofstream open_output(const std::string& name) const {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write output file " + (out_dir / name).string());
    return f;
  }

  void report(const std::string& key, const std::string& value) const {
    *out << key << '=' << value << '\n';
  }
  void report(const std::string& key, double value) const {
    report(key, detail::format_double(value));
  }
};

std::ifstream open_input(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot open " + p.string());
  return f;
}

GridFunction load_grid_function(const Context& ctx, const std::string& path) {
  auto f = open_input(ctx.resolve(path));
  try {
    return read_grid_function_csv(f);
  } catch (const CsvError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Specs

struct Interval {
  double a = 0.0, b = 1.0;
  std::size_t n = 0;
};

Interval read_interval(const json& j, const std::string& where, bool need_n) {
  allow_keys(j, where, {"a", "b", "N"});
  Interval iv;
  iv.a = as_number(need(j, "a", where), where + ".a");
  iv.b = as_number(need(j, "b", where), where + ".b");
  if (!(iv.a < iv.b)) throw InputError(where + ": need a < b");
  if (need_n || j.contains("N")) iv.n = as_size(need(j, "N", where), where + ".N");
  return iv;
}

QuadratureMeasure read_rule(const json& j, const std::string& where) {
  allow_keys(j, where, {"a", "b", "N", "scheme", "weights_csv"});
  if (j.contains("weights_csv")) {
    throw InputError(where + ": weights_csv rules are resolved by rule_from");
  }
  const double a = as_number(need(j, "a", where), where + ".a");
  const double b = as_number(need(j, "b", where), where + ".b");
  const std::size_t n = as_size(need(j, "N", where), where + ".N");
  const Scheme s = parse_scheme(j.contains("scheme") ? as_string(j.at("scheme"), where + ".scheme")
                                                     : std::string("trapezoid"));
  return lebesgue_rule(a, b, n, s);
}

QuadratureMeasure rule_from(const Context& ctx, const json& j, const std::string& where) {
  if (j.is_object() && j.contains("weights_csv")) {
    allow_keys(j, where, {"weights_csv"});
    auto f = open_input(ctx.resolve(as_string(j.at("weights_csv"), where + ".weights_csv")));
    return read_measure_csv(f);
  }
  return read_rule(j, where);
}

/// Function source: {"generator": name, "param": p, "stream": k} |
/// {"csv": path} | {"constant": c}. Random generators draw seed + stream.
struct FunctionSource {
  std::optional<std::string> generator;
  double param = 0.5;
  std::uint64_t stream = 0;
  double scale = 1.0, shift = 0.0;  // u = shift + scale * generator
  std::optional<std::string> csv;
  std::optional<double> constant;
};

FunctionSource read_function(const json& j, const std::string& where) {
  allow_keys(j, where, {"generator", "param", "stream", "scale", "shift", "csv", "constant"});
  FunctionSource s;
  const int kinds = j.contains("generator") + j.contains("csv") + j.contains("constant");
  if (kinds != 1) throw InputError(where + ": give exactly one of generator, csv, constant");
  if (j.contains("generator")) s.generator = as_string(j.at("generator"), where + ".generator");
  if (j.contains("csv")) s.csv = as_string(j.at("csv"), where + ".csv");
  if (j.contains("constant")) s.constant = as_number(j.at("constant"), where + ".constant");
  if (!s.generator && (j.contains("param") || j.contains("stream") || j.contains("scale") ||
                       j.contains("shift"))) {
    throw InputError(where + ": param/stream/scale/shift apply to generators only");
  }
  s.param = opt_number(j, "param", 0.5, where);
  s.stream = j.contains("stream") ? as_seed(j.at("stream"), where + ".stream") : 0;
  s.scale = opt_number(j, "scale", 1.0, where);
  s.shift = opt_number(j, "shift", 0.0, where);
  return s;
}

bool is_random_generator(const std::string& g) { return g == "random_pl" || g == "random_weierstrass"; }

ScalarFn scalar_function(const Context& ctx, const FunctionSource& s, double lo, double hi) {
  if (s.constant) {
    const double c = *s.constant;
    return [c](double) { return c; };
  }
  std::uint64_t seed = 0;
  if (is_random_generator(*s.generator)) seed = ctx.require_seed(*s.generator) + s.stream;
  ScalarFn f = builtin_function(*s.generator, s.param, seed, lo, hi);
  if (s.scale == 1.0 && s.shift == 0.0) return f;
  return [f, a = s.shift, b = s.scale](double x) { return a + b * f(x); };
}

/// Samples (or loads and restricts) a source onto `dom` with `dim` components.
GridFunction function_on(const Context& ctx, const FunctionSource& s, const DomainPtr& dom,
                         std::size_t dim) {
  if (s.csv) {
    const GridFunction u = load_grid_function(ctx, *s.csv);
    if (u.dim() != dim) {
      throw InputError(*s.csv + ": expected " + std::to_string(dim) + " value column(s)");
    }
    return u.domain().same_as(*dom) ? GridFunction(dom, dim, std::vector<double>(u.values().begin(), u.values().end()))
                                    : restrict_to(u, dom);
  }
  double lo = dom->coord(0), hi = lo;
  for (double x : dom->coords()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const ScalarFn f = scalar_function(ctx, s, lo, hi);
  return GridFunction::sample(dom, dim, [&f](double x, std::span<double> o) {
    std::fill(o.begin(), o.end(), f(x));
  });
}

struct KernelSpec {
  std::string name;
  std::vector<double> params;
};

KernelSpec read_kernel(const json& j, const std::string& where) {
  allow_keys(j, where, {"name", "params"});
  KernelSpec k;
  k.name = as_string(need(j, "name", where), where + ".name");
  if (j.contains("params")) k.params = as_numbers(j.at("params"), where + ".params");
  return k;
}

template <class T>
T kernel_as(const KernelSpec& spec, const char* expected) {
  AnyKernel any = builtin_kernel(spec.name, spec.params);
  if (auto* p = std::get_if<T>(&any)) return *p;
  throw InputError("kernel '" + spec.name + "' is not a " + expected);
}

/// Urysohn kernel from either an Urysohn builtin or a Fredholm kernel plus a growth map.
UrysohnKernel urysohn_kernel_from(const json& cfg) {
  const KernelSpec ks = read_kernel(need(cfg, "kernel", "config"), "kernel");
  AnyKernel any = builtin_kernel(ks.name, ks.params);
  if (auto* u = std::get_if<UrysohnKernel>(&any)) {
    if (cfg.contains("growth")) throw InputError("growth given with an Urysohn kernel");
    return *u;
  }
  if (auto* k = std::get_if<FredholmKernel>(&any)) {
    const KernelSpec gs = read_kernel(need(cfg, "growth", "config"), "growth");
    return hammerstein_kernel(*k, kernel_as<GrowthSpec>(gs, "growth map"));
  }
  throw InputError("kernel '" + ks.name + "' cannot define an Urysohn operator");
}

// ---------------------------------------------------------------------------
// Operators

using AnyOperator = std::variant<UrysohnOperator, FredholmOperator, NemytskiiOperator,
                                 HammersteinOperator, ConvolutiveOperator>;

AnyOperator build_operator(const Context& ctx) {
  const json& cfg = ctx.cfg;
  const std::string kind = as_string(need(cfg, "operator", "config"), "operator");
  const auto mu = rule_from(ctx, need(cfg, "rule", "config"), "rule");
  DomainPtr target = mu.domain_ptr();
  if (cfg.contains("target")) {
    if (kind == "nemytskii" || kind == "convolutive" || kind == "hammerstein") {
      throw InputError("'target' is only used by urysohn and fredholm operators");
    }
    const Interval iv = read_interval(cfg.at("target"), "target", true);
    target = DiscreteDomain::uniform_interval(iv.a, iv.b, iv.n);
  }
  if (kind == "urysohn") return UrysohnOperator(urysohn_kernel_from(cfg), mu, target);
  if (cfg.contains("growth") && kind != "hammerstein" && kind != "nemytskii") {
    throw InputError("'growth' is not used by a " + kind + " operator");
  }
  if (kind == "fredholm") {
    const auto ks = read_kernel(need(cfg, "kernel", "config"), "kernel");
    return FredholmOperator(kernel_as<FredholmKernel>(ks, "Fredholm kernel"), mu, target);
  }
  if (kind == "nemytskii") {
    if (cfg.contains("kernel")) throw InputError("'kernel' is not used by a nemytskii operator");
    const auto gs = read_kernel(need(cfg, "growth", "config"), "growth");
    return NemytskiiOperator(kernel_as<GrowthSpec>(gs, "growth map"), mu.domain_ptr());
  }
  if (kind == "hammerstein") {
    const auto ks = read_kernel(need(cfg, "kernel", "config"), "kernel");
    const auto gs = read_kernel(need(cfg, "growth", "config"), "growth");
    return HammersteinOperator(kernel_as<FredholmKernel>(ks, "Fredholm kernel"),
                               kernel_as<GrowthSpec>(gs, "growth map"), mu);
  }
  if (kind == "convolutive") {
    const json& r = cfg.at("rule");
    if (r.contains("weights_csv")) throw InputError("convolutive operators need a Lebesgue rule");
    const auto ks = read_kernel(need(cfg, "kernel", "config"), "kernel");
    const Scheme s = parse_scheme(r.contains("scheme") ? r.at("scheme").get<std::string>() : "trapezoid");
    return ConvolutiveOperator(kernel_as<ConvolutionKernel>(ks, "convolution kernel"),
                               r.at("a").get<double>(), r.at("b").get<double>(),
                               r.at("N").get<std::size_t>(), s);
  }
  throw InputError("unknown operator '" + kind + "'");
}

const DomainPtr& op_source(const AnyOperator& op) {
  return std::visit([](const auto& o) -> const DomainPtr& { return o.source(); }, op);
}
std::size_t op_input_dim(const AnyOperator& op) {
  return std::visit([](const auto& o) { return o.input_dim(); }, op);
}

HammersteinOperator hammerstein_from(const Context& ctx) {
  const json& cfg = ctx.cfg;
  const auto ks = read_kernel(need(cfg, "kernel", "config"), "kernel");
  const auto gs = read_kernel(need(cfg, "growth", "config"), "growth");
  const auto mu = rule_from(ctx, need(cfg, "rule", "config"), "rule");
  return HammersteinOperator(kernel_as<FredholmKernel>(ks, "Fredholm kernel"),
                             kernel_as<GrowthSpec>(gs, "growth map"), mu);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_holder_estimate(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "domain", "function", "exponents", "refinement",
                             "export_function"});
  const auto src = read_function(need(cfg, "function", "config"), "function");
  const auto alphas = as_numbers(need(cfg, "exponents", "config"), "exponents");
  if (alphas.empty()) throw InputError("exponents: need at least one exponent");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("exponents: each must lie in [0,1]");
  }
  const bool export_fn =
      cfg.contains("export_function") && as_bool(cfg.at("export_function"), "export_function");

  if (cfg.contains("refinement")) {
    if (src.csv) throw InputError("refinement mode needs a generator, not CSV data");
    const Interval iv = read_interval(need(cfg, "domain", "config"), "domain", false);
    const auto levels = as_sizes(cfg.at("refinement"), "refinement");
    if (levels.size() < 2) throw InputError("refinement: need at least 2 levels");
    for (std::size_t l = 1; l < levels.size(); ++l) {
      if (levels[l] <= levels[l - 1]) throw InputError("refinement: levels must increase");
    }
    const ScalarFn f = scalar_function(ctx, src, iv.a, iv.b);
    std::vector<std::vector<double>> table(alphas.size());
    for (std::size_t lev : levels) {
      auto dom = DiscreteDomain::uniform_interval(iv.a, iv.b, lev + 1);  // lev subintervals
      const auto u = GridFunction::sample(dom, f);
      for (std::size_t k = 0; k < alphas.size(); ++k) {
        table[k].push_back(holder_norm(u, alphas[k]).seminorm);
      }
    }
    auto csv = ctx.open_output("refinement.csv");
    csv << "subintervals";
    for (double a : alphas) csv << ",seminorm_alpha_" << detail::format_double(a);
    csv << '\n';
    for (std::size_t l = 0; l < levels.size(); ++l) {
      csv << levels[l];
      for (std::size_t k = 0; k < alphas.size(); ++k) csv << ',' << detail::format_double(table[k][l]);
      csv << '\n';
    }
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      bool inc = true;
      for (std::size_t l = 1; l < levels.size(); ++l) inc = inc && table[k][l] > table[k][l - 1];
      ctx.report("strictly_increasing[alpha=" + detail::format_double(alphas[k]) + "]",
                 inc ? "true" : "false");
    }
    return kPass;
  }

  GridFunction u = [&] {
    if (src.csv) {
      if (cfg.contains("domain")) throw InputError("domain is implied by the function CSV");
      return load_grid_function(ctx, *src.csv);
    }
    const Interval iv = read_interval(need(cfg, "domain", "config"), "domain", true);
    const auto dom = DiscreteDomain::uniform_interval(iv.a, iv.b, iv.n);
    return function_on(ctx, src, dom, 1);
  }();
  if (export_fn) {
    auto f = ctx.open_output("function.csv");
    write_csv(f, u);
  }
  auto csv = ctx.open_output("holder.csv");
  csv << "alpha,sup_norm,seminorm,norm,argmax_i,argmax_j\n";
  for (double a : alphas) {
    const HolderReport r = holder_norm(u, a);
    csv << detail::format_double(a) << ',' << detail::format_double(r.sup_norm) << ','
        << detail::format_double(r.seminorm) << ',' << detail::format_double(r.norm) << ','
        << r.argmax_pair.first << ',' << r.argmax_pair.second << '\n';
    *ctx.out << to_text(r);
  }
  return kPass;
}

int cmd_apply(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "operator", "kernel", "growth", "rule", "target",
                             "function"});
  const AnyOperator op = build_operator(ctx);
  const auto src = read_function(need(cfg, "function", "config"), "function");
  const GridFunction u = function_on(ctx, src, op_source(op), op_input_dim(op));
  std::size_t clamps = 0;
  const GridFunction img = std::visit([&](const auto& o) { return o.apply(u, &clamps); }, op);
  auto f = ctx.open_output("output.csv");
  write_csv(f, img);
  ctx.report("sup_norm", sup_norm(img));
  ctx.report("clamps", std::to_string(clamps));
  return kPass;
}

int cmd_derivative_check(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "operator", "kernel", "growth", "rule", "target",
                             "function", "direction", "epsilons", "order", "beta"});
  const AnyOperator op = build_operator(ctx);
  const auto& dom = op_source(op);
  const std::size_t n = op_input_dim(op);
  const GridFunction u = function_on(ctx, read_function(need(cfg, "function", "config"), "function"), dom, n);
  const GridFunction v =
      function_on(ctx, read_function(need(cfg, "direction", "config"), "direction"), dom, n);
  const auto eps = cfg.contains("epsilons") ? as_numbers(cfg.at("epsilons"), "epsilons")
                                            : std::vector<double>{1e-2, 1e-3, 1e-4};
  const std::size_t order = opt_size(cfg, "order", 1, "config");
  if (order != 1 && order != 2) throw InputError("order must be 1 or 2");
  TaylorOptions opt;
  if (cfg.contains("beta")) opt.beta = as_number(cfg.at("beta"), "beta");
  const TaylorCheckResult r = std::visit(
      [&](const auto& o) { return taylor_check(o, u, v, eps, static_cast<int>(order), opt); }, op);
  auto f = ctx.open_output("taylor.csv");
  write_csv(f, r);
  ctx.report("order", std::to_string(r.order));
  ctx.report("fitted_slope", r.fitted_slope);
  if (r.fitted_slope_beta) ctx.report("fitted_slope_beta", *r.fitted_slope_beta);
  ctx.report("exact", r.exact ? "true" : "false");
  ctx.report("pass", r.pass ? "true" : "false");
  return r.pass ? kPass : kAssertionFailure;
}

int cmd_nystrom(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "kernel", "growth", "function", "a", "b", "levels",
                             "scheme", "reference_N", "target", "beta", "tolerances"});
  const UrysohnKernel k = urysohn_kernel_from(cfg);
  const auto src = read_function(need(cfg, "function", "config"), "function");
  const auto levels = as_sizes(need(cfg, "levels", "config"), "levels");
  const double beta = opt_number(cfg, "beta", 1.0, "config");

  ConvergenceTable t;
  if (src.csv) {
    for (const char* key : {"a", "b", "scheme", "reference_N"}) {
      if (cfg.contains(key)) {
        throw InputError(std::string("'") + key + "' is implied by the fine-grid function CSV");
      }
    }
    const GridFunction fine = load_grid_function(ctx, *src.csv);
    DomainPtr target = fine.domain_ptr();
    if (cfg.contains("target")) {
      const Interval iv = read_interval(cfg.at("target"), "target", true);
      target = DiscreteDomain::uniform_interval(iv.a, iv.b, iv.n);
    }
    t = nystrom_convergence(k, fine, levels, target, beta);
  } else {
    const double a = as_number(need(cfg, "a", "config"), "a");
    const double b = as_number(need(cfg, "b", "config"), "b");
    const Scheme s = parse_scheme(cfg.contains("scheme") ? as_string(cfg.at("scheme"), "scheme")
                                                         : std::string("trapezoid"));
    const std::size_t ref = as_size(need(cfg, "reference_N", "config"), "reference_N");
    DomainPtr target;
    if (cfg.contains("target")) {
      const Interval iv = read_interval(cfg.at("target"), "target", true);
      target = DiscreteDomain::uniform_interval(iv.a, iv.b, iv.n);
    } else {
      target = DiscreteDomain::uniform_interval(a, b, 101);
    }
    const ScalarFn f = scalar_function(ctx, src, a, b);
    t = nystrom_convergence(k, f, a, b, levels, s, ref, target, beta);
  }
  auto out = ctx.open_output("convergence.csv");
  write_csv(out, t);
  ctx.report("final_sup_error", t.rows.back().sup_error);
  ctx.report("non_monotone_steps", std::to_string(t.non_monotone_steps()));

  int status = kPass;
  if (cfg.contains("tolerances")) {
    const json& tol = cfg.at("tolerances");
    allow_keys(tol, "tolerances", {"rate_min", "rate_max", "max_final_error"});
    const double rmin = opt_number(tol, "rate_min", -kInf, "tolerances");
    const double rmax = opt_number(tol, "rate_max", kInf, "tolerances");
    for (const auto& row : t.rows) {
      if (row.rate && (*row.rate < rmin || *row.rate > rmax)) {
        ctx.report("rate_violation[N=" + std::to_string(row.n) + "]", *row.rate);
        status = kAssertionFailure;
      }
    }
    if (tol.contains("max_final_error") &&
        t.rows.back().sup_error > as_number(tol.at("max_final_error"), "tolerances.max_final_error")) {
      ctx.report("final_error_violation", "true");
      status = kAssertionFailure;
    }
  }
  ctx.report("pass", status == kPass ? "true" : "false");
  return status;
}

int cmd_ide(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "kernel", "growth", "rule", "function", "steps",
                             "alpha", "guard"});
  const HammersteinOperator op = hammerstein_from(ctx);
  const GridFunction u0 =
      function_on(ctx, read_function(need(cfg, "function", "config"), "function"), op.source(),
                  op.input_dim());
  const std::size_t steps = as_size(need(cfg, "steps", "config"), "steps");
  const double alpha = opt_number(cfg, "alpha", 0.0, "config");
  const double guard = opt_number(cfg, "guard", kOverflowGuard, "config");
  const OrbitRecord rec = iterate(op, u0, steps, alpha, guard);
  {
    auto f = ctx.open_output("orbit.csv");
    write_csv(f, rec);
  }
  {
    auto f = ctx.open_output("final_state.csv");
    write_csv(f, rec.states.back());
  }
  ctx.report("steps_completed", std::to_string(rec.states.size() - 1));
  ctx.report("final_sup_norm", rec.sup_norms.back());
  ctx.report("status", rec.status);
  return rec.overflow ? kAssertionFailure : kPass;
}

int cmd_fixed_point(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "kernel", "growth", "rule", "function", "newton"});
  const HammersteinOperator op = hammerstein_from(ctx);
  const GridFunction u0 =
      function_on(ctx, read_function(need(cfg, "function", "config"), "function"), op.source(),
                  op.input_dim());
  NewtonOptions opt;
  if (cfg.contains("newton")) {
    const json& nj = cfg.at("newton");
    allow_keys(nj, "newton", {"tol", "max_iter", "pre_iterations", "armijo_c", "max_halvings",
                              "max_condition"});
    opt.tol = opt_number(nj, "tol", opt.tol, "newton");
    opt.max_iter = opt_size(nj, "max_iter", opt.max_iter, "newton");
    opt.pre_iterations = opt_size(nj, "pre_iterations", opt.pre_iterations, "newton");
    opt.armijo_c = opt_number(nj, "armijo_c", opt.armijo_c, "newton");
    opt.max_halvings = opt_size(nj, "max_halvings", opt.max_halvings, "newton");
    opt.max_condition = opt_number(nj, "max_condition", opt.max_condition, "newton");
  }
  const NewtonResult r = newton_fixed_point(op, u0, opt);
  {
    auto f = ctx.open_output("newton.csv");
    write_csv(f, r);
  }
  {
    auto f = ctx.open_output("u_star.csv");
    write_csv(f, r.u_star);
  }
  // independent re-check of the residual
  const double check = sup_norm(r.u_star - op.apply(r.u_star));
  ctx.report("converged", r.converged ? "true" : "false");
  ctx.report("newton_steps", std::to_string(r.newton_steps));
  ctx.report("residual", check);
  std::string ratios;
  for (double q : r.quadratic_ratios()) ratios += (ratios.empty() ? "" : ";") + detail::format_double(q);
  ctx.report("quadratic_ratios", ratios);
  if (!r.message.empty()) ctx.report("message", r.message);
  return r.converged && check <= opt.tol ? kPass : kAssertionFailure;
}

// ---------------------------------------------------------------------------
// verify-all

struct SuiteLine {
  std::string suite;
  std::size_t checks = 0, hard_failures = 0, report_only_failures = 0;
};

int cmd_verify_all(const Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, "config", {"command", "seed", "pathology", "random_functions", "grid_points",
                             "radius", "holder_alphas", "fredholm_alpha", "smoothing_alpha"});
  const std::uint64_t seed = ctx.require_seed("verify-all");
  const std::size_t nrand = opt_size(cfg, "random_functions", 20, "config");
  const std::size_t npts = opt_size(cfg, "grid_points", 101, "config");
  const double radius = opt_number(cfg, "radius", 1.0, "config");
  const double fred_alpha = opt_number(cfg, "fredholm_alpha", 1.0, "config");
  const double smooth_alpha = opt_number(cfg, "smoothing_alpha", 0.5, "config");
  const auto halphas = cfg.contains("holder_alphas") ? as_numbers(cfg.at("holder_alphas"), "holder_alphas")
                                                     : std::vector<double>{0.25, 0.5, 0.75, 1.0};
  if (nrand < 2) throw InputError("random_functions: need at least 2");
  if (!(radius >= 1.0)) throw InputError("radius: must be at least 1 (test functions take values in [0,1])");
  PathologyConfig pc;
  pc.log_alphas = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  if (cfg.contains("pathology")) {
    const json& pj = cfg.at("pathology");
    allow_keys(pj, "pathology", {"levels", "log_alphas", "weierstrass_tolerance", "smooth_points"});
    if (pj.contains("levels")) pc.levels = as_sizes(pj.at("levels"), "pathology.levels");
    if (pj.contains("log_alphas")) pc.log_alphas = as_numbers(pj.at("log_alphas"), "pathology.log_alphas");
    pc.weierstrass_tolerance = opt_number(pj, "weierstrass_tolerance", pc.weierstrass_tolerance, "pathology");
    pc.smooth_points = opt_size(pj, "smooth_points", pc.smooth_points, "pathology");
  }
  std::vector<SuiteLine> summary;

  // (1) pathologies
  {
    const PathologyReport pr = pathology_suite(pc);
    auto f = ctx.open_output("pathology_log.csv");
    f << "subintervals";
    for (double a : pr.log_alphas) f << ",alpha_" << detail::format_double(a);
    f << '\n';
    for (std::size_t l = 0; l < pr.levels.size(); ++l) {
      f << pr.levels[l];
      for (std::size_t a = 0; a < pr.log_alphas.size(); ++a) f << ',' << detail::format_double(pr.log_table[a][l]);
      f << '\n';
    }
    auto w = ctx.open_output("pathology_weierstrass.csv");
    w << "subintervals,seminorm_alpha,lipschitz\n";
    for (std::size_t l = 0; l < pr.levels.size(); ++l) {
      w << pr.levels[l] << ',' << detail::format_double(pr.weierstrass_alpha_seminorms[l]) << ','
        << detail::format_double(pr.weierstrass_lipschitz[l]) << '\n';
    }
    SuiteLine s{"pathology", 3, 0, 0};
    s.hard_failures = !pr.log_pass + !pr.weierstrass_bounded + !pr.smooth_pass;
    s.report_only_failures = !pr.weierstrass_lipschitz_grows;
    summary.push_back(s);
  }

  // random test functions with values in [0,1] on [-1,1]
  const auto grid = DiscreteDomain::uniform_interval(-1.0, 1.0, npts);
  std::vector<GridFunction> tests;
  for (std::size_t i = 0; i < nrand; ++i) {
    const ScalarFn f = random_piecewise_linear(seed + i, -1.0, 1.0);
    tests.push_back(GridFunction::sample(grid, [&f](double x) { return 0.5 * (1.0 + f(x)); }));
  }

  // (2) Hölder calculus: embedding, sum/product/chain rules, equivalent norm
  {
    auto f = ctx.open_output("calculus.csv");
    f << "function,alpha,beta,check,lhs,rhs,holds\n";
    SuiteLine s{"holder_calculus", 0, 0, 0};
    auto emit = [&](std::size_t i, double a, double b, const char* name, double lhs, double rhs, bool ok) {
      f << i << ',' << detail::format_double(a) << ',' << detail::format_double(b) << ',' << name
        << ',' << detail::format_double(lhs) << ',' << detail::format_double(rhs) << ','
        << (ok ? 1 : 0) << '\n';
      ++s.checks;
      s.hard_failures += !ok;
    };
    const OuterMap sqrt_abs{abs_pow(0.5), 0.5, 1.0};
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const auto& u1 = tests[i];
      const auto& u2 = tests[(i + 1) % tests.size()];
      for (std::size_t p = 0; p < halphas.size(); ++p) {
        const double a = halphas[p];
        for (std::size_t q = p; q < halphas.size(); ++q) {
          const double b = halphas[q];
          const auto e = embedding_check(u1, a, b);
          emit(i, a, b, "embedding_seminorm", e.seminorm_lhs, e.seminorm_rhs,
               e.seminorm_lhs <= e.seminorm_rhs * (1 + kQuotientSlack));
          emit(i, a, b, "embedding_norm", e.norm_lhs, e.norm_rhs,
               e.norm_lhs <= e.norm_rhs * (1 + kQuotientSlack));
        }
        const auto c = calculus_rules_check(u1, u2, a, 1.5, -0.75, sqrt_abs);
        emit(i, a, a, "sum_rule", c.sum.lhs, c.sum.rhs, c.sum.holds);
        emit(i, a, a, "product_rule", c.product.lhs, c.product.rhs, c.product.holds);
        emit(i, a, a * 0.5, "chain_rule", c.chain.lhs, c.chain.rhs, c.chain.holds);
        const double eq = equivalent_norm(u1, a, i % u1.size());
        const double nm = holder_norm(u1, a).norm;
        const double cst = equivalent_norm_constant(u1.domain(), a);
        emit(i, a, a, "equivalent_norm_lower", eq, nm * (1 + kSumSlack), eq <= nm * (1 + kSumSlack));
        emit(i, a, a, "equivalent_norm_upper", nm, cst * eq * (1 + kSumSlack),
             nm <= cst * eq * (1 + kSumSlack));
      }
    }
    summary.push_back(s);
  }

  // (3) bound suites over the builtin kernels with registered bounds
  {
    BoundReport all;
    const auto mu = lebesgue_rule(-1.0, 1.0, npts, Scheme::trapezoid);
    std::vector<GridFunction> on_mu;
    for (const auto& u : tests) {
      on_mu.push_back(GridFunction(mu.domain_ptr(), 1, std::vector<double>(u.values().begin(), u.values().end())));
    }
    const std::vector<std::pair<std::string, FredholmKernel>> dispersals{
        {"gaussian_dispersal(0.5)", gaussian_dispersal(0.5)},
        {"laplace_dispersal(0.5)", laplace_dispersal(0.5)}};
    const std::vector<std::pair<std::string, GrowthSpec>> growths{
        {"beverton_holt(2,1)", beverton_holt(2.0, 1.0)},
        {"ricker(1.5)", ricker(1.5)},
        {"logistic(3)", logistic(3.0)},
        {"identity", identity_growth(1)},
        {"affine(1,[0.5],[0.25])", affine(1, {0.5}, {0.25})}};
    for (const auto& [kn, k] : dispersals) {
      all.append(bound_suite(FredholmOperator(k, mu, mu.domain_ptr()), on_mu, fred_alpha), kn + "/");
      for (const auto& [gn, g] : growths) {
        all.append(bound_suite(HammersteinOperator(k, g, mu), on_mu, radius, fred_alpha),
                   kn + "*" + gn + "/");
      }
    }
    for (const auto& [gn, g] : growths) {
      all.append(bound_suite(NemytskiiOperator(g, mu.domain_ptr()), on_mu, radius), gn + "/");
    }
    const std::vector<std::pair<std::string, UrysohnKernel>> polys{
        {"separable_poly(0,0,[0,0,1])", separable_poly(0, 0, {0.0, 0.0, 1.0})},
        {"separable_poly(1,1,[1,-2,0.5])", separable_poly(1, 1, {1.0, -2.0, 0.5})},
        {"separable_poly(2,0,[0,1])", separable_poly(2, 0, {0.0, 1.0})}};
    for (const auto& [pn, p] : polys) {
      all.append(bound_suite(UrysohnOperator(p, mu, mu.domain_ptr()), on_mu, radius), pn + "/");
    }
    auto f = ctx.open_output("bounds.csv");
    write_csv(f, all);
    SuiteLine s{"bound_suite", all.checks.size(), all.hard_failures(), all.failures(true) - all.hard_failures()};
    summary.push_back(s);
  }

  // (4) convolution smoothing
  {
    auto f = ctx.open_output("smoothing.csv");
    f << "kernel,case,u_seminorm,image_seminorm,interior_seminorm,bound,holds\n";
    SuiteLine s{"smoothing", 0, 0, 0};
    std::vector<std::pair<std::string, ConvolutionKernel>> kernels{
        {"conv_laplace(1)", laplace_convolution(1.0)},
        {"conv_laplace(0.25)", laplace_convolution(0.25)},
        {"conv_identity", identity_convolution()}};
    for (const auto& [kn, k] : kernels) {
      const ConvolutiveOperator op(k, -1.0, 1.0, npts, Scheme::trapezoid);
      std::vector<GridFunction> fam;
      fam.push_back(GridFunction::sample(op.target(), abs_pow(0.5)));
      for (const auto& u : tests) {
        fam.push_back(GridFunction(op.target(), 1, std::vector<double>(u.values().begin(), u.values().end())));
      }
      const SmoothingReport rep = smoothing_suite(op, fam, smooth_alpha, radius);
      for (std::size_t c = 0; c < rep.cases.size(); ++c) {
        const auto& sc = rep.cases[c];
        f << kn << ',' << c << ',' << detail::format_double(sc.u_seminorm) << ','
          << detail::format_double(sc.image_seminorm) << ',' << detail::format_double(sc.interior_seminorm)
          << ',' << detail::format_double(sc.bound) << ',' << (sc.holds ? 1 : 0) << '\n';
      }
      s.checks += rep.cases.size();
      s.hard_failures += rep.failures(false);
      s.report_only_failures += rep.failures(true) - rep.failures(false);
    }
    summary.push_back(s);
  }

  std::size_t hard = 0, soft = 0;
  auto f = ctx.open_output("summary.csv");
  f << "suite,checks,hard_failures,report_only_failures\n";
  for (const auto& s : summary) {
    f << s.suite << ',' << s.checks << ',' << s.hard_failures << ',' << s.report_only_failures << '\n';
    ctx.report(s.suite + ".hard_failures", std::to_string(s.hard_failures));
    hard += s.hard_failures;
    soft += s.report_only_failures;
  }
  const bool pass = hard == 0 && (!ctx.strict || soft == 0);
  ctx.report("pass", pass ? "true" : "false");
  return pass ? kPass : kAssertionFailure;
}

json load_config(const fs::path& p) {
  auto f = open_input(p);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    throw InputError(p.string() + ": line " + std::to_string(line) + ": invalid JSON");
  }
}

const std::vector<std::pair<std::string, std::function<int(const Context&)>>>& commands() {
  static const std::vector<std::pair<std::string, std::function<int(const Context&)>>> c{
      {"holder-estimate", cmd_holder_estimate}, {"apply", cmd_apply},
      {"derivative-check", cmd_derivative_check}, {"nystrom-convergence", cmd_nystrom},
      {"ide", cmd_ide}, {"fixed-point", cmd_fixed_point}, {"verify-all", cmd_verify_all}};
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integral operators on discretized Hölder spaces"};
  std::string command, config_path, out_dir = ".";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::vector<std::string> names;
  for (const auto& c : commands()) names.push_back(c.first);
  app.add_option("command", command, "Subcommand")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "Output directory for CSV files");
  app.add_option("--threads", threads, "Cap on worker threads (0 = hardware)");
  app.add_option("--seed", seed, "Seed overriding the config's \"seed\"");
  app.add_flag("--strict", strict, "Promote report-only margins to hard failures");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    const fs::path cfg_path(config_path);
    Context ctx;
    ctx.cfg = load_config(cfg_path);
    if (!ctx.cfg.is_object()) throw InputError("config: top level must be an object");
    ctx.base_dir = cfg_path.parent_path();
    ctx.out_dir = out_dir;
    ctx.strict = strict;
    ctx.out = &out;
    if (ctx.cfg.contains("command") && as_string(ctx.cfg.at("command"), "command") != command) {
      throw InputError("config is for '" + ctx.cfg.at("command").get<std::string>() +
                       "', not '" + command + "'");
    }
    if (ctx.cfg.contains("seed")) ctx.seed = as_seed(ctx.cfg.at("seed"), "seed");
    if (seed) ctx.seed = seed;
    set_max_threads(threads);
    for (const auto& [name, fn] : commands()) {
      if (name == command) return fn(ctx);
    }
    return kInputError;
  } catch (const CsvError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kAssertionFailure;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"urysohn-cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace urysohn::cli
