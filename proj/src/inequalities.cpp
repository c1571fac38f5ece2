#include "stablelike/inequalities.hpp"

#include <algorithm>
#include <cfloat>
#include <numbers>
#include <numeric>

#include "stablelike/error.hpp"
#include "stablelike/parallel.hpp"
#include "stablelike/quadrature.hpp"

namespace stablelike {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTailStart = 2.0 * kPi * 128.0;  // in the rescaled variable s = |a - b| r
constexpr double kMaxOmega = 2e5;
constexpr std::uint32_t kSearchChannel = 0x1E5;

QuadOptions tight() {
  QuadOptions o;
  o.abs_tol = 1e-16;
  o.rel_tol = 1e-13;
  o.max_intervals = 400;
  return o;
}

enum class Regime { below_one, one, above_one };

Regime regime_of(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidInput("le5: alpha must lie in (0, 2)");
  if (alpha < 1.0) return Regime::below_one;
  if (alpha > 1.0) return Regime::above_one;
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("le5: beta must lie in (0, 1) when alpha = 1");
  return Regime::one;
}

struct Acc {
  double value = 0.0;
  double error = 0.0;
  void add(const QuadResult& r) {
    if (!r.converged) throw AccuracyError("le5: quadrature did not converge", value + r.value, error + r.error);
    value += r.value;
    error += r.error;
  }
};

// Points in [lo, hi] where the integrands may kink.
std::vector<double> kinks(double omega, double lo, double hi) {
  std::vector<double> b{lo, hi};
  auto add_lattice = [&](double step) {
    for (double k = std::floor(lo / step) + 1.0; k * step < hi; k += 1.0) b.push_back(k * step);
  };
  if (omega > 0.0) add_lattice(kPi / (2.0 * omega));
  add_lattice(2.0 * kPi);
  if (lo < 1.0 && 1.0 < hi) b.push_back(1.0);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double x : b)
    if (out.empty() || x - out.back() > 1e-13 * std::max(1.0, x)) out.push_back(x);
  if (out.back() < hi) out.back() = hi;
  return out;
}

void panels(const Fn1& f, const std::vector<double>& b, Acc& acc) {
  for (std::size_t j = 0; j + 1 < b.size(); ++j) acc.add(integrate(f, b[j], b[j + 1], tight()));
}

// 2 |f(omega s)| |sin(s/2)| with f = sin or cos, integrated against s^{-1-alpha}.
struct AbsProduct {
  double omega;
  bool fast_sin;
  double operator()(double s) const {
    double fast = fast_sin ? std::sin(omega * s) : std::cos(omega * s);
    return 2.0 * std::abs(fast) * std::abs(std::sin(0.5 * s));
  }
};

// Best rational p/q with q <= 32 for x, if it is exact to rounding.
int small_denominator(double x) {
  for (int q = 1; q <= 32; ++q) {
    double p = std::round(x * q);
    if (std::abs(x * q - p) < 1e-9 * q) return q;
  }
  return 0;
}

double product_mean(const AbsProduct& g, int q) {
  const double period = 2.0 * kPi * q;
  Acc acc;
  panels(g, kinks(g.omega, 0.0, period), acc);
  return acc.value / period;
}

struct TailPlan {
  double resolved_end;  // fast oscillations resolved up to here
  double tail_start;    // analytic tail (or plain quadrature) from here
  bool analytic;        // false: quadrature over [tail_start, 10 tail_start], nothing beyond
};

// Integral over [lo, inf) of an AbsProduct against s^{-1-alpha}.
Acc abs_integral(const AbsProduct& g, double alpha, double lo, const TailPlan& plan) {
  Acc acc;
  auto w = [&](double s) { return g(s) * std::pow(s, -1.0 - alpha); };
  if (lo == 0.0) {
    double s0 = std::min(0.25, 0.25 / std::max(g.omega, 1e-300));
    if (!(g.fast_sin && g.omega == 0.0))
      acc.add(integrate_power_singular(g, s0, alpha, g.fast_sin ? 2.0 : 1.0, tight()));
    lo = s0;
  }
  const double R = plan.tail_start;
  const double s1 = std::min(R, std::max(lo, plan.resolved_end));
  if (lo < s1) panels(w, kinks(g.omega, lo, s1), acc);
  if (!plan.analytic) {
    if (s1 < R) panels(w, kinks(g.omega, s1, R), acc);
    panels(w, kinks(g.omega, R, 10.0 * R), acc);
    return acc;
  }
  // Fast factor replaced by its mean 2/pi between s1 and R.
  if (s1 < R) {
    auto h = [&](double s) { return (4.0 / kPi) * std::abs(std::sin(0.5 * s)) * std::pow(s, -1.0 - alpha); };
    Acc hom;
    panels(h, kinks(0.0, s1, R), hom);
    acc.value += hom.value;
    double tv = 0.0;
    for (double k = std::floor(s1 / (2.0 * kPi)); 2.0 * kPi * k < R; k += 1.0)
      tv += 4.0 * std::pow(2.0 * kPi * k + kPi, -1.0 - alpha);
    acc.error += hom.error + (kPi / g.omega) * tv;
  }
  int q = small_denominator(2.0 * g.omega);
  double mean = q > 0 ? product_mean(g, q) : 8.0 / (kPi * kPi);
  acc.value += mean * std::pow(R, -alpha) / alpha;
  acc.error += 2.0 * 2.0 * kPi * (q > 0 ? q : 32) * 2.0 * std::pow(R, -1.0 - alpha);
  return acc;
}

// 1 - cos s, the cosine part when one of a, b vanishes.
Acc one_minus_cos_integral(double alpha, const TailPlan& plan) {
  Acc acc;
  auto w = [&](double s) { return one_minus_cos(s) * std::pow(s, -1.0 - alpha); };
  acc.add(integrate_power_singular([](double s) { return one_minus_cos(s); }, 0.25, alpha, 2.0, tight()));
  const double R = plan.tail_start;
  panels(w, kinks(0.5, 0.25, R), acc);
  if (!plan.analytic) {
    panels(w, kinks(0.5, R, 10.0 * R), acc);
    return acc;
  }
  auto t = cos_power_tail(0.0, 1.0, R, 1.0 + alpha, tight());
  acc.add({std::pow(R, -alpha) / alpha - t.value, t.error, t.evaluations, t.converged});
  return acc;
}

// s - 2 cos(omega s) sin(s/2) = s - sin((omega+1/2)s) + sin((omega-1/2)s) >= 0.
double compensated(double omega, double s) {
  return 2.0 * x_minus_sin(0.5 * s) + 2.0 * std::sin(0.5 * s) * one_minus_cos(omega * s);
}

// Integral of the compensated difference over [0, hi], or [0, inf) when hi is infinite.
Acc compensated_integral(double omega, double alpha, double hi, const TailPlan& plan) {
  Acc acc;
  auto g = [omega](double s) { return compensated(omega, s); };
  auto w = [&](double s) { return g(s) * std::pow(s, -1.0 - alpha); };
  double s0 = std::min(0.25, 0.25 / std::max(omega, 1e-300));
  acc.add(integrate_power_singular(g, s0, alpha, 3.0, tight()));
  if (std::isfinite(hi)) {
    panels(w, kinks(omega, s0, hi), acc);
    return acc;
  }
  const double R = std::min(plan.tail_start, std::max(s0, plan.resolved_end));
  panels(w, kinks(omega, s0, R), acc);
  if (!plan.analytic) {
    if (R < plan.tail_start) panels(w, kinks(omega, R, plan.tail_start), acc);
    panels(w, kinks(omega, plan.tail_start, 10.0 * plan.tail_start), acc);
    return acc;
  }
  acc.value += std::pow(R, 1.0 - alpha) / (alpha - 1.0);
  for (double mu : {omega + 0.5, omega - 0.5}) {
    if (mu == 0.0) continue;
    auto t = cos_power_tail(-0.5 * kPi, mu, R, 1.0 + alpha, tight());
    acc.add({mu == omega + 0.5 ? -t.value : t.value, t.error, t.evaluations, t.converged});
  }
  return acc;
}

struct Le5Parts {
  Acc cos_part;
  Acc second;
};

Le5Parts le5_parts(double omega, double alpha, Regime reg, bool analytic) {
  if (omega > kMaxOmega)
    throw UnsupportedConfiguration("le5: |a+b|/|a-b| above 4e5 is outside the resolved range");
  TailPlan plan{std::max(2.0 * kPi, 2.0 * kPi * 256.0 / std::max(omega, 1e-300)), kTailStart, analytic};
  Le5Parts out;
  out.cos_part = omega == 0.5 ? one_minus_cos_integral(alpha, plan)
                              : abs_integral(AbsProduct{omega, true}, alpha, 0.0, plan);
  switch (reg) {
    case Regime::below_one:
      out.second = abs_integral(AbsProduct{omega, false}, alpha, 0.0, plan);
      break;
    case Regime::one: {
      out.second = compensated_integral(omega, 1.0, 1.0, plan);
      Acc rest = abs_integral(AbsProduct{omega, false}, 1.0, 1.0, plan);
      out.second.value += rest.value;
      out.second.error += rest.error;
      break;
    }
    case Regime::above_one:
      out.second = compensated_integral(omega, alpha, INFINITY, plan);
      break;
  }
  return out;
}

std::string le5_name(Regime r) {
  switch (r) {
    case Regime::below_one: return "le5-i";
    case Regime::one: return "le5-ii";
    default: return "le5-iii";
  }
}

void finish(InequalityCase& c, double constant) {
  c.ratio = c.shape > 0.0 ? c.lhs / c.shape : 0.0;
  c.constant = std::isnan(constant) ? c.ratio : constant;
  c.rhs = c.constant * c.shape;
  c.margin = c.rhs - c.lhs;
}

Vec signed_power(const Vec& x, double q) {
  double n = x.norm();
  if (n == 0.0) return Vec::Zero(x.size());
  return x * std::pow(n, q - 1.0);
}

Vec gaussian(Stream& s, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = s.normal();
  return v;
}

Vec unit(Stream& s, int d) {
  Vec v = gaussian(s, d);
  double n = v.norm();
  return n > 0.0 ? Vec(v / n) : Vec(Vec::Unit(d, 0));
}

// Pairs covering the geometries that make the vector inequalities tight.
std::pair<Vec, Vec> draw_pair(Stream& s, int d) {
  const double scale = std::exp(2.0 * s.normal());
  Vec x = gaussian(s, d) * scale;
  Vec y;
  switch (s.next_u32() % 5) {
    case 0:  // generic
      y = gaussian(s, d) * scale * std::exp(s.normal());
      break;
    case 1:  // near-equal, |x - y| <= |x| / 2
      y = x + unit(s, d) * x.norm() * 0.5 * std::pow(10.0, -4.0 * s.uniform());
      break;
    case 2: {  // near-collinear with a small transverse offset
      double t = 6.0 * s.uniform() - 3.0;
      y = t * x + unit(s, d) * x.norm() * std::pow(10.0, -4.0 * s.uniform());
      break;
    }
    case 3:  // near-antipodal
      y = -x * std::exp(0.5 * s.normal()) + unit(s, d) * x.norm() * 1e-3 * s.uniform();
      break;
    default:  // |x - y| > |x| / 2 with y much smaller than x, sometimes exactly 0
      y = unit(s, d) * x.norm() * std::pow(10.0, -4.0 * s.uniform());
      if (s.uniform() < 0.25) y.setZero();
      break;
  }
  return {x, y};
}

}  // namespace

InequalityCase le5_check(double a, double b, double alpha, double beta, double constant) {
  Regime reg = regime_of(alpha, beta);
  InequalityCase c;
  c.lemma = le5_name(reg);
  c.inputs = {a, b, alpha, beta};
  const double d = std::abs(a - b), sum = std::abs(a) + std::abs(b);
  switch (reg) {
    case Regime::below_one: c.shape = std::pow(d, alpha); break;
    case Regime::one: c.shape = std::pow(sum, 1.0 - beta) * std::pow(d, beta); break;
    case Regime::above_one: c.shape = std::pow(sum, alpha - 1.0) * d; break;
  }
  if (d == 0.0) {
    finish(c, constant);
    return c;
  }
  // r = s / |a - b|; the truncation point 1/|a - b| becomes s = 1.
  const double omega = std::abs(a + b) / (2.0 * d);
  auto parts = le5_parts(omega, alpha, reg, true);
  const double scale = std::pow(d, alpha);
  c.cos_part = scale * parts.cos_part.value;
  c.second_part = scale * parts.second.value;
  c.lhs = c.cos_part + c.second_part;
  c.oracle_error = scale * (parts.cos_part.error + parts.second.error);
  finish(c, constant);
  return c;
}

Le5TailCheck le5_tail_consistency(double a, double b, double alpha, double beta) {
  Regime reg = regime_of(alpha, beta);
  const double d = std::abs(a - b);
  if (d == 0.0) throw InvalidInput("le5_tail_consistency: a = b has no tail");
  const double omega = std::abs(a + b) / (2.0 * d), scale = std::pow(d, alpha);
  if (omega > 64.0) throw UnsupportedConfiguration("le5_tail_consistency: |a+b|/|a-b| above 128 is too costly to resolve");
  auto an = le5_parts(omega, alpha, reg, true);
  auto qu = le5_parts(omega, alpha, reg, false);
  Le5TailCheck out;
  out.tail_start = kTailStart / d;
  out.lhs_analytic_tail = scale * an.cos_part.value + scale * an.second.value;
  out.lhs_quadrature_tail = scale * qu.cos_part.value + scale * qu.second.value;
  // Both integrands are bounded by 2 apart from the linear part of the compensated term.
  const double far = 10.0 * kTailStart;
  double dropped = 2.0 * 2.0 * std::pow(far, -alpha) / alpha;
  if (reg == Regime::above_one) dropped += std::pow(far, 1.0 - alpha) / (alpha - 1.0);
  out.declared_bound = scale * (an.cos_part.error + an.second.error + qu.cos_part.error + qu.second.error + dropped);
  return out;
}

InequalityCase le52_check(const Vec& x, const Vec& y, double q, double constant) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("le52: q must lie in (0, 1)");
  if (x.size() != y.size()) throw InvalidInput("le52: dimension mismatch");
  InequalityCase c;
  c.lemma = "le52";
  c.inputs.assign(x.data(), x.data() + x.size());
  c.inputs.insert(c.inputs.end(), y.data(), y.data() + y.size());
  c.inputs.push_back(q);
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) {
    c.lhs = (signed_power(x, q) - signed_power(y, q)).norm();
  } else {
    // (x - y)|x|^{q-1} + y (|x|^{q-1} - |y|^{q-1}), with the bracket formed without cancellation.
    const double gap = (x - y).dot(x + y) / (nx + ny);
    const double bracket = std::pow(ny, q - 1.0) * std::expm1((q - 1.0) * std::log1p(gap / ny));
    c.lhs = ((x - y) * std::pow(nx, q - 1.0) + y * bracket).norm();
  }
  c.shape = std::pow((x - y).norm(), q);
  c.oracle_error = 4.0 * DBL_EPSILON * (std::pow(x.norm(), q) + std::pow(y.norm(), q));
  finish(c, constant);
  return c;
}

InequalityCase abs_power_check(const Vec& x, const Vec& y, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidInput("abs_power: q must lie in (0, 1]");
  if (x.size() != y.size()) throw InvalidInput("abs_power: dimension mismatch");
  InequalityCase c;
  c.lemma = "abs_power";
  c.inputs.assign(x.data(), x.data() + x.size());
  c.inputs.insert(c.inputs.end(), y.data(), y.data() + y.size());
  c.inputs.push_back(q);
  double px = std::pow(x.norm(), q), py = std::pow(y.norm(), q);
  c.lhs = std::abs(px - py);
  c.shape = std::pow((x - y).norm(), q);
  c.oracle_error = 4.0 * DBL_EPSILON * (px + py);
  finish(c, 1.0);
  return c;
}

bool violates(const InequalityCase& c) { return c.margin < -c.oracle_error; }

CaseSampler le5_sampler(double alpha, double beta) {
  regime_of(alpha, beta);
  return [alpha, beta](Stream& s) {
    double a = std::exp(s.normal()) * (s.uniform() < 0.5 ? -1.0 : 1.0), b;
    switch (s.next_u32() % 4) {
      case 0: b = s.normal() * std::exp(s.normal()); break;                          // generic
      case 1: b = a * (1.0 + std::pow(10.0, -3.0 * s.uniform()) * (s.uniform() < 0.5 ? -1.0 : 1.0)); break;  // near-equal
      case 2: b = -a * std::pow(10.0, 4.0 * s.uniform() - 2.0); break;                // opposite signs
      default: b = s.uniform() < 0.5 ? 0.0 : -a; break;                              // one zero or a = -b
    }
    return le5_check(a, b, alpha, beta);
  };
}

CaseSampler le52_sampler(int dim, double q) {
  if (dim < 1) throw InvalidInput("le52_sampler: dimension must be positive");
  return [dim, q](Stream& s) {
    auto [x, y] = draw_pair(s, dim);
    return le52_check(x, y, q);
  };
}

CaseSampler abs_power_sampler(int dim, double q) {
  if (dim < 1) throw InvalidInput("abs_power_sampler: dimension must be positive");
  return [dim, q](Stream& s) {
    auto [x, y] = draw_pair(s, dim);
    return abs_power_check(x, y, q);
  };
}

SupSearchResult sup_ratio_search(const std::string& lemma, const CaseSampler& sampler, std::size_t initial,
                                 std::size_t budget, std::uint64_t seed, int jobs, std::size_t keep_worst) {
  if (initial == 0 || budget < initial) throw InvalidInput("sup_ratio_search: need 0 < initial <= budget");
  SupSearchResult res;
  res.lemma = lemma;
  std::vector<double> ratio;
  std::vector<char> bad;
  std::size_t best = 0;
  for (std::size_t n = initial;; n = std::min(budget, 2 * n)) {
    std::size_t lo = ratio.size();
    ratio.resize(n);
    bad.resize(n);
    parallel_for(n - lo, jobs, [&](std::size_t k) {
      Stream st(seed, lo + k, kSearchChannel);
      auto c = sampler(st);
      ratio[lo + k] = c.ratio;
      bad[lo + k] = violates(c) ? 1 : 0;
    });
    for (std::size_t i = lo; i < n; ++i)
      if (ratio[i] > ratio[best]) best = i;
    res.budgets.push_back(n);
    res.sup_history.push_back(ratio[best]);
    if (n == budget) break;
  }
  res.sup_ratio = ratio[best];
  res.violations = std::size_t(std::count(bad.begin(), bad.end(), 1));
  const auto& h = res.sup_history;
  res.stable = h.size() >= 2 && h.back() - h[h.size() - 2] < 0.01 * h[h.size() - 2];
  // Replay the largest ratios; draws are keyed by index so this is exact.
  std::vector<std::size_t> idx(ratio.size());
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::size_t k = std::min(keep_worst, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t i, std::size_t j) {
    return ratio[i] != ratio[j] ? ratio[i] > ratio[j] : i < j;
  });
  for (std::size_t j = 0; j < k; ++j) {
    Stream st(seed, idx[j], kSearchChannel);
    res.worst.push_back(sampler(st));
  }
  Stream st(seed, best, kSearchChannel);
  res.argmax = sampler(st);
  return res;
}

AbsPowerSweep abs_power_sweep(std::size_t n_pairs, int dim, std::uint64_t seed, int jobs) {
  AbsPowerSweep out;
  out.pairs = n_pairs;
  for (int i = 1; i <= 9; ++i) out.qs.push_back(0.1 * i);
  std::vector<CaseSampler> samplers;
  for (double q : out.qs) samplers.push_back(abs_power_sampler(dim, q));
  std::vector<double> ratio(n_pairs);
  std::vector<char> bad(n_pairs);
  parallel_for(n_pairs, jobs, [&](std::size_t i) {
    Stream st(seed, i, kSearchChannel + 1);
    auto c = samplers[i % samplers.size()](st);
    ratio[i] = c.ratio;
    bad[i] = violates(c) ? 1 : 0;
  });
  out.violations = std::size_t(std::count(bad.begin(), bad.end(), 1));
  out.max_ratio = ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
  return out;
}

}  // namespace stablelike
