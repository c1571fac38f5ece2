#include "stablelike/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "stablelike/error.hpp"
#include "stablelike/quadrature.hpp"
#include "stablelike/stats.hpp"

namespace stablelike {

const char* to_string(SymbolMethod m) {
  return m == SymbolMethod::closed_form ? "closed_form" : "quadrature";
}

namespace {

constexpr double kMid = 64.0;
const QuadOptions kTight{1e-15, 1e-13, 4000};

struct Radial {
  double value;
  double error;
  bool converged;
};

Radial add(std::initializer_list<QuadResult> parts) {
  Radial r{0.0, 0.0, true};
  for (const auto& p : parts) {
    r.value += p.value;
    r.error += p.error;
    r.converged = r.converged && p.converged;
  }
  return r;
}

Radial radial_cos_quad(double alpha) {
  auto head = integrate_power_singular([](double r) { return one_minus_cos(r); }, 1.0, alpha, 2.0, kTight);
  auto mid = integrate([alpha](double r) { return one_minus_cos(r) * std::pow(r, -1.0 - alpha); }, 1.0,
                       kMid, kTight);
  QuadResult tail;
  tail.value = std::pow(kMid, -alpha) / alpha;
  auto osc = cos_power_tail(0.0, 1.0, kMid, 1.0 + alpha, kTight);
  tail.value -= osc.value;
  tail.error = osc.error;
  return add({head, mid, tail});
}

std::mutex g_cache_mu;
std::map<double, Radial> g_cos_cache;
std::map<std::pair<double, int>, Radial> g_imag_cache;

Radial radial_cos(double alpha) {
  {
    std::lock_guard<std::mutex> g(g_cache_mu);
    auto it = g_cos_cache.find(alpha);
    if (it != g_cos_cache.end()) return it->second;
  }
  Radial r = radial_cos_quad(alpha);
  std::lock_guard<std::mutex> g(g_cache_mu);
  g_cos_cache[alpha] = r;
  return r;
}

// Integral over (0, inf) of (1{rho <= rho_c} rho - sin rho) rho^{-1-alpha}.
Radial radial_imag_quad(double alpha, double rho_c) {
  auto sin_tail = [&](double R) {
    auto t = cos_power_tail(-0.5 * std::numbers::pi, 1.0, R, 1.0 + alpha, kTight);
    t.value = -t.value;
    return t;
  };
  if (rho_c == 0.0) {
    if (alpha >= 1.0)
      throw DivergentIntegral("symbol: uncompensated small jumps diverge for alpha >= 1");
    auto head = integrate_power_singular([](double r) { return -std::sin(r); }, 1.0, alpha, 1.0, kTight);
    auto mid = integrate([alpha](double r) { return -std::sin(r) * std::pow(r, -1.0 - alpha); }, 1.0,
                         kMid, kTight);
    return add({head, mid, sin_tail(kMid)});
  }
  if (std::isinf(rho_c)) {
    if (alpha <= 1.0) throw DivergentIntegral("symbol: full compensation diverges for alpha <= 1");
    auto head = integrate_power_singular([](double r) { return x_minus_sin(r); }, 1.0, alpha, 3.0, kTight);
    auto mid = integrate([alpha](double r) { return x_minus_sin(r) * std::pow(r, -1.0 - alpha); }, 1.0,
                         kMid, kTight);
    auto tail = sin_tail(kMid);
    tail.value += std::pow(kMid, 1.0 - alpha) / (alpha - 1.0);
    return add({head, mid, tail});
  }
  double r0 = std::min(1.0, rho_c);
  auto head = integrate_power_singular([](double r) { return x_minus_sin(r); }, r0, alpha, 3.0, kTight);
  double r_end = kMid * std::max(1.0, rho_c);
  std::vector<double> edges{r0};
  for (double e = 2.0 * r0; e < r_end; e *= 2.0) edges.push_back(e);
  edges.push_back(r_end);
  if (rho_c > r0 && rho_c < r_end) edges.push_back(rho_c);
  std::sort(edges.begin(), edges.end());
  auto h = [alpha, rho_c](double r) {
    double v = (r <= rho_c ? x_minus_sin(r) : -std::sin(r));
    return v * std::pow(r, -1.0 - alpha);
  };
  QuadResult mid;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    auto p = integrate(h, edges[i], edges[i + 1], kTight);
    mid.value += p.value;
    mid.error += p.error;
    mid.converged = mid.converged && p.converged;
  }
  return add({head, mid, sin_tail(r_end)});
}

Radial radial_imag(double alpha, double convention, double s) {
  if (convention == 1.0) return radial_imag_quad(alpha, s);
  int mode = convention < 1.0 ? 0 : 1;
  auto key = std::make_pair(alpha, mode);
  {
    std::lock_guard<std::mutex> g(g_cache_mu);
    auto it = g_imag_cache.find(key);
    if (it != g_imag_cache.end()) return it->second;
  }
  Radial r = radial_imag_quad(alpha, mode == 0 ? 0.0 : INFINITY);
  std::lock_guard<std::mutex> g(g_cache_mu);
  g_imag_cache[key] = r;
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidInput("alpha must lie in (0,2)");
}

}  // namespace

double radial_constant(double alpha) {
  check_alpha(alpha);
  Radial r = radial_cos(alpha);
  if (!r.converged || r.error > 1e-10)
    throw AccuracyError("radial_constant: quadrature budget exceeded", r.value, r.error);
  return r.value;
}

SymbolEvaluation stable_symbol(const StableMeasure& nu, const Mat& sigma, const Vec& xi) {
  const auto& s = nu.spherical();
  if (xi.size() != nu.dim() || sigma.rows() != nu.dim() || sigma.cols() != nu.dim())
    throw InvalidInput("stable_symbol: dimension mismatch");
  if (!s.is_symmetric()) return general_symbol(nu, sigma, xi, nu.alpha());
  SymbolEvaluation e{xi, {0.0, 0.0}, SymbolMethod::closed_form, 0.0};
  if (xi.isZero(0.0)) return e;
  Radial k = radial_cos(nu.alpha());
  double ang = s.abs_power_integral(sigma.transpose() * xi, nu.alpha());
  e.value = {k.value * ang, 0.0};
  e.est_error = k.error * ang + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(e.value.real());
  return e;
}

SymbolEvaluation general_symbol(const StableMeasure& nu, const Mat& sigma, const Vec& xi,
                                double convention, double scale) {
  const int d = nu.dim();
  const double alpha = nu.alpha();
  if (xi.size() != d || sigma.rows() != d || sigma.cols() != d)
    throw InvalidInput("general_symbol: dimension mismatch");
  if (!(convention > 0.0 && convention < 2.0)) throw InvalidInput("general_symbol: convention in (0,2)");
  SymbolEvaluation e{xi, {0.0, 0.0}, SymbolMethod::quadrature, 0.0};
  Vec c = sigma.transpose() * xi;
  if (c.isZero(0.0) || scale == 0.0) return e;
  const auto& sph = nu.spherical();
  Radial k = radial_cos(alpha);
  bool ok = k.converged;

  if (sph.is_isotropic() && d >= 2) {
    // Polar angle phi between c and theta has density proportional to sin^{d-2}.
    double norm_c = std::exp(std::lgamma(0.5 * d) - 0.5 * std::log(std::numbers::pi) -
                             std::lgamma(0.5 * (d - 1)));
    auto ang = integrate(
        [&](double phi) {
          return std::pow(std::abs(std::cos(phi)), alpha) * std::pow(std::sin(phi), d - 2.0) * norm_c;
        },
        0.0, std::numbers::pi, {1e-15, 1e-13, 4000}, {0.5 * std::numbers::pi});
    ok = ok && ang.converged;
    double pre = scale * sph.isotropic_mass() * std::pow(c.norm(), alpha);
    e.value = {pre * k.value * ang.value, 0.0};
    e.est_error = pre * (k.error * ang.value + k.value * ang.error);
  } else {
    std::vector<Atom> atoms = sph.is_isotropic()
                                  ? std::vector<Atom>{{Vec::Ones(1), 0.5 * sph.isotropic_mass()},
                                                      {-Vec::Ones(1), 0.5 * sph.isotropic_mass()}}
                                  : sph.atoms();
    const bool symmetric = sph.is_symmetric();
    double re = 0.0, im = 0.0, err = 0.0;
    for (const auto& a : atoms) {
      double u = c.dot(a.direction);
      double sabs = std::abs(u);
      if (a.weight == 0.0 || sabs == 0.0) continue;
      double w = scale * a.weight * std::pow(sabs, alpha);
      re += w * k.value;
      err += w * k.error;
      if (!symmetric) {
        Radial j = radial_imag(alpha, convention, sabs);
        ok = ok && j.converged;
        im += (u > 0 ? 1.0 : -1.0) * w * j.value;
        err += w * j.error;
      }
    }
    e.value = {re, im};
    e.est_error = err;
  }
  if (!ok) throw AccuracyError("general_symbol: quadrature did not converge", e.value.real(), e.est_error);
  return e;
}

LowerBoundReport lower_bound_check(const StableMeasure& lower, const LevyModel& model, double t,
                                   const Vec& x, const Mat& sigma, const std::vector<Vec>& xi_set) {
  const double alpha = lower.alpha();
  if (model.alpha() != alpha) throw InvalidInput("lower_bound_check: alpha mismatch");
  LowerBoundReport rep;
  rep.radial = radial_constant(alpha);
  rep.min_singular = min_singular_value(sigma);
  rep.nondegeneracy = nondegeneracy_constant(lower.spherical(), alpha);
  rep.worst_margin = INFINITY;
  StableMeasure nu = model.nu_at(t, x);
  for (const auto& xi : xi_set) {
    double lhs = stable_symbol(nu, sigma, xi).value.real();
    double rhs = rep.radial * std::pow(rep.min_singular, alpha) * rep.nondegeneracy *
                 std::pow(xi.norm(), alpha);
    rep.rows.push_back({xi, lhs, rhs, lhs - rhs});
    rep.worst_margin = std::min(rep.worst_margin, lhs - rhs);
  }
  return rep;
}

namespace {
double measure_gap(const SphericalMeasure& a, const SphericalMeasure& b) {
  if (a.is_isotropic() && b.is_isotropic())
    return std::abs(a.isotropic_mass() - b.isotropic_mass()) / a.isotropic_mass();
  if (a.is_isotropic() != b.is_isotropic()) return INFINITY;
  auto weight = [](const SphericalMeasure& s, const Vec& dir) {
    double w = 0.0;
    for (const auto& at : s.atoms())
      if ((at.direction - dir).norm() <= 1e-12) w += at.weight;
    return w;
  };
  double k = 0.0;
  auto scan = [&](const SphericalMeasure& s) {
    for (const auto& at : s.atoms()) {
      double w1 = weight(a, at.direction), w2 = weight(b, at.direction);
      if (w1 == w2) continue;
      k = std::max(k, w1 > 0 ? std::abs(w1 - w2) / w1 : INFINITY);
    }
  };
  scan(a);
  scan(b);
  return k;
}
}  // namespace

ContinuityReport symbol_continuity_check(const StableMeasure& nu1, const StableMeasure& nu2,
                                         const Mat& sigma1, const Mat& sigma2,
                                         const std::vector<Vec>& xi_set, double beta_at_one) {
  if (nu1.alpha() != nu2.alpha()) throw InvalidInput("symbol_continuity_check: alpha mismatch");
  const double alpha = nu1.alpha();
  ContinuityReport r;
  r.k_measure = measure_gap(nu1.spherical(), nu2.spherical());
  r.sigma_gap = operator_norm(sigma1 - sigma2);
  r.exponent = alpha < 1.0 ? alpha : alpha == 1.0 ? beta_at_one : 1.0;
  double worst = 0.0;
  for (const auto& xi : xi_set) {
    double n = xi.norm();
    if (n == 0.0) {
      r.ratios.push_back(0.0);
      continue;
    }
    auto p1 = stable_symbol(nu1, sigma1, xi).value;
    auto p2 = stable_symbol(nu2, sigma2, xi).value;
    double q = std::abs(p1 - p2) / std::pow(n, alpha);
    r.ratios.push_back(q);
    worst = std::max(worst, q);
  }
  double denom = r.k_measure + std::pow(r.sigma_gap, r.exponent);
  r.fitted_constant = denom > 0.0 ? worst / denom : (worst == 0.0 ? 0.0 : INFINITY);
  return r;
}

ExponentFit continuity_exponent(const StableMeasure& nu, const Mat& sigma, const Vec& xi,
                                const std::vector<double>& eps) {
  ExponentFit f{eps, {}, 0.0};
  auto base = stable_symbol(nu, sigma, xi).value;
  const Mat id = Mat::Identity(sigma.rows(), sigma.cols());
  for (double e : eps) f.diffs.push_back(std::abs(stable_symbol(nu, sigma + e * id, xi).value - base));
  f.slope = loglog_fit(f.eps, f.diffs).slope;
  return f;
}

}  // namespace stablelike
