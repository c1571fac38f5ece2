#include "stablelike/pde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "stablelike/error.hpp"
#include "stablelike/parallel.hpp"
#include "stablelike/quadrature.hpp"
#include "stablelike/stats.hpp"
#include "stablelike/symbol.hpp"

namespace stablelike {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// In-place unnormalized DFT of a d-dimensional n^d array.
void dft(std::vector<cplx>& a, int d, int n, int sign) {
  std::vector<int> dims(d, n);
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(plan_mutex());
    plan = fftw_plan_dft(d, dims.data(), p, p, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lk(plan_mutex());
  fftw_destroy_plan(plan);
}

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

cplx cexpm1(cplx w) {
  double a = w.real(), b = w.imag(), sb = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * sb * sb, std::exp(a) * std::sin(b)};
}

// int_0^h e^{-c s} ds
cplx exp_integral(cplx c, double h) {
  if (c == cplx(0.0)) return h;
  return -cexpm1(-c * h) / c;
}

}  // namespace

GridField::GridField(int dim, int n, double period) : dim_(dim), n_(n), period_(period) {
  if (dim < 1 || dim > 3) throw InvalidInput("GridField: dimension must be 1, 2 or 3");
  if (!power_of_two(n)) throw InvalidInput("GridField: resolution must be a power of two");
  if (!(period > 0.0)) throw InvalidInput("GridField: period must be positive");
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= std::size_t(n);
  values_.assign(total, 0.0);
}

GridField GridField::sample(int dim, int n, double period, const std::function<double(const Vec&)>& f) {
  GridField g(dim, n, period);
  for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] = f(g.point(i));
  return g;
}

GridField GridField::from_spectrum(int dim, int n, double period, const std::vector<cplx>& spec) {
  GridField g(dim, n, period);
  if (spec.size() != g.size()) throw InvalidInput("GridField::from_spectrum: size mismatch");
  std::vector<cplx> a = spec;
  dft(a, dim, n, FFTW_BACKWARD);
  const double inv = 1.0 / double(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] = a[i].real() * inv;
  return g;
}

double GridField::cell_volume() const { return std::pow(period_ / n_, dim_); }

std::vector<double>& GridField::mutable_values() {
  spec_valid_ = false;
  return values_;
}

Vec GridField::point(std::size_t i) const {
  Vec x(dim_);
  for (int j = dim_ - 1; j >= 0; --j) {
    x[j] = period_ * double(i % n_) / n_;
    i /= n_;
  }
  return x;
}

Vec GridField::wavevector(std::size_t i) const {
  Vec k(dim_);
  for (int j = dim_ - 1; j >= 0; --j) {
    int m = int(i % n_);
    k[j] = 2.0 * std::numbers::pi * (m < n_ / 2 ? m : m - n_) / period_;
    i /= n_;
  }
  return k;
}

const std::vector<cplx>& GridField::spectrum() const {
  if (!spec_valid_) {
    spec_.assign(values_.begin(), values_.end());
    dft(spec_, dim_, n_, FFTW_FORWARD);
    spec_valid_ = true;
  }
  return spec_;
}

double lp_norm(const GridField& f, double p) {
  if (std::isinf(p)) return max_abs(f);
  double s = 0.0;
  for (double v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.cell_volume(), 1.0 / p);
}

double spectral_l2_norm(const GridField& f) {
  double s = 0.0;
  for (const auto& c : f.spectrum()) s += std::norm(c);
  return std::sqrt(s / double(f.size()) * f.cell_volume());
}

double max_abs(const GridField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double roundtrip_error(const GridField& f) {
  auto g = GridField::from_spectrum(f.dim(), f.n(), f.period(), f.spectrum());
  double scale = std::max(max_abs(f), 1e-300), err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(g.values()[i] - f.values()[i]));
  return err / scale;
}

GridField apply_multiplier(const GridField& f, const std::function<cplx(const Vec&)>& m) {
  std::vector<cplx> s = f.spectrum();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m(f.wavevector(i));
  return GridField::from_spectrum(f.dim(), f.n(), f.period(), s);
}

GridField frac_laplacian(const GridField& f, double alpha) {
  return apply_multiplier(f, [alpha](const Vec& k) { return cplx(-std::pow(k.norm(), alpha)); });
}

double fractional_l2(const GridField& f, double beta) {
  const auto& s = f.spectrum();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double kn = f.wavevector(i).norm();
    if (kn > 0.0) acc += std::pow(kn, 2.0 * beta) * std::norm(s[i]);
  }
  return std::sqrt(acc / double(f.size()) * f.cell_volume());
}

double gradient_l2(const GridField& f) {
  double acc = 0.0;
  for (int j = 0; j < f.dim(); ++j) {
    auto g = apply_multiplier(f, [j](const Vec& k) { return cplx(0.0, k[j]); });
    for (double v : g.values()) acc += v * v;
  }
  return std::sqrt(acc * f.cell_volume());
}

GridSymbol grid_symbol(const std::string& description, int dim, int n, double period,
                       const std::function<cplx(const Vec&)>& psi) {
  GridField probe(dim, n, period);
  GridSymbol s{description, dim, n, period, {}};
  s.values.resize(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) s.values[i] = psi(probe.wavevector(i));
  return s;
}

GridSymbol grid_symbol(const StableMeasure& nu, const Mat& sigma, int n, double period) {
  std::string desc = "stable alpha=" + std::to_string(nu.alpha()) + " dim=" + std::to_string(nu.dim());
  return grid_symbol(desc, nu.dim(), n, period, [&](const Vec& xi) {
    if (xi.norm() == 0.0) return cplx(0.0);
    return stable_symbol(nu, sigma, xi).value;
  });
}

void check_symbol(const GridSymbol& s) {
  for (const auto& v : s.values)
    if (!(v.real() >= -1e-12 * std::max(1.0, std::abs(v))))
      throw InvalidSymbol("symbol has negative real part " + std::to_string(v.real()) + " at a grid mode");
}

PiecewiseField PiecewiseField::constant(const GridField& f, double horizon, std::size_t steps) {
  PiecewiseField p;
  p.times = uniform_grid(horizon, steps);
  p.values.assign(steps, f);
  return p;
}

PiecewiseField PiecewiseField::sample(int dim, int n, double period, const std::vector<double>& times,
                                      const std::function<double(double, const Vec&)>& f) {
  PiecewiseField p;
  p.times = times;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    p.values.push_back(GridField::sample(dim, n, period, [&](const Vec& x) { return f(times[k], x); }));
  return p;
}

std::vector<cplx> ResolventSolution::spectrum_at(double t) const {
  if (t < times.front() || t > times.back()) throw InvalidInput("ResolventSolution: time outside the grid");
  std::size_t k = std::size_t(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  k = k == 0 ? 0 : k - 1;
  if (k >= f_hat.size()) k = f_hat.size() - 1;
  double s = t - times[k];
  std::vector<cplx> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = std::exp(-z[i] * s) * u_hat[k][i] + exp_integral(z[i], s) * f_hat[k][i];
  return out;
}

GridField ResolventSolution::at(double t) const { return GridField::from_spectrum(dim, n, period, spectrum_at(t)); }

ResolventSolution spectral_resolvent(const GridSymbol& psi, const PiecewiseField& f, double lambda) {
  if (f.values.empty() || f.times.size() != f.values.size() + 1)
    throw InvalidInput("spectral_resolvent: need K fields on K + 1 times");
  if (!(lambda >= 0.0)) throw InvalidInput("spectral_resolvent: lambda must be >= 0");
  const auto& g0 = f.values[0];
  if (psi.dim != g0.dim() || psi.n != g0.n() || psi.period != g0.period())
    throw InvalidInput("spectral_resolvent: symbol and field grids differ");
  check_symbol(psi);
  ResolventSolution sol;
  sol.times = f.times;
  sol.lambda = lambda;
  sol.symbol = psi.description;
  sol.dim = g0.dim();
  sol.n = g0.n();
  sol.period = g0.period();
  const std::size_t M = psi.values.size();
  sol.z.resize(M);
  for (std::size_t i = 0; i < M; ++i) sol.z[i] = lambda + psi.values[i];
  sol.u_hat.push_back(std::vector<cplx>(M, 0.0));
  sol.u.push_back(GridField(sol.dim, sol.n, sol.period));
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    sol.f_hat.push_back(f.values[k].spectrum());
    double h = f.times[k + 1] - f.times[k];
    std::vector<cplx> next(M);
    for (std::size_t i = 0; i < M; ++i)
      next[i] = std::exp(-sol.z[i] * h) * sol.u_hat[k][i] + exp_integral(sol.z[i], h) * sol.f_hat[k][i];
    sol.u_hat.push_back(next);
    sol.u.push_back(GridField::from_spectrum(sol.dim, sol.n, sol.period, next));
  }
  return sol;
}

double weak_residual(const ResolventSolution& sol, int nodes) {
  auto [x, w] = gauss_legendre(nodes);
  const std::size_t M = sol.z.size();
  std::vector<cplx> integral(M, 0.0);
  const double norm = GridField(sol.dim, sol.n, sol.period).cell_volume() / double(M);
  double worst = 0.0;
  for (std::size_t k = 0; k < sol.f_hat.size(); ++k) {
    double a = sol.times[k], b = sol.times[k + 1];
    for (std::size_t q = 0; q < x.size(); ++q) {
      double s = 0.5 * (b - a) * (x[q] + 1.0);
      for (std::size_t i = 0; i < M; ++i) {
        cplx u = std::exp(-sol.z[i] * s) * sol.u_hat[k][i] + exp_integral(sol.z[i], s) * sol.f_hat[k][i];
        integral[i] += 0.5 * (b - a) * w[q] * (-sol.z[i] * u + sol.f_hat[k][i]);
      }
    }
    double r = 0.0;
    for (std::size_t i = 0; i < M; ++i) r += std::norm(sol.u_hat[k + 1][i] - integral[i]);
    worst = std::max(worst, std::sqrt(r * norm));
  }
  return worst;
}

FeynmanKacResult feynman_kac_resolvent(const DriverSpec& spec, const std::function<double(double, const Vec&)>& f,
                                       double lambda, const std::vector<std::pair<double, Vec>>& probes,
                                       std::size_t n_paths, std::size_t steps, std::uint64_t seed, int jobs) {
  if (n_paths < 2) throw InvalidInput("feynman_kac_resolvent: need at least two paths");
  FeynmanKacResult out;
  out.n_paths = n_paths;
  const std::size_t batch = 4096;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double t = probes[i].first;
    const Vec& x = probes[i].second;
    if (!(t > 0.0)) {
      out.t.push_back(t);
      out.x.push_back(x);
      out.value.push_back(0.0);
      out.stderr_.push_back(0.0);
      continue;
    }
    auto grid = uniform_grid(t, steps);
    DriverSpec s = spec;
    s.channel = spec.channel + 1 + std::uint32_t(i);
    std::vector<double> vals;
    vals.reserve(n_paths);
    for (std::size_t b0 = 0; b0 < n_paths; b0 += batch) {
      std::size_t nb = std::min(batch, n_paths - b0);
      auto e = sample_driver(s, grid, nb, seed + 0x9E3779B97F4A7C15ull * (b0 / batch), jobs);
      std::vector<double> v(nb);
      parallel_for(nb, jobs, [&](std::size_t p) {
        Vec x0 = e.state_vec(p, 0);
        double acc = 0.0, prev = f(t, x);
        for (std::size_t k = 0; k < steps; ++k) {
          double r = grid[k + 1];
          double cur = std::exp(-lambda * r) * f(t - r, x + e.state_vec(p, k + 1) - x0);
          acc += 0.5 * (prev + cur) * (grid[k + 1] - grid[k]);
          prev = cur;
        }
        v[p] = acc;
      });
      vals.insert(vals.end(), v.begin(), v.end());
    }
    out.t.push_back(t);
    out.x.push_back(x);
    out.value.push_back(mean(vals));
    out.stderr_.push_back(stderr_of_mean(vals));
  }
  return out;
}

EstimateReport estimate_checks(const ResolventSolution& sol, const PiecewiseField& f, double p, double alpha,
                               int nodes) {
  if (!(p >= 1.0)) throw InvalidInput("estimate_checks: p must be >= 1");
  if (f.values.size() != sol.f_hat.size()) throw InvalidInput("estimate_checks: field does not match the solution");
  EstimateReport rep;
  rep.p = p;
  const double lam = sol.lambda;
  std::vector<double> fp;
  for (const auto& g : f.values) fp.push_back(std::pow(lp_norm(g, p), p));
  for (std::size_t j = 1; j < sol.times.size(); ++j) {
    double t = sol.times[j];
    double lhs = std::pow(lp_norm(sol.u[j], p), p);
    double acc = 0.0;
    for (std::size_t k = 0; k < j; ++k) {
      double a = sol.times[k], b = sol.times[k + 1];
      acc += fp[k] * (lam > 0.0 ? (std::exp(-lam * (t - b)) - std::exp(-lam * (t - a))) / lam : b - a);
    }
    double pref = lam > 0.0 ? -std::expm1(-lam * t) / lam : t;
    double rhs = std::pow(pref, p - 1.0) * acc;
    rep.er10_lhs.push_back(lhs);
    rep.er10_rhs.push_back(rhs);
    if (rhs > 0.0) rep.er10_max_ratio = std::max(rep.er10_max_ratio, lhs / rhs);
  }
  // Maximal regularity in L^p over [0, T].
  auto [x, w] = gauss_legendre(nodes);
  const GridField shape(sol.dim, sol.n, sol.period);
  const std::size_t M = sol.z.size();
  std::vector<double> kal(M);
  for (std::size_t i = 0; i < M; ++i) kal[i] = std::pow(shape.wavevector(i).norm(), alpha);
  double num = 0.0, den = 0.0;
  // Stiffness only matters on modes the solution actually carries.
  double amax = 0.0;
  for (std::size_t k = 0; k < sol.f_hat.size(); ++k)
    for (std::size_t i = 0; i < M; ++i) amax = std::max({amax, std::abs(sol.f_hat[k][i]), std::abs(sol.u_hat[k + 1][i])});
  double zmax = 0.0;
  for (std::size_t k = 0; k < sol.f_hat.size(); ++k)
    for (std::size_t i = 0; i < M; ++i)
      if (std::abs(sol.f_hat[k][i]) > 1e-13 * amax || std::abs(sol.u_hat[k + 1][i]) > 1e-13 * amax)
        zmax = std::max(zmax, std::abs(sol.z[i]));
  for (std::size_t k = 0; k < sol.f_hat.size(); ++k) {
    double a = sol.times[k], b = sol.times[k + 1];
    den += fp[k] * (b - a);
    // Panels short enough that the stiffest mode is resolved by the rule.
    int panels = std::max(1, int(std::ceil(zmax * (b - a) / 2.0)));
    double pw = (b - a) / panels;
    for (int m = 0; m < panels; ++m) {
      double pa = a + m * pw;
      for (std::size_t q = 0; q < x.size(); ++q) {
        double t = pa + 0.5 * pw * (x[q] + 1.0);
        auto s = sol.spectrum_at(std::min(t, b));
        for (std::size_t i = 0; i < M; ++i) s[i] *= -kal[i];
        auto g = GridField::from_spectrum(sol.dim, sol.n, sol.period, s);
        num += 0.5 * pw * w[q] * std::pow(lp_norm(g, p), p);
      }
    }
  }
  rep.maximal_ratio = den > 0.0 ? std::pow(num / den, 1.0 / p) : 0.0;
  // Spectral side.
  double bound = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    if (kal[i] == 0.0) continue;
    double d = sol.z[i].real();
    bound = std::max(bound, d > 0.0 ? kal[i] / d : INFINITY);
  }
  rep.spectral_bound = bound;
  if (p == 2.0) {
    const double norm = shape.cell_volume() / double(M);
    double sn = 0.0, sd = 0.0;
    for (std::size_t k = 0; k < sol.f_hat.size(); ++k) {
      double h = sol.times[k + 1] - sol.times[k];
      for (std::size_t i = 0; i < M; ++i) {
        const cplx fh = sol.f_hat[k][i], u0 = sol.u_hat[k][i], zz = sol.z[i];
        sd += h * std::norm(fh);
        if (kal[i] == 0.0) continue;
        double J;
        if (std::abs(zz) * h < 1e-3) {
          // Series-free fallback: Gauss-Legendre on the exact mode trajectory.
          J = 0.0;
          for (std::size_t q = 0; q < x.size(); ++q) {
            double s = 0.5 * h * (x[q] + 1.0);
            J += 0.5 * h * w[q] * std::norm(std::exp(-zz * s) * u0 + exp_integral(zz, s) * fh);
          }
        } else {
          cplx B = fh / zz, A = u0 - B;
          J = std::norm(B) * h + 2.0 * std::real(std::conj(B) * A * exp_integral(zz, h)) +
              std::norm(A) * exp_integral(2.0 * zz.real(), h).real();
        }
        sn += kal[i] * kal[i] * J;
      }
    }
    rep.maximal_ratio_spectral = sd > 0.0 ? std::sqrt((sn * norm) / (sd * norm)) : 0.0;
  }
  return rep;
}

RefinementLadder resolvent_refinement_ladder(const StableMeasure& nu, const Mat& sigma, double period,
                                             const std::function<double(double, const Vec&)>& f, double horizon,
                                             std::size_t steps, double lambda, double p,
                                             const std::vector<int>& resolutions) {
  RefinementLadder out;
  const int d = nu.dim();
  for (int n : resolutions) {
    auto psi = grid_symbol(nu, sigma, n, period);
    auto fp = PiecewiseField::sample(d, n, period, uniform_grid(horizon, steps), f);
    auto sol = spectral_resolvent(psi, fp, lambda);
    out.n.push_back(n);
    out.ratio.push_back(estimate_checks(sol, fp, p, nu.alpha(), 8).maximal_ratio);
  }
  auto [mn, mx] = std::minmax_element(out.ratio.begin(), out.ratio.end());
  out.spread = *mn > 0.0 ? *mx / *mn : INFINITY;
  if (out.ratio.size() >= 3) out.trend_p_value = mann_kendall(out.ratio).p_two_sided;
  return out;
}

}  // namespace stablelike
