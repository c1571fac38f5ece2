#include "stablelike/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "stablelike/error.hpp"
#include "stablelike/parallel.hpp"
#include "stablelike/quadrature.hpp"
#include "stablelike/stats.hpp"

namespace stablelike {

Conditioning conditioning_one() { return {}; }

Conditioning conditioning_cos(double s, const Vec& xi) {
  Conditioning c;
  c.description = "cos(xi . X_s) at s=" + std::to_string(s);
  c.times = {s};
  c.fn = [xi](const std::vector<Vec>& x) { return std::cos(xi.dot(x[0])); };
  return c;
}

Conditioning conditioning_bump(double s, const Vec& center, double width) {
  Conditioning c;
  c.description = "bump(X_s) at s=" + std::to_string(s);
  c.times = {s};
  c.fn = [center, width](const std::vector<Vec>& x) {
    return std::exp(-(x[0] - center).squaredNorm() / (2.0 * width * width));
  };
  return c;
}

namespace {

std::size_t grid_index(const std::vector<double>& grid, double t, const char* who) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it == grid.end() || std::abs(*it - t) > 1e-12 * std::max(1.0, std::abs(t)))
    throw InvalidInput(std::string(who) + ": time " + std::to_string(t) + " is not on the grid");
  return std::size_t(it - grid.begin());
}

LevyModel scaled_leading(const LevyModel& m, double s) {
  if (s == 1.0) return m;
  LevyModel out = m;
  auto mm = m.m;
  out.m = [mm, s](double t, const Vec& x) { return s * mm(t, x); };
  out.m_min = s * m.m_min;
  out.m_max = s * m.m_max;
  return out;
}

}  // namespace

MartingaleResidualReport martingale_residual(const PathEnsemble& e, const LevyModel& model0, const TestFunction& phi,
                                             double t1, double t2, const Conditioning& G,
                                             const MartingaleOptions& opt) {
  if (!(t1 < t2)) throw InvalidInput("martingale_residual: need t1 < t2");
  if (e.n_paths < 2) throw InvalidInput("martingale_residual: need at least two paths");
  if (model0.dim() != e.dim || phi.dim != e.dim) throw InvalidInput("martingale_residual: dimension mismatch");
  const std::size_t k1 = grid_index(e.grid, t1, "martingale_residual"),
                    k2 = grid_index(e.grid, t2, "martingale_residual");
  std::vector<std::size_t> gk;
  for (double s : G.times) {
    if (s > t1 + 1e-12) throw InvalidInput("martingale_residual: conditioning times must not exceed t1");
    gk.push_back(grid_index(e.grid, s, "martingale_residual"));
  }
  const LevyModel model = scaled_leading(model0, opt.generator_scale);
  const int d = e.dim;
  const std::size_t N = e.n_paths;

  // Generator along the paths on [k1, k2].
  std::unique_ptr<GeneratorTable> table;
  double gen_err = 0.0;
  if (d == 1 && opt.tabulate && opt.time_homogeneous) {
    double lo = INFINITY, hi = -INFINITY;
    // Range over the whole grid so every window shares one table.
    for (std::size_t p = 0; p < N; ++p)
      for (std::size_t k = 0; k < e.grid.size(); ++k) {
        lo = std::min(lo, e.state(p, k)[0]);
        hi = std::max(hi, e.state(p, k)[0]);
      }
    double half = std::max(std::abs(lo), std::abs(hi)) + 1.0;
    try {
      table = std::make_unique<GeneratorTable>(model, phi, 0.0, phi.length_scale, half, opt.table_nodes);
    } catch (const AccuracyError& err) {
      throw AccuracyError(std::string("martingale_residual: generator table: ") + err.what(), err.partial,
                          err.est_error);
    }
    gen_err = table->error_bound();
  }
  std::vector<double> r(N), rt(N), absg(N);
  std::vector<double> errs(N, 0.0);
  const std::size_t K = k2 - k1;
  parallel_for(N, opt.jobs, [&](std::size_t p) {
    std::vector<double> lv(K + 1);
    for (std::size_t k = k1; k <= k2; ++k) {
      Vec x = e.state_vec(p, k);
      if (table) {
        lv[k - k1] = (*table)(x[0]);
      } else {
        OperatorValue v;
        try {
          v = apply_L(model, phi, e.grid[k], x);
        } catch (const AccuracyError& err) {
          throw AccuracyError(std::string("martingale_residual: generator on path ") + std::to_string(p) + ": " +
                                  err.what(),
                              err.partial, err.est_error);
        }
        lv[k - k1] = v.value;
        errs[p] = std::max(errs[p], v.error);
      }
    }
    double trap = 0.0;
    for (std::size_t k = 0; k < K; ++k) trap += 0.5 * (lv[k] + lv[k + 1]) * (e.grid[k1 + k + 1] - e.grid[k1 + k]);
    // Trapezoid on every other node for the Richardson estimate.
    double trap2 = NAN;
    if (K % 2 == 0) {
      trap2 = 0.0;
      for (std::size_t k = 0; k < K; k += 2)
        trap2 += 0.5 * (lv[k] + lv[k + 2]) * (e.grid[k1 + k + 2] - e.grid[k1 + k]);
    }
    double g = 1.0;
    if (G.fn) {
      std::vector<Vec> xs;
      for (auto k : gk) xs.push_back(e.state_vec(p, k));
      g = G.fn(xs);
    }
    double m = phi(e.state_vec(p, k2)) - phi(e.state_vec(p, k1)) - trap;
    r[p] = g * m;
    rt[p] = std::isnan(trap2) ? NAN : g * (trap - trap2) / 3.0;
    absg[p] = std::abs(g);
  });
  MartingaleResidualReport rep;
  rep.test_function = phi.name;
  rep.t1 = t1;
  rep.t2 = t2;
  rep.conditioning = G.description;
  rep.n_paths = N;
  rep.residual = mean(r);
  rep.stderr_ = stderr_of_mean(r);
  if (!table) gen_err = *std::max_element(errs.begin(), errs.end());
  rep.generator_budget = (t2 - t1) * mean(absg) * gen_err;
  rep.time_budget = std::isnan(rt[0]) ? 0.0 : std::abs(mean(rt));
  return rep;
}

OccupationEstimate occupation_estimate(const PathEnsemble& e, const SpaceTimeFn& f, double t1, double t2,
                                       int resamples, std::uint64_t seed) {
  if (!(t1 <= t2)) throw InvalidInput("occupation_estimate: need t1 <= t2");
  const std::size_t k1 = grid_index(e.grid, t1, "occupation_estimate"),
                    k2 = grid_index(e.grid, t2, "occupation_estimate");
  std::vector<double> v(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    double s = 0.0, prev = f(e.grid[k1], e.state_vec(p, k1));
    for (std::size_t k = k1; k < k2; ++k) {
      double cur = f(e.grid[k + 1], e.state_vec(p, k + 1));
      s += 0.5 * (prev + cur) * (e.grid[k + 1] - e.grid[k]);
      prev = cur;
    }
    v[p] = s;
  }
  return {mean(v), e.n_paths > 1 ? bootstrap_stderr(v, resamples, seed) : 0.0};
}

double krylov_p_threshold(const KrylovHypothesis& h) {
  const double a1 = std::min(h.alpha, 1.0);
  double t = std::max(double(h.dim) / h.alpha + 1.0, double(h.dim) / a1);
  if (h.alpha_bar > 0.0) t = std::max(t, double(h.dim) / h.alpha_bar);
  if (h.m > 0.0) t = std::max(t, h.m / std::min(h.gamma_sigma * a1, h.gamma_nu));
  return t;
}

double lp_norm_box(const TestFunction& f, const Vec& lo, const Vec& hi, double p) {
  const int d = f.dim;
  if (lo.size() != d || hi.size() != d) throw InvalidInput("lp_norm_box: box dimension mismatch");
  if (!(p >= 1.0)) throw InvalidInput("lp_norm_box: p must be >= 1");
  QuadOptions opt{0.0, 1e-11, 2000};
  auto g = [&](const Vec& x) { return std::pow(std::abs(f(x)), p); };
  double v;
  if (d == 1) {
    v = integrate([&](double t) { return g(Vec::Constant(1, t)); }, lo[0], hi[0], opt).value;
  } else if (d == 2) {
    v = integrate(
            [&](double a) {
              return integrate(
                         [&](double b) {
                           Vec x(2);
                           x << a, b;
                           return g(x);
                         },
                         lo[1], hi[1], opt)
                  .value;
            },
            lo[0], hi[0], opt)
            .value;
  } else {
    // Composite Gauss-Legendre tensor grid.
    auto [nodes, weights] = gauss_legendre(16);
    const int panels = 8, m = int(nodes.size()) * panels;
    std::vector<std::vector<double>> X(d), W(d);
    for (int i = 0; i < d; ++i)
      for (int q = 0; q < panels; ++q) {
        double a = lo[i] + (hi[i] - lo[i]) * q / panels, b = lo[i] + (hi[i] - lo[i]) * (q + 1) / panels;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          X[i].push_back(0.5 * (a + b) + 0.5 * (b - a) * nodes[k]);
          W[i].push_back(0.5 * (b - a) * weights[k]);
        }
      }
    std::vector<int> idx(d, 0);
    Vec x(d);
    v = 0.0;
    for (;;) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        x[i] = X[i][idx[i]];
        w *= W[i][idx[i]];
      }
      v += w * g(x);
      int i = 0;
      while (i < d && ++idx[i] == m) idx[i++] = 0;
      if (i == d) break;
    }
  }
  return std::pow(v, 1.0 / p);
}

KrylovReport krylov_ratio_sweep(const PathEnsemble& e, const TestFunction& f, const KrylovOptions& opt) {
  if (opt.windows.empty()) throw InvalidInput("krylov_ratio_sweep: need at least one window");
  if (opt.lambdas.empty()) throw InvalidInput("krylov_ratio_sweep: need at least one lambda");
  KrylovReport r;
  r.p = opt.p;
  r.lambdas = opt.lambdas;
  r.windows = opt.windows;
  KrylovHypothesis hyp = opt.hypothesis;
  hyp.dim = e.dim;
  r.p_threshold = krylov_p_threshold(hyp);
  r.in_theory = opt.p > r.p_threshold;
  if (!r.in_theory)
    r.warning = "p = " + std::to_string(opt.p) + " is below the threshold " + std::to_string(r.p_threshold) +
                "; results are out of theory";
  const double a = hyp.alpha, p = opt.p, d = e.dim;
  r.band_lo = 1.0 - (a * (1.0 - 1.0 / p)) / a - 1.0 / p;
  r.band_hi = 1.0 - (d / p) / a - 1.0 / p;
  for (std::size_t i = 0; i < opt.lambdas.size(); ++i) {
    const double lam = opt.lambdas[i];
    auto fl = dilated(f, lam);
    double norm = lp_norm_box(fl, opt.support_lo / lam, opt.support_hi / lam, p);
    r.lp_norm.push_back(norm);
    std::vector<double> rat, se, occ;
    for (std::size_t j = 0; j < opt.windows.size(); ++j) {
      auto [t1, t2] = opt.windows[j];
      auto o = occupation_estimate(e, [&](double, const Vec& x) { return fl(x); }, t1, t2, opt.bootstrap_resamples,
                                   opt.seed + 7919 * i + j);
      double den = norm > 0.0 ? std::pow(t2 - t1, 1.0 / p) * norm : 0.0;
      occ.push_back(o.value);
      rat.push_back(den > 0.0 ? o.value / den : 0.0);
      se.push_back(den > 0.0 ? o.stderr_ / den : 0.0);
    }
    r.ratio.push_back(rat);
    r.ratio_stderr.push_back(se);
    r.occupation.push_back(occ);
  }
  std::vector<double> first;
  for (const auto& row : r.ratio) first.push_back(row[0]);
  auto [mn, mx] = std::minmax_element(first.begin(), first.end());
  r.ratio_spread = *mn > 0.0 ? *mx / *mn : (*mx > 0.0 ? INFINITY : 1.0);
  r.constant_estimate = *mx;
  if (first.size() >= 3 && *mx > 0.0) r.trend_p_value = mann_kendall(first).p_two_sided;
  if (opt.windows.size() >= 2 && r.occupation[0][0] > 0.0) {
    std::vector<double> len, occ;
    for (std::size_t j = 0; j < opt.windows.size(); ++j) {
      len.push_back(opt.windows[j].second - opt.windows[j].first);
      occ.push_back(r.occupation[0][j]);
    }
    r.window_exponent = loglog_fit(len, occ).slope;
  }
  return r;
}

}  // namespace stablelike
