#include "stablelike/sde.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "stablelike/error.hpp"
#include "stablelike/parallel.hpp"
#include "stablelike/quadrature.hpp"
#include "stablelike/rng.hpp"
#include "stablelike/stats.hpp"

namespace stablelike {

FieldCheck check_field(const CoefficientField& f, int probes, double radius, std::uint64_t seed) {
  Stream rng(seed, 0, 0xF1E1D);
  double sup = 0.0, mins = INFINITY;
  Vec x(f.dim);
  for (int i = 0; i < probes; ++i) {
    for (int j = 0; j < f.dim; ++j) x[j] = radius * (2.0 * rng.uniform() - 1.0);
    Mat s = f.sigma(x);
    sup = std::max(sup, operator_norm(s));
    mins = std::min(mins, min_singular_value(s));
  }
  FieldCheck c;
  c.measured_sup = sup;
  c.measured_min_singular = mins;
  c.margin = std::min(f.sup_norm - sup, mins - f.min_singular);
  c.ok = c.margin >= -1e-12 * std::max(1.0, f.sup_norm);
  return c;
}

CoefficientField constant_field(const Mat& a) {
  CoefficientField f;
  f.name = "constant";
  f.dim = int(a.rows());
  f.sigma = [a](const Vec&) { return a; };
  f.constant = 0.0;
  f.sup_norm = operator_norm(a);
  f.min_singular = min_singular_value(a);
  f.grad_norm = [](const Vec&) { return 0.0; };
  return f;
}

CoefficientField zero_field(int dim) {
  CoefficientField f = constant_field(Mat::Zero(dim, dim));
  f.name = "zero";
  f.regularity = Regularity::bounded;
  return f;
}

CoefficientField sine_diagonal_field(int dim, double amp) {
  if (!(std::abs(amp) < 1.0)) throw InvalidInput("sine_diagonal_field: need |amp| < 1");
  CoefficientField f;
  f.name = "sine_diagonal";
  f.dim = dim;
  f.sigma = [dim, amp](const Vec& x) {
    Mat s = Mat::Identity(dim, dim);
    s(0, 0) = 1.0 + amp * std::sin(x[0]);
    return s;
  };
  f.constant = std::abs(amp);
  f.sup_norm = 1.0 + std::abs(amp);
  f.min_singular = 1.0 - std::abs(amp);
  f.grad_norm = [amp](const Vec& x) { return std::abs(amp * std::cos(x[0])); };
  return f;
}

CoefficientField hoelder_field(int dim, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("hoelder_field: gamma must lie in (0, 1]");
  CoefficientField f;
  f.name = "hoelder";
  f.dim = dim;
  f.regularity = Regularity::hoelder;
  f.exponent = gamma;
  f.constant = 1.0;
  f.sigma = [dim, gamma](const Vec& x) {
    return Mat((1.0 + std::min(std::pow(x.norm(), gamma), 1.0)) * Mat::Identity(dim, dim));
  };
  f.sup_norm = 2.0;
  f.min_singular = 1.0;
  f.grad_norm = [dim, gamma](const Vec& x) {
    double r = x.norm();
    return r < 1.0 ? gamma * std::pow(r, gamma - 1.0) * std::sqrt(double(dim)) : 0.0;
  };
  return f;
}

CoefficientField step_field(int dim, double lo, double hi) {
  CoefficientField f;
  f.name = "step";
  f.dim = dim;
  f.regularity = Regularity::bounded;
  f.sigma = [dim, lo, hi](const Vec& x) { return Mat((x[0] > 0.0 ? hi : lo) * Mat::Identity(dim, dim)); };
  f.sup_norm = std::max(std::abs(lo), std::abs(hi));
  f.min_singular = std::min(std::abs(lo), std::abs(hi));
  return f;
}

namespace {

// Tabulated Gaussian mollification of g(s) = min(|s|^gamma, 1) and its derivative.
struct MollifiedProfile {
  double lo, hi, h;
  std::vector<double> v, dv;

  MollifiedProfile(double gamma, double eps) {
    lo = -(1.0 + 10.0 * eps);
    hi = -lo;
    std::size_t n = std::size_t(std::ceil((hi - lo) / (eps / 16.0))) + 1;
    n = std::min<std::size_t>(std::max<std::size_t>(n, 2001), 200001);
    h = (hi - lo) / double(n - 1);
    v.resize(n);
    dv.resize(n);
    const double c = 1.0 / std::sqrt(2.0 * M_PI);
    QuadOptions opt{1e-12, 1e-10, 400};
    for (std::size_t i = 0; i < n; ++i) {
      double s = lo + h * double(i);
      // Integrate over t = s - eps z with Gaussian weight in z.
      auto w = [&](double t) {
        double z = (s - t) / eps;
        return c * std::exp(-0.5 * z * z) / eps;
      };
      std::vector<double> br{-1.0, 0.0, 1.0};
      double a = s - 9.0 * eps, b = s + 9.0 * eps;
      std::vector<double> inside;
      for (double x : br)
        if (x > a && x < b) inside.push_back(x);
      auto gv = integrate([&](double t) { return std::min(std::pow(std::abs(t), gamma), 1.0) * w(t); }, a, b, opt,
                          inside);
      auto gd = integrate(
          [&](double t) {
            double at = std::abs(t);
            if (at >= 1.0 || at == 0.0) return 0.0;
            return (t > 0 ? 1.0 : -1.0) * gamma * std::pow(at, gamma - 1.0) * w(t);
          },
          a, b, opt, inside);
      v[i] = gv.value;
      dv[i] = gd.value;
    }
  }

  // Cubic Hermite on the table; outside it the profile is 1.
  std::pair<double, double> operator()(double s) const {
    if (s <= lo || s >= hi) return {1.0, 0.0};
    double u = (s - lo) / h;
    std::size_t i = std::min<std::size_t>(std::size_t(u), v.size() - 2);
    double t = u - double(i);
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t), h01 = t * t * (3 - 2 * t),
           h11 = t * t * (t - 1);
    double val = h00 * v[i] + h10 * h * dv[i] + h01 * v[i + 1] + h11 * h * dv[i + 1];
    double d00 = 6 * t * (t - 1), d10 = (1 - t) * (1 - 3 * t), d11 = t * (3 * t - 2);
    double der = (d00 * (v[i] - v[i + 1])) / h + d10 * dv[i] + d11 * dv[i + 1];
    return {val, der};
  }
};

}  // namespace

CoefficientField sobolev_sample_field(int dim, double gamma, double mollification, double p) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("sobolev_sample_field: gamma must lie in (0, 1)");
  if (!(mollification > 0.0)) throw InvalidInput("sobolev_sample_field: mollification scale must be positive");
  if (!(p >= 1.0)) throw InvalidInput("sobolev_sample_field: p must be >= 1");
  auto prof = std::make_shared<MollifiedProfile>(gamma, mollification);
  CoefficientField f;
  f.name = "sobolev_sample";
  f.dim = dim;
  f.regularity = Regularity::sobolev_sample;
  f.exponent = gamma;
  f.sigma = [dim, prof](const Vec& x) {
    return Mat((1.0 + 0.5 * (*prof)(x[0]).first) * Mat::Identity(dim, dim));
  };
  f.grad_norm = [dim, prof](const Vec& x) { return 0.5 * std::abs((*prof)(x[0]).second) * std::sqrt(double(dim)); };
  f.sup_norm = 1.5;
  f.min_singular = 1.0;
  // W^{1,p} norm of the scalar profile on [-2, 2] by trapezoid on a fine grid.
  const int n = 40001;
  double sv = 0.0, sd = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = -2.0 + 4.0 * i / (n - 1);
    double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    auto [val, der] = (*prof)(s);
    sv += w * std::pow(std::abs(1.0 + 0.5 * val), p);
    sd += w * std::pow(0.5 * std::abs(der), p);
  }
  double ds = 4.0 / (n - 1);
  f.sobolev_norm = std::pow(sv * ds, 1.0 / p) + std::pow(sd * ds, 1.0 / p);
  f.sobolev_p = p;
  return f;
}

namespace {

void check_x0(const PathEnsemble& d, const Vec& x0, const char* who) {
  if (x0.size() != d.dim) throw InvalidInput(std::string(who) + ": x0 dimension does not match the driver");
}

// One Euler path on the coarsened grid; emit(k, X) is called at every coarse
// grid index including 0. When jumps_out is set the applied jumps are logged.
template <class Emit>
void euler_path(const CoefficientField& field, const PathEnsemble& drv, std::size_t p, const Vec& x0,
                std::size_t stride, Emit&& emit, std::vector<double>* cont_out = nullptr,
                std::vector<double>* jt = nullptr, std::vector<std::uint32_t>* js = nullptr,
                std::vector<double>* jv = nullptr) {
  const int d = drv.dim;
  const std::size_t K = drv.steps() / stride;
  Vec X = x0, c(d), inc(d), pre(d);
  std::size_t j = drv.jump_offsets.empty() ? 0 : drv.jump_offsets[p];
  const std::size_t jend = drv.jump_offsets.empty() ? 0 : drv.jump_offsets[p + 1];
  emit(std::size_t(0), X);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t s0 = k * stride, s1 = s0 + stride;
    c = Eigen::Map<const Vec>(drv.cont_inc(p, s0), d);
    for (std::size_t s = s0 + 1; s < s1; ++s) c += Eigen::Map<const Vec>(drv.cont_inc(p, s), d);
    inc = field.sigma(X) * c;
    if (cont_out)
      for (int i = 0; i < d; ++i) (*cont_out)[(p * K + k) * d + i] = inc[i];
    while (j < jend && drv.jump_steps[j] < s1) {
      pre = X + inc;
      Vec jump = field.sigma(pre) * Eigen::Map<const Vec>(&drv.jump_values[j * d], d);
      inc += jump;
      if (jt) {
        jt->push_back(drv.jump_times[j]);
        js->push_back(std::uint32_t(k));
        for (int i = 0; i < d; ++i) jv->push_back(jump[i]);
      }
      ++j;
    }
    X += inc;
    if (!X.allFinite()) throw DivergenceError("euler: non-finite state on path " + std::to_string(p), p);
    emit(k + 1, X);
  }
}

void assemble(PathEnsemble& e, std::vector<std::vector<double>>& jt, std::vector<std::vector<std::uint32_t>>& js,
              std::vector<std::vector<double>>& jv) {
  e.jump_offsets.assign(e.n_paths + 1, 0);
  for (std::size_t p = 0; p < e.n_paths; ++p) e.jump_offsets[p + 1] = e.jump_offsets[p] + jt[p].size();
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    e.jump_times.insert(e.jump_times.end(), jt[p].begin(), jt[p].end());
    e.jump_steps.insert(e.jump_steps.end(), js[p].begin(), js[p].end());
    e.jump_values.insert(e.jump_values.end(), jv[p].begin(), jv[p].end());
  }
}

}  // namespace

PathEnsemble euler_solve(const CoefficientField& field, const PathEnsemble& driver, const Vec& x0, std::size_t stride,
                         int jobs) {
  check_x0(driver, x0, "euler_solve");
  if (field.dim != driver.dim) throw InvalidInput("euler_solve: field and driver dimensions differ");
  if (stride == 0 || driver.steps() % stride != 0)
    throw InvalidInput("euler_solve: stride must divide the number of driver steps");
  PathEnsemble e;
  e.dim = driver.dim;
  e.n_paths = driver.n_paths;
  for (std::size_t k = 0; k < driver.grid.size(); k += stride) e.grid.push_back(driver.grid[k]);
  const std::size_t G = e.grid.size(), K = G - 1;
  e.states.resize(e.n_paths * G * e.dim);
  e.cont.resize(e.n_paths * K * e.dim);
  e.seed = driver.seed;
  e.channel = driver.channel;
  e.delta = driver.delta;
  e.truncation_l2 = driver.truncation_l2;
  e.error_target_met = driver.error_target_met;
  e.method = "euler";
  e.description = "euler field=" + field.name + " stride=" + std::to_string(stride) + " on " + driver.description;
  std::vector<std::vector<double>> jt(e.n_paths), jv(e.n_paths);
  std::vector<std::vector<std::uint32_t>> js(e.n_paths);
  parallel_for(e.n_paths, jobs, [&](std::size_t p) {
    euler_path(
        field, driver, p, x0, stride,
        [&](std::size_t k, const Vec& X) {
          for (int i = 0; i < e.dim; ++i) e.state(p, k)[i] = X[i];
        },
        &e.cont, &jt[p], &js[p], &jv[p]);
  });
  assemble(e, jt, js, jv);
  return e;
}

PathEnsemble euler_solve_two_driver(const CoefficientField& field, const CoefficientField& field_bar,
                                    const PathEnsemble& L, const PathEnsemble& Lb, const Vec& x0, int jobs) {
  check_x0(L, x0, "euler_solve_two_driver");
  if (L.dim != Lb.dim || field.dim != L.dim || field_bar.dim != L.dim)
    throw InvalidInput("euler_solve_two_driver: dimension mismatch");
  if (L.n_paths != Lb.n_paths || L.grid != Lb.grid)
    throw InvalidInput("euler_solve_two_driver: drivers must share the grid and path count");
  if (L.seed == Lb.seed && L.channel == Lb.channel)
    throw InvalidConfiguration("euler_solve_two_driver: drivers share an RNG stream (same seed and channel)");
  const int d = L.dim;
  const std::size_t K = L.steps(), G = K + 1;
  PathEnsemble e;
  e.dim = d;
  e.n_paths = L.n_paths;
  e.grid = L.grid;
  e.states.resize(e.n_paths * G * d);
  e.cont.resize(e.n_paths * K * d);
  e.seed = L.seed;
  e.channel = L.channel;
  e.method = "euler_two_driver";
  e.description = "euler two-driver field=" + field.name + " field_bar=" + field_bar.name;
  std::vector<std::vector<double>> jt(e.n_paths), jv(e.n_paths);
  std::vector<std::vector<std::uint32_t>> js(e.n_paths);
  auto jumps_of = [](const PathEnsemble& D, std::size_t p) {
    return D.jump_offsets.empty() ? std::pair<std::size_t, std::size_t>{0, 0}
                                  : std::pair<std::size_t, std::size_t>{D.jump_offsets[p], D.jump_offsets[p + 1]};
  };
  parallel_for(e.n_paths, jobs, [&](std::size_t p) {
    Vec X = x0, inc(d), pre(d), jump(d);
    auto [a, aend] = jumps_of(L, p);
    auto [b, bend] = jumps_of(Lb, p);
    for (int i = 0; i < d; ++i) e.state(p, 0)[i] = X[i];
    for (std::size_t k = 0; k < K; ++k) {
      inc = field.sigma(X) * Eigen::Map<const Vec>(L.cont_inc(p, k), d);
      inc += field_bar.sigma(X) * Eigen::Map<const Vec>(Lb.cont_inc(p, k), d);
      for (int i = 0; i < d; ++i) e.cont[(p * K + k) * d + i] = inc[i];
      for (;;) {
        bool ha = a < aend && L.jump_steps[a] == k, hb = b < bend && Lb.jump_steps[b] == k;
        if (!ha && !hb) break;
        bool take_a = ha && (!hb || L.jump_times[a] <= Lb.jump_times[b]);
        pre = X + inc;
        if (take_a) {
          jump = field.sigma(pre) * Eigen::Map<const Vec>(&L.jump_values[a * d], d);
          jt[p].push_back(L.jump_times[a++]);
        } else {
          jump = field_bar.sigma(pre) * Eigen::Map<const Vec>(&Lb.jump_values[b * d], d);
          jt[p].push_back(Lb.jump_times[b++]);
        }
        inc += jump;
        js[p].push_back(std::uint32_t(k));
        for (int i = 0; i < d; ++i) jv[p].push_back(jump[i]);
      }
      X += inc;
      if (!X.allFinite()) throw DivergenceError("euler: non-finite state on path " + std::to_string(p), p);
      for (int i = 0; i < d; ++i) e.state(p, k + 1)[i] = X[i];
    }
  });
  assemble(e, jt, js, jv);
  return e;
}

std::vector<double> discrete_maximal_diagnostic(const std::function<double(const Vec&)>& g,
                                                const std::vector<Vec>& points, int K) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) {
    const int d = int(x.size());
    const int m = d == 1 ? 32 : d == 2 ? 16 : 8;
    double best = 0.0;
    Vec y(d);
    std::vector<int> idx(d);
    for (int k = 0; k <= K; ++k) {
      const double r = std::ldexp(1.0, -k), h = 2.0 * r / m;
      double sum = 0.0;
      std::size_t cnt = 0;
      std::fill(idx.begin(), idx.end(), 0);
      for (;;) {
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) {
          double u = -r + (idx[i] + 0.5) * h;
          y[i] = x[i] + u;
          n2 += u * u;
        }
        if (n2 <= r * r) {
          sum += g(y);
          ++cnt;
        }
        int i = 0;
        while (i < d && ++idx[i] == m) idx[i++] = 0;
        if (i == d) break;
      }
      if (cnt) best = std::max(best, sum / double(cnt));
    }
    out.push_back(best);
  }
  return out;
}

void check_coupling_exponent(double alpha, double q) {
  if (alpha < 1.0) {
    if (!(q > alpha && q < 1.0))
      throw InvalidInput("coupling exponent q must lie in (alpha, 1) when alpha < 1");
  } else if (!(q > alpha && q < 2.0)) {
    throw InvalidInput("coupling exponent q must lie in (alpha, 2) when alpha >= 1");
  }
}

namespace {

std::size_t lcm(std::size_t a, std::size_t b) { return a / std::gcd(a, b) * b; }

// States of an Euler solution at every `every`-th driver index, as [p][k][i].
std::vector<double> states_at(const CoefficientField& field, const PathEnsemble& drv, const Vec& x0,
                              std::size_t stride, std::size_t every, int jobs) {
  const int d = drv.dim;
  const std::size_t G = drv.steps() / every + 1, skip = every / stride;
  std::vector<double> out(drv.n_paths * G * d);
  parallel_for(drv.n_paths, jobs, [&](std::size_t p) {
    euler_path(field, drv, p, x0, stride, [&](std::size_t k, const Vec& X) {
      if (k % skip) return;
      for (int i = 0; i < d; ++i) out[(p * G + k / skip) * d + i] = X[i];
    });
  });
  return out;
}

double moment_q(const double* a, const double* b, int d, double q) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::pow(std::sqrt(s), q);
}

}  // namespace

CouplingReport coupled_uniqueness_experiment(const CoefficientField& field, const DriverSpec& spec, double q,
                                             const CouplingSetup& setup) {
  check_coupling_exponent(spec.measure.alpha(), q);
  const int d = spec.measure.dim();
  if (setup.x0.size() != d) throw InvalidInput("coupled_uniqueness_experiment: x0 dimension mismatch");
  const Vec y0 = setup.y0.size() ? setup.y0 : setup.x0;
  const std::size_t every = lcm(setup.stride_x, setup.stride_y);
  if (setup.fine_steps % every != 0)
    throw InvalidInput("coupled_uniqueness_experiment: strides must divide the driver step count");
  auto grid = uniform_grid(setup.horizon, setup.fine_steps);
  auto drv = sample_driver(spec, grid, setup.n_pairs, setup.seed, setup.jobs);
  auto X = states_at(field, drv, setup.x0, setup.stride_x, every, setup.jobs);
  auto Y = states_at(field, drv, y0, setup.stride_y, every, setup.jobs);
  const std::size_t G = setup.fine_steps / every + 1, N = setup.n_pairs;
  CouplingReport r;
  r.q = q;
  r.step_x = setup.horizon * double(setup.stride_x) / double(setup.fine_steps);
  r.step_y = setup.horizon * double(setup.stride_y) / double(setup.fine_steps);
  r.exact_zero = X == Y;
  std::vector<double> z(N);
  for (std::size_t k = 0; k < G; ++k) {
    r.times.push_back(grid[k * every]);
    for (std::size_t p = 0; p < N; ++p) z[p] = moment_q(&X[(p * G + k) * d], &Y[(p * G + k) * d], d, q);
    r.moment.push_back(mean(z));
    r.moment_stderr.push_back(
        bootstrap_stderr(z, setup.bootstrap_resamples, setup.seed ^ (0x5EEDull << 32) ^ std::uint64_t(k)));
  }
  if (field.grad_norm) {
    // Telemetry on a subsample of pairs: the maximal function is costly.
    const std::size_t M = std::min<std::size_t>(N, 200);
    std::vector<std::vector<double>> ell(M, std::vector<double>(G, 0.0));
    parallel_for(M, setup.jobs, [&](std::size_t p) {
      for (std::size_t k = 0; k + 1 < G; ++k) {
        Vec xs = Eigen::Map<const Vec>(&X[(p * G + k) * d], d), ys = Eigen::Map<const Vec>(&Y[(p * G + k) * d], d);
        auto mx = discrete_maximal_diagnostic(field.grad_norm, {xs, ys}, setup.maximal_levels);
        double dt = r.times[k + 1] - r.times[k];
        ell[p][k + 1] = ell[p][k] + std::pow(mx[0] + mx[1], q) * dt;
      }
    });
    for (std::size_t k = 0; k < G; ++k) {
      double s = 0.0, mx = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        s += ell[p][k];
        mx = std::max(mx, ell[p][k]);
        if (k && ell[p][k] < ell[p][k - 1]) r.ell_monotone = false;
      }
      r.ell_mean.push_back(s / double(M));
      r.ell_max.push_back(mx);
    }
  }
  return r;
}

PerturbationStudy perturbation_study(const CoefficientField& field, const DriverSpec& spec, double q,
                                     const std::vector<double>& eps, CouplingSetup setup) {
  check_coupling_exponent(spec.measure.alpha(), q);
  const int d = spec.measure.dim();
  if (setup.x0.size() != d) throw InvalidInput("perturbation_study: x0 dimension mismatch");
  auto grid = uniform_grid(setup.horizon, setup.fine_steps);
  auto drv = sample_driver(spec, grid, setup.n_pairs, setup.seed, setup.jobs);
  const std::size_t every = setup.fine_steps;
  auto X = states_at(field, drv, setup.x0, setup.stride_x, every, setup.jobs);
  PerturbationStudy out;
  out.eps = eps;
  std::vector<double> z(setup.n_pairs);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    Vec y0 = setup.x0 + eps[i] * Vec::Ones(d) / std::sqrt(double(d));
    auto Y = states_at(field, drv, y0, setup.stride_x, every, setup.jobs);
    for (std::size_t p = 0; p < setup.n_pairs; ++p) z[p] = moment_q(&X[(p * 2 + 1) * d], &Y[(p * 2 + 1) * d], d, q);
    double m = mean(z);
    double se = bootstrap_stderr(z, setup.bootstrap_resamples, setup.seed + 17 * i);
    out.moment.push_back(m);
    out.ratio.push_back(m / std::pow(eps[i], q));
    out.stderr_ratio.push_back(se / std::pow(eps[i], q));
  }
  auto [lo, hi] = std::minmax_element(out.ratio.begin(), out.ratio.end());
  out.spread = *hi / *lo;
  out.fitted_rate = std::log(*hi) / setup.horizon;
  return out;
}

StepLadder step_ladder(const CoefficientField& field, const DriverSpec& spec, double q, int k_min, int k_max,
                       CouplingSetup setup) {
  check_coupling_exponent(spec.measure.alpha(), q);
  if (k_min < 0 || k_max < k_min || k_max > 20) throw InvalidInput("step_ladder: need 0 <= k_min <= k_max <= 20");
  const int d = spec.measure.dim();
  if (setup.x0.size() != d) throw InvalidInput("step_ladder: x0 dimension mismatch");
  const double per_unit = std::ldexp(1.0, k_max + 1);
  const double steps_real = setup.horizon * per_unit;
  if (std::abs(steps_real - std::round(steps_real)) > 1e-9)
    throw InvalidInput("step_ladder: horizon must be a multiple of the finest step");
  setup.fine_steps = std::size_t(std::llround(steps_real));
  auto grid = uniform_grid(setup.horizon, setup.fine_steps);
  auto drv = sample_driver(spec, grid, setup.n_pairs, setup.seed, setup.jobs);
  // Final states for each stride 2^j, j = 0 .. k_max + 1 - k_min.
  std::vector<std::vector<double>> fin;
  for (int j = 0; j <= k_max + 1 - k_min; ++j)
    fin.push_back(states_at(field, drv, setup.x0, std::size_t(1) << j, setup.fine_steps, setup.jobs));
  StepLadder out;
  std::vector<double> z(setup.n_pairs);
  for (int k = k_min; k <= k_max; ++k) {
    int j = k_max + 1 - k;  // stride of step 2^{-k}
    const auto &A = fin[j], &B = fin[j - 1];
    for (std::size_t p = 0; p < setup.n_pairs; ++p) z[p] = moment_q(&A[(p * 2 + 1) * d], &B[(p * 2 + 1) * d], d, q);
    out.h.push_back(std::ldexp(1.0, -k));
    out.moment.push_back(mean(z));
    out.moment_stderr.push_back(bootstrap_stderr(z, setup.bootstrap_resamples, setup.seed + 31 * k));
  }
  out.monotone = true;
  for (std::size_t i = 1; i < out.moment.size(); ++i)
    if (!(out.moment[i] < out.moment[i - 1])) out.monotone = false;
  return out;
}

}  // namespace stablelike
