#include "stablelike/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stablelike/error.hpp"
#include "stablelike/parallel.hpp"
#include "stablelike/symbol.hpp"

namespace stablelike {

double symmetric_stable(double alpha, double scale, double t, Stream& s) {
  if (scale == 0.0 || t == 0.0) return 0.0;
  double v = std::numbers::pi * (s.uniform() - 0.5);
  double x;
  if (alpha == 1.0) {
    x = std::tan(v);
  } else {
    double w = s.exponential();
    x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
        std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
  }
  return std::pow(t * scale, 1.0 / alpha) * x;
}

std::vector<double> sample_1d_symmetric_stable(double alpha, double scale, double t, std::size_t n,
                                               Stream& s) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidInput("symmetric stable: alpha in (0,2)");
  if (scale < 0.0 || t < 0.0) throw InvalidInput("symmetric stable: negative scale or horizon");
  std::vector<double> out(n);
  for (auto& x : out) x = symmetric_stable(alpha, scale, t, s);
  return out;
}

double positive_stable(double a, Stream& s) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidInput("positive_stable: index in (0,1)");
  double u = std::numbers::pi * s.uniform();
  double e = s.exponential();
  return std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) * std::pow(std::sin((1.0 - a) * u) / e, (1.0 - a) / a);
}

std::vector<double> uniform_grid(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || steps == 0) throw InvalidInput("uniform_grid: need horizon > 0 and steps > 0");
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = horizon * double(k) / double(steps);
  g.back() = horizon;
  return g;
}

std::vector<double> PathEnsemble::marginal(std::size_t k, int j) const {
  std::vector<double> v(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) v[p] = state(p, k)[j];
  return v;
}

namespace {

struct PairAtom {
  Vec direction;
  double weight;
};

// Groups a symmetric atom list into (theta, -theta) pairs; empty on failure.
std::vector<PairAtom> atom_pairs(const SphericalMeasure& s) {
  const auto& at = s.atoms();
  std::vector<bool> used(at.size(), false);
  std::vector<PairAtom> pairs;
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (used[i] || at[i].weight == 0.0) continue;
    bool found = false;
    for (std::size_t j = i + 1; j < at.size(); ++j) {
      if (used[j]) continue;
      if ((at[j].direction + at[i].direction).norm() <= 1e-12 &&
          std::abs(at[j].weight - at[i].weight) <= 1e-12 * at[i].weight) {
        used[i] = used[j] = true;
        pairs.push_back({at[i].direction, at[i].weight});
        found = true;
        break;
      }
    }
    if (!found) return {};
  }
  return pairs;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2 || grid[0] != 0.0) throw InvalidInput("time grid must start at 0 and have >= 2 points");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw InvalidInput("time grid must be strictly increasing");
}

Vec sample_direction(const SphericalMeasure& s, const std::vector<double>& cum, Stream& rng) {
  const int d = s.dim();
  if (s.is_isotropic()) {
    if (d == 1) return Vec::Constant(1, rng.uniform() < 0.5 ? -1.0 : 1.0);
    Vec v(d);
    do {
      for (int j = 0; j < d; ++j) v[j] = rng.normal();
    } while (v.norm() == 0.0);
    return v / v.norm();
  }
  double u = rng.uniform() * cum.back();
  std::size_t i = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
  i = std::min(i, cum.size() - 1);
  return s.atoms()[i].direction;
}

std::vector<double> cumulative_weights(const SphericalMeasure& s) {
  std::vector<double> cum;
  double acc = 0.0;
  for (const auto& a : s.atoms()) cum.push_back(acc += a.weight);
  return cum;
}

// Drift per unit time replacing the dropped or compensated jump mean, before sigma.
Vec truncation_drift(const StableMeasure& m, double scale, double delta) {
  const double a = m.alpha();
  Vec mom = m.spherical().first_moment() * scale;
  if (a > 1.0) return -mom * std::pow(delta, 1.0 - a) / (a - 1.0);
  if (a < 1.0) return mom * std::pow(delta, 1.0 - a) / (1.0 - a);
  return Vec::Zero(m.dim());
}

void assemble_jumps(PathEnsemble& e, std::vector<std::vector<double>>& times,
                    std::vector<std::vector<std::uint32_t>>& steps, std::vector<std::vector<double>>& vals) {
  e.jump_offsets.assign(e.n_paths + 1, 0);
  for (std::size_t p = 0; p < e.n_paths; ++p) e.jump_offsets[p + 1] = e.jump_offsets[p] + times[p].size();
  e.jump_times.reserve(e.jump_offsets.back());
  e.jump_steps.reserve(e.jump_offsets.back());
  e.jump_values.reserve(e.jump_offsets.back() * e.dim);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    e.jump_times.insert(e.jump_times.end(), times[p].begin(), times[p].end());
    e.jump_steps.insert(e.jump_steps.end(), steps[p].begin(), steps[p].end());
    e.jump_values.insert(e.jump_values.end(), vals[p].begin(), vals[p].end());
    std::vector<double>().swap(times[p]);
    std::vector<std::uint32_t>().swap(steps[p]);
    std::vector<double>().swap(vals[p]);
  }
}

PathEnsemble make_ensemble(int d, const std::vector<double>& grid, std::size_t n, std::uint64_t seed,
                           std::uint32_t channel) {
  PathEnsemble e;
  e.dim = d;
  e.n_paths = n;
  e.grid = grid;
  e.states.assign(n * grid.size() * d, 0.0);
  e.cont.assign(n * (grid.size() - 1) * d, 0.0);
  e.seed = seed;
  e.channel = channel;
  return e;
}

}  // namespace

bool exact_decomposition_available(const DriverSpec& spec) {
  if (spec.sigma_t) return false;
  const auto& s = spec.measure.spherical();
  if (s.is_isotropic()) return true;
  return !atom_pairs(s).empty();
}

DeltaChoice default_delta(const DriverSpec& spec, double horizon) {
  const double a = spec.measure.alpha();
  const double mass = spec.scale * spec.measure.spherical().total_mass();
  double sig = operator_norm(spec.sigma_at(0.0));
  if (spec.sigma_t)
    for (int i = 1; i <= 8; ++i) sig = std::max(sig, operator_norm(spec.sigma_t(horizon * i / 8.0)));
  // Expected retained jumps: mass delta^{-a} / a * T <= max_jumps.
  double d_jumps = std::pow(mass * horizon / (a * spec.max_jumps_per_path), 1.0 / a);
  // RMS of dropped small jumps: sig * sqrt(mass delta^{2-a}/(2-a) * T) <= fraction * T.
  double target = spec.l2_error_fraction * horizon;
  double d_err = std::pow(target * target * (2.0 - a) / (sig * sig * mass * horizon), 1.0 / (2.0 - a));
  double delta = std::max(d_jumps, std::min(d_err, 1.0));
  double l2 = sig * sig * mass * std::pow(delta, 2.0 - a) / (2.0 - a) * horizon;
  return {delta, mass * std::pow(delta, -a) / a * horizon, l2, delta <= d_err};
}

PathEnsemble sample_driver(const DriverSpec& spec, const std::vector<double>& grid, std::size_t n,
                           std::uint64_t seed, int jobs) {
  check_grid(grid);
  const int d = spec.measure.dim();
  const double alpha = spec.measure.alpha();
  const auto& sph = spec.measure.spherical();
  if (spec.sigma.rows() != d || spec.sigma.cols() != d) throw InvalidInput("driver: sigma shape");
  if (!(spec.scale >= 0.0)) throw InvalidInput("driver: negative scale");
  if (alpha == 1.0 && !check_alpha1_symmetry(sph).symmetric)
    throw UnsupportedConfiguration("driver: alpha = 1 requires a centred spherical measure");
  Vec drift = spec.drift.size() ? spec.drift : Vec::Zero(d);
  if (drift.size() != d) throw InvalidInput("driver: drift shape");
  if (alpha != 1.0) drift.setZero();
  Vec start = spec.start.size() ? spec.start : Vec::Zero(d);
  if (start.size() != d) throw InvalidInput("driver: start shape");

  bool exact = spec.method == DriverMethod::exact ||
               (spec.method == DriverMethod::automatic && exact_decomposition_available(spec));
  if (exact && !exact_decomposition_available(spec))
    throw UnsupportedConfiguration("driver: exact decomposition needs constant sigma and symmetric atoms");

  PathEnsemble e = make_ensemble(d, grid, n, seed, spec.channel);
  const std::size_t T = grid.size() - 1;
  const double horizon = grid.back();
  std::vector<std::vector<double>> jt(n), jv(n);
  std::vector<std::vector<std::uint32_t>> js(n);

  if (exact) {
    e.method = "exact";
    const double k = radial_constant(alpha);
    const Mat sigma = spec.sigma;
    std::vector<Vec> dirs;
    std::vector<double> scales;
    double iso_c = 0.0;
    bool iso_multi = sph.is_isotropic() && d >= 2;
    if (iso_multi) {
      iso_c = spec.scale * k * sph.isotropic_mass() * isotropic_abs_moment(d, alpha);
    } else if (sph.is_isotropic()) {
      dirs.push_back(sigma * Vec::Ones(1));
      scales.push_back(spec.scale * k * sph.isotropic_mass());
    } else {
      for (const auto& p : atom_pairs(sph)) {
        dirs.push_back(sigma * p.direction);
        scales.push_back(2.0 * spec.scale * p.weight * k);
      }
    }
    parallel_for(n, jobs, [&](std::size_t p) {
      Stream rng(seed, p, spec.channel);
      double* x = e.state(p, 0);
      for (int j = 0; j < d; ++j) x[j] = start[j];
      Vec inc(d), g(d);
      for (std::size_t s = 0; s < T; ++s) {
        double h = grid[s + 1] - grid[s];
        inc = drift * h;
        if (iso_multi) {
          double a = alpha < 2.0 ? positive_stable(0.5 * alpha, rng) : 1.0;
          for (int j = 0; j < d; ++j) g[j] = rng.normal();
          inc += std::pow(h * iso_c, 1.0 / alpha) * std::sqrt(2.0 * a) * (sigma * g);
        } else {
          for (std::size_t i = 0; i < dirs.size(); ++i) inc += symmetric_stable(alpha, scales[i], h, rng) * dirs[i];
        }
        double* c = &e.cont[(p * T + s) * d];
        const double* xo = e.state(p, s);
        double* xn = e.state(p, s + 1);
        for (int j = 0; j < d; ++j) {
          c[j] = inc[j];
          xn[j] = xo[j] + inc[j];
        }
      }
    });
    e.delta = 0.0;
    e.truncation_l2 = 0.0;
  } else {
    e.method = "truncated";
    DeltaChoice dc = default_delta(spec, horizon);
    double delta = spec.delta > 0.0 ? spec.delta : dc.delta;
    e.delta = delta;
    double sig = operator_norm(spec.sigma_at(0.0));
    double mass = spec.scale * sph.total_mass();
    e.truncation_l2 = sig * sig * mass * std::pow(delta, 2.0 - alpha) / (2.0 - alpha) * horizon;
    e.error_target_met = std::sqrt(e.truncation_l2) <= spec.l2_error_fraction * horizon * (1 + 1e-12);
    const double rate = mass * std::pow(delta, -alpha) / alpha;
    const Vec comp = truncation_drift(spec.measure, spec.scale, delta);
    const auto cum = sph.is_isotropic() ? std::vector<double>{} : cumulative_weights(sph);
    // Simpson weights for the integral of sigma over each step.
    std::vector<Vec> comp_step(T);
    for (std::size_t s = 0; s < T; ++s) {
      double h = grid[s + 1] - grid[s];
      if (spec.sigma_t) {
        Mat avg = (spec.sigma_t(grid[s]) + 4.0 * spec.sigma_t(0.5 * (grid[s] + grid[s + 1])) +
                   spec.sigma_t(grid[s + 1])) / 6.0;
        comp_step[s] = avg * comp * h + drift * h;
      } else {
        comp_step[s] = spec.sigma * comp * h + drift * h;
      }
    }
    parallel_for(n, jobs, [&](std::size_t p) {
      Stream rng(seed, p, spec.channel);
      double* x = e.state(p, 0);
      for (int j = 0; j < d; ++j) x[j] = start[j];
      double tau = rate > 0.0 ? rng.exponential() / rate : INFINITY;
      Vec inc(d), jump(d);
      for (std::size_t s = 0; s < T; ++s) {
        inc = comp_step[s];
        double* c = &e.cont[(p * T + s) * d];
        for (int j = 0; j < d; ++j) c[j] = inc[j];
        while (tau <= grid[s + 1]) {
          double r = delta * std::pow(rng.uniform(), -1.0 / alpha);
          Vec th = sample_direction(sph, cum, rng);
          jump = spec.sigma_at(tau) * (r * th);
          inc += jump;
          jt[p].push_back(tau);
          js[p].push_back(std::uint32_t(s));
          for (int j = 0; j < d; ++j) jv[p].push_back(jump[j]);
          tau += rng.exponential() / rate;
        }
        const double* xo = e.state(p, s);
        double* xn = e.state(p, s + 1);
        for (int j = 0; j < d; ++j) xn[j] = xo[j] + inc[j];
      }
    });
  }
  assemble_jumps(e, jt, js, jv);
  e.description = "driver alpha=" + std::to_string(alpha) + " dim=" + std::to_string(d);
  return e;
}

PathEnsemble thinning_sample(const LevyModel& model, const std::vector<double>& grid, std::size_t n,
                             std::uint64_t seed, const ThinningOptions& opt) {
  check_grid(grid);
  if (!(model.m_min > 0.0)) throw InvalidInput("thinning_sample: m_min must be positive");
  if (model.m_max < model.m_min) throw InvalidInput("thinning_sample: m_max < m_min");
  if (!(opt.delta > 0.0)) throw InvalidInput("thinning_sample: delta must be positive");
  const int d = model.dim();
  const double alpha = model.alpha();
  const auto& sph = model.base.spherical();
  Vec x0 = opt.x0.size() ? opt.x0 : Vec::Zero(d);
  if (x0.size() != d) throw InvalidInput("thinning_sample: start shape");
  PathEnsemble e = make_ensemble(d, grid, n, seed, opt.channel);
  e.method = "thinning";
  e.delta = opt.delta;
  const std::size_t T = grid.size() - 1;
  const double lam = tail_mass(model.base, opt.delta);
  const double rate = model.m_max * lam;
  const double excess_frac = (model.m_max - model.m_min) / model.m_max;
  const Vec comp = truncation_drift(model.base, 1.0, opt.delta);
  const auto cum = sph.is_isotropic() ? std::vector<double>{} : cumulative_weights(sph);
  std::vector<std::vector<double>> jt(n), jv(n);
  std::vector<std::vector<std::uint32_t>> js(n);
  std::vector<std::uint64_t> prop(n, 0), acc(n, 0);
  {
    double sig = operator_norm(model.sigma(0.0, x0));
    e.truncation_l2 = sig * sig * model.m_max * truncated_moment(model.base, opt.delta, 2.0) * grid.back();
  }

  parallel_for(n, opt.jobs, [&](std::size_t p) {
    Stream rng(seed, p, opt.channel);
    double* x = e.state(p, 0);
    for (int j = 0; j < d; ++j) x[j] = x0[j];
    double tau = rng.exponential() / rate;
    Vec cur(d), inc(d), jump(d);
    for (std::size_t s = 0; s < T; ++s) {
      const double t0 = grid[s], h = grid[s + 1] - grid[s];
      Vec xk = e.state_vec(p, s);
      Mat sg = model.sigma(t0, xk);
      double mk = model.m(t0, xk);
      inc = sg * comp * (mk * h);
      if (alpha == 1.0 && model.b) inc += model.b(t0, xk) * h;
      double* c = &e.cont[(p * T + s) * d];
      for (int j = 0; j < d; ++j) c[j] = inc[j];
      cur = xk;
      while (tau <= grid[s + 1]) {
        double r = opt.delta * std::pow(rng.uniform(), -1.0 / alpha);
        Vec th = sample_direction(sph, cum, rng);
        bool take = true;
        if (rng.uniform() < excess_frac) {
          ++prop[p];
          double pa = (model.m(tau, cur) - model.m_min) / (model.m_max - model.m_min);
          take = rng.uniform() < pa;
          if (take) ++acc[p];
        }
        if (take) {
          jump = sg * (r * th);
          inc += jump;
          cur += jump;
          jt[p].push_back(tau);
          js[p].push_back(std::uint32_t(s));
          for (int j = 0; j < d; ++j) jv[p].push_back(jump[j]);
        }
        tau += rng.exponential() / rate;
      }
      const double* xo = e.state(p, s);
      double* xn = e.state(p, s + 1);
      for (int j = 0; j < d; ++j) {
        xn[j] = xo[j] + inc[j];
        if (!std::isfinite(xn[j])) throw DivergenceError("thinning_sample: non-finite state", p);
      }
    }
  });
  for (std::size_t p = 0; p < n; ++p) {
    e.proposals += prop[p];
    e.accepted += acc[p];
  }
  assemble_jumps(e, jt, js, jv);
  e.description = "thinning alpha=" + std::to_string(alpha) + " dim=" + std::to_string(d);
  return e;
}

}  // namespace stablelike
