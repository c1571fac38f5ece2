#include "stablelike/runner.hpp"

#include <fftw3.h>
#include <openssl/evp.h>

#include <Eigen/Core>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "stablelike/error.hpp"
#include "stablelike/fixtures.hpp"
#include "stablelike/inequalities.hpp"
#include "stablelike/pde.hpp"
#include "stablelike/sampler.hpp"
#include "stablelike/sde.hpp"
#include "stablelike/stats.hpp"
#include "stablelike/symbol.hpp"
#include "stablelike/verify.hpp"
#include "stablelike/generator.hpp"

namespace stablelike {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string csv_escape(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw Error("CsvTable: row width differs from header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(r[i]);
    }
    out += "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

using json = nlohmann::json;
std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

struct Ctx {
  const ExperimentConfig& cfg;
  std::map<std::string, double> tol;
  std::vector<std::pair<std::string, std::string>> files;
  std::optional<PathEnsemble> ensemble;
  json results = json::object();
  std::vector<std::string> failures;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  std::uint64_t seed() const { return *cfg.seed; }
  int jobs() const { return cfg.jobs; }
  void csv(const std::string& name, const CsvTable& t) { files.emplace_back(name, t.str()); }
};

template <class T>
T opt(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p.at(key).get<T>() : fallback;
}

Mat sigma_param(const json& p, int d) {
  return p.contains("sigma") ? matrix_from_json(p.at("sigma"), d) : Mat::Identity(d, d);
}

Vec vec_param(const json& p, const char* key, int d) {
  if (!p.contains(key)) return Vec::Zero(d);
  Vec v = vector_from_json(p.at(key));
  if (v.size() != d) throw InvalidInput(std::string(key) + ": expected dimension " + std::to_string(d));
  return v;
}

std::size_t count_param(const json& p, const char* key, std::size_t fallback) {
  double v = opt<double>(p, key, double(fallback));
  if (!(v >= 1.0) || v != std::floor(v)) throw InvalidInput(std::string(key) + ": expected a positive integer");
  return std::size_t(v);
}

std::vector<std::string> vec_cells(const Vec& v) {
  std::vector<std::string> out;
  for (int i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

std::vector<std::string> axis_names(const std::string& stem, int d) {
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i) out.push_back(stem + "_" + std::to_string(i));
  return out;
}

template <class... Parts>
std::vector<std::string> cat(Parts&&... parts) {
  std::vector<std::string> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

std::vector<Vec> unit_directions(int d, int n) {
  std::vector<Vec> out;
  if (d == 1) return {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  if (d == 2) {
    for (int k = 0; k < n; ++k) {
      double a = 2.0 * std::numbers::pi * k / n;
      out.push_back((Vec(2) << std::cos(a), std::sin(a)).finished());
    }
    return out;
  }
  if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / n, r = std::sqrt(1.0 - z * z);
      out.push_back((Vec(3) << r * std::cos(golden * k), r * std::sin(golden * k), z).finished());
    }
    return out;
  }
  for (int k = 0; k < n; ++k) {
    Stream s(0, k, 0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = s.normal();
    out.push_back(v.normalized());
  }
  return out;
}

// symbol -------------------------------------------------------------------

void exp_symbol(Ctx& c, const json& p) {
  auto nu = measure_from_config(opt<json>(p, "measure", "isotropic-2d"));
  const int d = nu.dim();
  Mat sigma = sigma_param(p, d);
  auto radii = opt<std::vector<double>>(p, "radii", {0.25, 0.5, 1.0, 2.0, 4.0, 8.0});
  int ndir = int(count_param(p, "directions", 16));
  if (radii.size() < 2) throw InvalidInput("symbol: need at least two radii");
  for (double r : radii)
    if (!(r > 0.0)) throw InvalidInput("symbol: radii must be positive");
  auto dirs = unit_directions(d, ndir);
  CsvTable t(cat(std::vector<std::string>{"direction", "radius"}, axis_names("xi", d),
                 std::vector<std::string>{"re_psi", "im_psi", "est_error", "method"}));
  double worst_exp = 0.0;
  std::vector<double> consts;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    std::vector<double> re;
    double cs = 0.0;
    for (double r : radii) {
      Vec xi = r * dirs[k];
      auto ev = stable_symbol(nu, sigma, xi);
      re.push_back(ev.value.real());
      cs += ev.value.real() / std::pow(r, nu.alpha());
      t.add(cat(std::vector<std::string>{num(k), num(r)}, vec_cells(xi),
                std::vector<std::string>{num(ev.value.real()), num(ev.value.imag()), num(ev.est_error),
                                         to_string(ev.method)}));
    }
    worst_exp = std::max(worst_exp, std::abs(loglog_fit(radii, re).slope - nu.alpha()));
    consts.push_back(cs / radii.size());
  }
  c.csv("symbol.csv", t);
  auto [mn, mx] = std::minmax_element(consts.begin(), consts.end());
  double mean_c = std::accumulate(consts.begin(), consts.end(), 0.0) / consts.size();
  double spread = (*mx - *mn) / mean_c;
  Mat ss = sigma * sigma.transpose();
  bool rotation_invariant = nu.spherical().is_isotropic() && (ss - ss(0, 0) * Mat::Identity(d, d)).norm() <= 1e-14 * ss.norm();
  bool exponent_applies = nu.alpha() != 1.0 || nu.spherical().is_symmetric();
  c.results = {{"alpha", nu.alpha()},
               {"dim", d},
               {"max_exponent_deviation", worst_exp},
               {"direction_spread", spread},
               {"direction_check_applies", rotation_invariant},
               {"exponent_check_applies", exponent_applies}};
  if (exponent_applies) c.check(worst_exp <= c.tol.at("exponent"), "fitted exponent differs from alpha");
  if (rotation_invariant) c.check(spread <= c.tol.at("direction"), "psi / |xi|^alpha varies across directions");
}

// sample -------------------------------------------------------------------

DriverMethod method_param(const json& p) {
  auto m = opt<std::string>(p, "method", "automatic");
  if (m == "automatic") return DriverMethod::automatic;
  if (m == "exact") return DriverMethod::exact;
  if (m == "truncated") return DriverMethod::truncated;
  throw InvalidInput("method: expected automatic, exact or truncated");
}

std::vector<Vec> xi_grid(int d, double lo, double hi, int n) {
  if (d > 3) throw InvalidInput("cf grid: dimension above 3");
  std::vector<Vec> out;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= std::size_t(n);
  for (std::size_t k = 0; k < total; ++k) {
    Vec xi(d);
    std::size_t r = k;
    for (int i = d - 1; i >= 0; --i) {
      xi[i] = n == 1 ? lo : lo + (hi - lo) * double(r % n) / (n - 1);
      r /= n;
    }
    out.push_back(xi);
  }
  return out;
}

void exp_sample(Ctx& c, const json& p) {
  auto nu = measure_from_config(opt<json>(p, "measure", "cylindrical-2d-axes"));
  const int d = nu.dim();
  DriverSpec spec(nu);
  spec.sigma = sigma_param(p, d);
  spec.method = method_param(p);
  spec.channel = std::uint32_t(opt<double>(p, "channel", 0.0));
  const double T = opt<double>(p, "horizon", 1.0);
  const std::size_t steps = count_param(p, "steps", 1), n = count_param(p, "n_paths", 100000);
  const int cf_n = int(count_param(p, "cf_n", 5));
  auto grid_xi = xi_grid(d, opt<double>(p, "cf_lo", -2.0), opt<double>(p, "cf_hi", 2.0), cf_n);
  const bool keep = opt<bool>(p, "write_ensemble", false);
  auto e = sample_driver(spec, uniform_grid(T, steps), n, c.seed(), c.jobs());
  const double bound = c.tol.at("cf_sigmas") / std::sqrt(double(n));
  CsvTable t(cat(axis_names("xi", d), std::vector<std::string>{"re_empirical", "im_empirical", "re_exact",
                                                               "im_exact", "abs_error", "bound"}));
  double worst = 0.0;
  for (const auto& xi : grid_xi) {
    double re = 0.0, im = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      double ph = xi.dot(e.state_vec(q, steps));
      re += std::cos(ph);
      im += std::sin(ph);
    }
    std::complex<double> emp(re / n, im / n);
    std::complex<double> ex = xi.norm() == 0.0 ? 1.0 : std::exp(-T * stable_symbol(nu, spec.sigma, xi).value);
    double err = std::abs(emp - ex);
    worst = std::max(worst, err);
    t.add(cat(vec_cells(xi), std::vector<std::string>{num(emp.real()), num(emp.imag()), num(ex.real()),
                                                      num(ex.imag()), num(err), num(bound)}));
  }
  c.csv("cf.csv", t);
  c.results = {{"method", e.method},       {"n_paths", n},          {"delta", e.delta},
               {"truncation_l2", e.truncation_l2}, {"max_cf_error", worst}, {"bound", bound}};
  c.check(worst <= bound, "empirical characteristic function outside the bound");
  if (keep) c.ensemble = std::move(e);
}

// generator ----------------------------------------------------------------

LevyModel model_param(const json& p, const char* fallback_measure) {
  if (p.contains("model")) {
    if (p.contains("measure") || p.contains("sigma")) throw InvalidInput("give either model or measure/sigma");
    return model_from_config(p.at("model"));
  }
  auto nu = measure_from_config(opt<json>(p, "measure", fallback_measure));
  return LevyModel::constant(nu, sigma_param(p, nu.dim()));
}

void exp_generator(Ctx& c, const json& p) {
  LevyModel model = p.contains("model") || p.contains("measure") ? model_param(p, "isotropic-1d")
                                                                  : model_from_config("modulated-1d");
  const int d = model.dim();
  json fj = opt<json>(p, "test_function", "bump-1d");
  auto f = test_function_from_config(fj);
  if (f.dim != d) throw InvalidInput("generator: test function dimension differs from the model");
  std::vector<Vec> pts;
  if (p.contains("points")) {
    for (const auto& q : p.at("points")) pts.push_back(vector_from_json(q));
  } else {
    for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) pts.push_back(Vec::Constant(d, x));
  }
  for (const auto& x : pts)
    if (x.size() != d) throw InvalidInput("generator: point dimension differs from the model");
  const double t0 = opt<double>(p, "t", 0.0);
  json canon = canonical_test_function(fj);
  const bool wave = canon.at("type") == "plane_wave";
  CsvTable t(cat(axis_names("x", d), std::vector<std::string>{"value", "error", "reference"}));
  double worst = 0.0;
  bool finite = true;
  for (const auto& x : pts) {
    auto v = apply_L(model, f, t0, x);
    finite = finite && std::isfinite(v.value) && std::isfinite(v.error);
    std::string ref = "";
    if (wave) {
      Vec xi = vector_from_json(canon.at("xi"));
      double ph = xi.dot(x) + canon.at("phase").get<double>();
      auto psi = xi.norm() == 0.0 ? std::complex<double>(0.0)
                                  : stable_symbol(model.nu_at(t0, x), model.sigma(t0, x), xi).value;
      double r = -(psi * std::exp(std::complex<double>(0.0, ph))).real();
      worst = std::max(worst, std::abs(v.value - r));
      ref = num(r);
    }
    t.add(cat(vec_cells(x), std::vector<std::string>{num(v.value), num(v.error), ref}));
  }
  c.csv("generator.csv", t);
  c.results = {{"points", pts.size()}, {"plane_wave_reference", wave}, {"max_reference_gap", worst}};
  c.check(finite, "non-finite generator value");
  if (wave) c.check(worst <= c.tol.at("plane_wave"), "generator disagrees with the symbol on a plane wave");
}

// sde ----------------------------------------------------------------------

void exp_sde(Ctx& c, const json& p) {
  const double T = opt<double>(p, "horizon", 1.0), q = opt<double>(p, "q", 0.5);
  const std::size_t steps = count_param(p, "steps", 256), n = count_param(p, "n_paths", 10000),
                    stride = count_param(p, "stride", 1);
  auto grid = uniform_grid(T, steps);
  PathEnsemble X;
  Vec x0;
  if (p.contains("setup")) {
    if (p.contains("field") || p.contains("driver")) throw InvalidInput("sde: give either setup or field/driver");
    auto s = two_driver_from_config(p.at("setup"));
    x0 = p.contains("x0") ? vec_param(p, "x0", s.driver.dim()) : s.x0;
    DriverSpec a(s.driver), b(s.driver_bar);
    b.channel = 1;
    auto la = sample_driver(a, grid, n, c.seed(), c.jobs());
    auto lb = sample_driver(b, grid, n, c.seed(), c.jobs());
    if (stride != 1) throw InvalidInput("sde: stride is not supported with two drivers");
    X = euler_solve_two_driver(s.field, s.field_bar, la, lb, x0, c.jobs());
  } else {
    auto field = field_from_config(opt<json>(p, "field", "sine-diagonal-1d"));
    auto nu = measure_from_config(opt<json>(p, "driver", "isotropic-1d"));
    if (field.dim != nu.dim()) throw InvalidInput("sde: field and driver dimensions differ");
    x0 = vec_param(p, "x0", nu.dim());
    auto L = sample_driver(DriverSpec(nu), grid, n, c.seed(), c.jobs());
    X = euler_solve(field, L, x0, stride, c.jobs());
  }
  const int d = X.dim;
  CsvTable t(cat(std::vector<std::string>{"t"}, axis_names("mean", d), std::vector<std::string>{"moment_q"}));
  for (std::size_t k = 0; k < X.grid.size(); ++k) {
    Vec m = Vec::Zero(d);
    double mq = 0.0;
    for (std::size_t i = 0; i < X.n_paths; ++i) {
      Vec s = X.state_vec(i, k);
      m += s;
      mq += std::pow((s - x0).norm(), q);
    }
    t.add(cat(std::vector<std::string>{num(X.grid[k])}, vec_cells(m / double(X.n_paths)),
              std::vector<std::string>{num(mq / X.n_paths)}));
  }
  c.csv("sde.csv", t);
  c.results = {{"n_paths", X.n_paths}, {"steps", X.steps()}, {"q", q}};
}

// uniqueness ---------------------------------------------------------------

CouplingSetup coupling_param(Ctx& c, const json& p, int d) {
  CouplingSetup s;
  s.horizon = opt<double>(p, "horizon", 1.0);
  s.fine_steps = count_param(p, "fine_steps", 512);
  s.stride_x = count_param(p, "stride_x", 1);
  s.stride_y = count_param(p, "stride_y", 1);
  s.x0 = vec_param(p, "x0", d);
  s.y0 = p.contains("y0") ? vec_param(p, "y0", d) : Vec();
  s.n_pairs = count_param(p, "n_pairs", 10000);
  s.maximal_levels = int(count_param(p, "maximal_levels", 6));
  s.bootstrap_resamples = int(count_param(p, "bootstrap_resamples", 2000));
  s.seed = c.seed();
  s.jobs = c.jobs();
  return s;
}

void exp_uniqueness(Ctx& c, const json& p) {
  auto field = field_from_config(opt<json>(p, "field", json{{"type", "hoelder"}, {"dim", 1}, {"gamma", 0.9}}));
  auto nu = measure_from_config(opt<json>(p, "driver", "isotropic-1d"));
  if (field.dim != nu.dim()) throw InvalidInput("uniqueness: field and driver dimensions differ");
  const double a = nu.alpha(), upper = a < 1.0 ? 1.0 : 2.0;
  const double q = opt<double>(p, "q", a + 0.4 * (upper - a));
  check_coupling_exponent(a, q);
  auto mode = opt<std::string>(p, "mode", "ladder");
  auto setup = coupling_param(c, p, nu.dim());
  DriverSpec spec(nu);
  if (mode == "coupled") {
    auto r = coupled_uniqueness_experiment(field, spec, q, setup);
    CsvTable t({"t", "moment", "moment_stderr", "ell_mean", "ell_max"});
    for (std::size_t k = 0; k < r.times.size(); ++k)
      t.add({num(r.times[k]), num(r.moment[k]), num(r.moment_stderr[k]), num(r.ell_mean[k]), num(r.ell_max[k])});
    c.csv("coupling.csv", t);
    bool identical = setup.stride_x == setup.stride_y && (setup.y0.size() == 0 || setup.y0 == setup.x0);
    c.results = {{"mode", mode}, {"q", q}, {"identical", identical}, {"exact_zero", r.exact_zero},
                 {"ell_monotone", r.ell_monotone}};
    if (identical) c.check(r.exact_zero, "identical coupled solutions differ");
  } else if (mode == "ladder") {
    int k_min = int(count_param(p, "k_min", 5)), k_max = int(count_param(p, "k_max", 9));
    auto r = step_ladder(field, spec, q, k_min, k_max, setup);
    CsvTable t({"h", "moment", "moment_stderr"});
    for (std::size_t k = 0; k < r.h.size(); ++k) t.add({num(r.h[k]), num(r.moment[k]), num(r.moment_stderr[k])});
    c.csv("ladder.csv", t);
    c.results = {{"mode", mode}, {"q", q}, {"monotone", r.monotone}};
    c.check(r.monotone, "step ladder moments are not decreasing");
  } else if (mode == "perturbation") {
    auto eps = opt<std::vector<double>>(p, "eps", {1e-1, 1e-2, 1e-3, 1e-4});
    auto r = perturbation_study(field, spec, q, eps, setup);
    CsvTable t({"eps", "moment", "ratio", "ratio_stderr"});
    for (std::size_t k = 0; k < r.eps.size(); ++k)
      t.add({num(r.eps[k]), num(r.moment[k]), num(r.ratio[k]), num(r.stderr_ratio[k])});
    c.csv("perturbation.csv", t);
    c.results = {{"mode", mode}, {"q", q}, {"spread", r.spread}, {"fitted_rate", r.fitted_rate}};
    c.check(r.spread <= c.tol.at("spread"), "perturbation ratio spread too large");
  } else {
    throw InvalidInput("uniqueness: mode must be coupled, ladder or perturbation");
  }
}

// mgp-check ----------------------------------------------------------------

void exp_mgp(Ctx& c, const json& p) {
  LevyModel model = model_param(p, "isotropic-1d");
  const int d = model.dim();
  std::vector<json> fs_json;
  if (p.contains("test_functions")) {
    for (const auto& f : p.at("test_functions")) fs_json.push_back(f);
  } else {
    fs_json = {json{{"type", "gaussian_bump"}, {"center", std::vector<double>(d, 0.0)}, {"width", 0.8}},
               json{{"type", "gaussian_bump"}, {"center", std::vector<double>(d, 0.5)}, {"width", 0.6}},
               json{{"type", "gaussian_bump"}, {"center", std::vector<double>(d, -0.7)}, {"width", 1.0}}};
  }
  std::vector<TestFunction> fs;
  for (const auto& j : fs_json) {
    fs.push_back(test_function_from_config(j));
    if (fs.back().dim != d) throw InvalidInput("mgp-check: test function dimension differs from the model");
  }
  auto windows = opt<std::vector<std::vector<double>>>(p, "windows", {{0.0, 0.5}, {0.25, 1.0}});
  const double T = opt<double>(p, "horizon", 1.0), scale = opt<double>(p, "control_scale", 2.0);
  for (const auto& w : windows)
    if (w.size() != 2 || !(0.0 <= w[0] && w[0] < w[1] && w[1] <= T)) throw InvalidInput("mgp-check: bad window");
  const std::size_t n = count_param(p, "n_paths", 100000), steps = count_param(p, "steps", 40);
  auto grid = uniform_grid(T, steps);
  PathEnsemble e;
  if (model.constant_coefficients) {
    DriverSpec spec(model.base);
    spec.sigma = model.sigma(0.0, Vec::Zero(d));
    e = sample_driver(spec, grid, n, c.seed(), c.jobs());
  } else {
    ThinningOptions o;
    o.delta = opt<double>(p, "thinning_delta", 0.01);
    o.x0 = Vec::Zero(d);
    o.jobs = c.jobs();
    e = thinning_sample(model, grid, n, c.seed(), o);
  }
  CsvTable t({"test_function", "t1", "t2", "generator_scale", "residual", "stderr", "tolerance", "z", "consistent"});
  json rows = json::array();
  for (const auto& f : fs) {
    for (const auto& w : windows) {
      for (double s : {1.0, scale}) {
        MartingaleOptions o;
        o.generator_scale = s;
        o.jobs = c.jobs();
        o.time_homogeneous = model.constant_coefficients || d == 1;
        auto r = martingale_residual(e, model, f, w[0], w[1], conditioning_one(), o);
        t.add({f.name, num(w[0]), num(w[1]), num(s), num(r.residual), num(r.stderr_), num(r.tolerance()), num(r.z()),
               r.consistent() ? "true" : "false"});
        if (s == 1.0) {
          c.check(r.consistent(), "null residual for " + f.name + " exceeds its tolerance");
        } else {
          c.check(std::abs(r.z()) > c.tol.at("control_z"), "negative control for " + f.name + " did not fire");
        }
        rows.push_back({{"test_function", f.name}, {"t1", w[0]}, {"t2", w[1]}, {"scale", s}, {"z", r.z()}});
      }
    }
  }
  c.csv("residuals.csv", t);
  c.results = {{"n_paths", n}, {"control_scale", scale}, {"rows", rows}};
}

// krylov -------------------------------------------------------------------

void exp_krylov(Ctx& c, const json& p) {
  auto nu = measure_from_config(opt<json>(p, "measure", "isotropic-1d"));
  const int d = nu.dim();
  DriverSpec spec(nu);
  spec.sigma = sigma_param(p, d);
  json fj = opt<json>(p, "test_function",
                      json{{"type", "gaussian_bump"}, {"center", std::vector<double>(d, 0.0)}, {"width", 1.0}});
  json canon = canonical_test_function(fj);
  auto f = test_function_from_config(canon);
  if (f.dim != d) throw InvalidInput("krylov: test function dimension differs from the measure");
  KrylovOptions o;
  o.lambdas = opt<std::vector<double>>(p, "lambdas", {1, 2, 4, 8});
  auto w = opt<std::vector<std::vector<double>>>(p, "windows", {{0, 0.125}, {0, 0.25}, {0, 0.5}, {0, 1}});
  for (const auto& x : w) {
    if (x.size() != 2) throw InvalidInput("krylov: windows are [lo, hi] pairs");
    o.windows.push_back({x[0], x[1]});
  }
  o.p = opt<double>(p, "p", 8.0);
  if (p.contains("support_lo") != p.contains("support_hi")) throw InvalidInput("krylov: give both support bounds");
  if (p.contains("support_lo")) {
    o.support_lo = vec_param(p, "support_lo", d);
    o.support_hi = vec_param(p, "support_hi", d);
  } else if (canon.at("type") == "gaussian_bump") {
    Vec ctr = vector_from_json(canon.at("center"));
    double h = 9.5 * canon.at("width").get<double>();
    o.support_lo = ctr - h * Vec::Ones(d);
    o.support_hi = ctr + h * Vec::Ones(d);
  } else {
    throw InvalidInput("krylov: support bounds are required for this test function");
  }
  o.hypothesis.dim = d;
  o.hypothesis.alpha = nu.alpha();
  o.bootstrap_resamples = int(count_param(p, "bootstrap_resamples", 400));
  o.seed = c.seed();
  const double T = opt<double>(p, "horizon", 1.0);
  auto e = sample_driver(spec, uniform_grid(T, count_param(p, "steps", 64)), count_param(p, "n_paths", 20000),
                         c.seed(), c.jobs());
  auto r = krylov_ratio_sweep(e, f, o);
  CsvTable t({"lambda", "window_lo", "window_hi", "occupation", "ratio", "ratio_stderr", "lp_norm"});
  for (std::size_t i = 0; i < r.lambdas.size(); ++i)
    for (std::size_t k = 0; k < r.windows.size(); ++k)
      t.add({num(r.lambdas[i]), num(r.windows[k].first), num(r.windows[k].second), num(r.occupation[i][k]),
             num(r.ratio[i][k]), num(r.ratio_stderr[i][k]), num(r.lp_norm[i])});
  c.csv("krylov.csv", t);
  const double a = nu.alpha(), beta_max = a * (1.0 - 1.0 / o.p) - 0.01;
  const double lo = 1.0 - beta_max / a - 1.0 / o.p - c.tol.at("band_slack");
  c.results = {{"p", r.p},
               {"p_threshold", r.p_threshold},
               {"in_theory", r.in_theory},
               {"warning", r.warning},
               {"ratio_spread", r.ratio_spread},
               {"trend_p_value", r.trend_p_value},
               {"window_exponent", r.window_exponent},
               {"exponent_band", {lo, 1.0}},
               {"constant_estimate", r.constant_estimate}};
  c.check(r.ratio_spread <= c.tol.at("spread"), "Krylov ratio spread too large");
  c.check(r.trend_p_value > c.tol.at("trend_p"), "Krylov ratios show a trend in lambda");
  c.check(r.window_exponent >= lo && r.window_exponent <= 1.0, "window exponent outside the admissible band");
}

// pde ----------------------------------------------------------------------

std::function<double(double, const Vec&)> forcing_param(const json& p, double period) {
  auto kind = opt<std::string>(p, "forcing", "mixed");
  const double k0 = 2.0 * std::numbers::pi / period;
  if (kind == "constant") return [](double, const Vec&) { return 1.3; };
  if (kind == "mixed")
    return [k0](double t, const Vec& x) {
      const int d = int(x.size());
      double ph = 0.0;
      for (int i = 0; i < d; ++i) ph += (i + 1) * k0 * x[i];
      return (1.0 + t) * (std::cos(ph) + 0.4 * std::sin(3.0 * k0 * x[0]) * std::cos(k0 * x[d - 1]) +
                          0.3 * std::cos(4.0 * k0 * x[d - 1]));
    };
  if (kind == "bump")
    return [k0](double t, const Vec& x) {
      double s = 0.0;
      for (int i = 0; i < x.size(); ++i) s += std::cos(k0 * x[i]);
      return (1.0 + t) * std::exp(s);
    };
  if (kind == "kink")
    return [period](double t, const Vec& x) {
      double s = 0.0;
      for (int i = 0; i < x.size(); ++i) s += std::abs(std::sin(std::numbers::pi * x[i] / period));
      return (1.0 + t) * s;
    };
  throw InvalidInput("pde: forcing must be constant, mixed, bump or kink");
}

void exp_pde(Ctx& c, const json& p) {
  auto nu = measure_from_config(opt<json>(p, "measure", json{{"fixture", "cylindrical-2d-axes"}, {"alpha", 1.2}}));
  const int d = nu.dim();
  Mat sigma = sigma_param(p, d);
  const double L = opt<double>(p, "period", 2.0 * std::numbers::pi), T = opt<double>(p, "horizon", 1.0);
  const double lam = opt<double>(p, "lambda", 1.0), pp = opt<double>(p, "p", 4.0);
  const int n = int(count_param(p, "n", 64)), nodes = int(count_param(p, "nodes", 8));
  const std::size_t steps = count_param(p, "steps", 4);
  auto res = opt<std::vector<int>>(p, "resolutions", {64, 128, 256});
  auto f = forcing_param(p, L);
  auto times = uniform_grid(T, steps);
  auto psi = grid_symbol(nu, sigma, n, L);
  auto fp = PiecewiseField::sample(d, n, L, times, f);
  auto sol = spectral_resolvent(psi, fp, lam);
  auto rep = estimate_checks(sol, fp, pp, nu.alpha(), nodes);
  auto rep2 = estimate_checks(sol, fp, 2.0, nu.alpha(), nodes);
  CsvTable e({"t", "lhs", "rhs", "ratio"});
  for (std::size_t j = 0; j < rep.er10_lhs.size(); ++j)
    e.add({num(times[j + 1]), num(rep.er10_lhs[j]), num(rep.er10_rhs[j]),
           num(rep.er10_rhs[j] > 0 ? rep.er10_lhs[j] / rep.er10_rhs[j] : 0.0)});
  c.csv("er10.csv", e);
  // Constant forcing saturates the pointwise bound.
  auto one = PiecewiseField::constant(GridField::sample(d, n, L, [](const Vec&) { return 1.3; }), T, steps);
  auto rc = estimate_checks(spectral_resolvent(psi, one, lam), one, pp, nu.alpha(), 2);
  double eq_gap = 0.0;
  for (std::size_t j = 0; j < rc.er10_lhs.size(); ++j)
    eq_gap = std::max(eq_gap, std::abs(rc.er10_lhs[j] / rc.er10_rhs[j] - 1.0));
  auto lad = resolvent_refinement_ladder(nu, sigma, L, f, T, steps, lam, pp, res);
  CsvTable l({"n", "ratio"});
  for (std::size_t k = 0; k < lad.n.size(); ++k) l.add({num(std::size_t(lad.n[k])), num(lad.ratio[k])});
  c.csv("ladder.csv", l);
  const double gap2 = std::abs(rep2.maximal_ratio - rep2.maximal_ratio_spectral) / rep2.maximal_ratio_spectral;
  c.results = {{"er10_max_ratio", rep.er10_max_ratio},
               {"constant_forcing_gap", eq_gap},
               {"maximal_ratio_p", rep.maximal_ratio},
               {"maximal_ratio_p2", rep2.maximal_ratio},
               {"maximal_ratio_p2_spectral", rep2.maximal_ratio_spectral},
               {"spectral_bound", rep2.spectral_bound},
               {"p2_relative_gap", gap2},
               {"ladder_spread", lad.spread},
               {"weak_residual", weak_residual(sol)}};
  c.check(rep.er10_max_ratio <= 1.0 + c.tol.at("er10"), "pointwise resolvent bound exceeded");
  c.check(eq_gap <= c.tol.at("er10"), "constant forcing does not saturate the pointwise bound");
  c.check(gap2 <= c.tol.at("spectral"), "p = 2 ratio differs from its spectral value");
  c.check(rep2.maximal_ratio_spectral <= rep2.spectral_bound * (1.0 + 1e-12), "p = 2 ratio above the symbol bound");
  c.check(lad.spread <= c.tol.at("ladder_spread"), "maximal-regularity ratio unstable under refinement");
}

// ineq-suite ---------------------------------------------------------------

std::string join_inputs(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

void exp_ineq(Ctx& c, const json& p) {
  const std::size_t abs_pairs = count_param(p, "abs_power_pairs", 1000000);
  const int abs_dim = int(count_param(p, "abs_power_dim", 3));
  auto le52 = opt<std::vector<std::vector<double>>>(p, "le52", {{1, 0.5}, {3, 0.5}});
  const std::size_t le52_init = count_param(p, "le52_initial", 125000), le52_budget = count_param(p, "le52_budget", 1000000);
  auto alphas = opt<std::vector<double>>(p, "le5_alphas", {0.5, 1.0, 1.5});
  const double beta = opt<double>(p, "le5_beta", 0.5);
  const std::size_t le5_init = count_param(p, "le5_initial", 128), le5_budget = count_param(p, "le5_budget", 1024);
  const std::size_t hom = count_param(p, "homogeneity_cases", 200);
  CsvTable worst({"lemma", "setting", "rank", "ratio", "lhs", "shape", "oracle_error", "inputs"});
  json searches = json::array();
  auto record = [&](const SupSearchResult& r, const std::string& setting) {
    for (std::size_t k = 0; k < r.worst.size(); ++k) {
      const auto& w = r.worst[k];
      worst.add({r.lemma, setting, num(k + 1), num(w.ratio), num(w.lhs), num(w.shape), num(w.oracle_error),
                 join_inputs(w.inputs)});
    }
    searches.push_back({{"lemma", r.lemma},
                        {"setting", setting},
                        {"sup_ratio", r.sup_ratio},
                        {"stable", r.stable},
                        {"budgets", r.budgets},
                        {"sup_history", r.sup_history},
                        {"violations", r.violations}});
    c.check(r.stable, r.lemma + " (" + setting + ") sup ratio did not stabilize");
    c.check(std::isfinite(r.sup_ratio), r.lemma + " (" + setting + ") sup ratio not finite");
  };
  auto sweep = abs_power_sweep(abs_pairs, abs_dim, c.seed(), c.jobs());
  c.check(sweep.violations == 0, "abs_power violations found");
  auto abs_search = sup_ratio_search("abs_power", abs_power_sampler(abs_dim, 0.5), 2000, 64000, c.seed(), c.jobs());
  record(abs_search, "d=" + std::to_string(abs_dim) + " q=0.5");
  double le52_hom = 0.0;
  for (const auto& s : le52) {
    if (s.size() != 2) throw InvalidInput("ineq-suite: le52 entries are [dim, q]");
    int dim = int(s[0]);
    auto sampler = le52_sampler(dim, s[1]);
    record(sup_ratio_search("le52", sampler, le52_init, le52_budget, c.seed(), c.jobs()),
           "d=" + std::to_string(dim) + " q=" + num(s[1]));
    for (std::size_t i = 0; i < hom; ++i) {
      Stream st(c.seed(), i, 7);
      auto cs = sampler(st);
      Vec x = Eigen::Map<const Vec>(cs.inputs.data(), dim), y = Eigen::Map<const Vec>(cs.inputs.data() + dim, dim);
      for (double lam : {0.01, 3.0, 1e4}) {
        double r = le52_check(lam * x, lam * y, s[1]).ratio;
        if (cs.ratio > 0.0) le52_hom = std::max(le52_hom, std::abs(r - cs.ratio) / cs.ratio);
      }
    }
  }
  double le5_hom = 0.0;
  for (double a : alphas) {
    auto sampler = le5_sampler(a, beta);
    record(sup_ratio_search(a < 1 ? "le5-i" : a == 1 ? "le5-ii" : "le5-iii", sampler, le5_init, le5_budget, c.seed(),
                            c.jobs()),
           "alpha=" + num(a) + (a == 1.0 ? " beta=" + num(beta) : ""));
    for (std::size_t i = 0; i < std::min<std::size_t>(hom, 20); ++i) {
      Stream st(c.seed(), i, 8);
      auto cs = sampler(st);
      if (cs.lhs == 0.0) continue;
      for (double lam : {2.0, 10.0}) {
        double l = le5_check(lam * cs.inputs[0], lam * cs.inputs[1], a, beta).lhs;
        le5_hom = std::max(le5_hom, std::abs(l - std::pow(lam, a) * cs.lhs) / l);
      }
    }
  }
  c.csv("worst.csv", worst);
  c.results = {{"abs_power", {{"pairs", sweep.pairs}, {"violations", sweep.violations}, {"max_ratio", sweep.max_ratio}}},
               {"searches", searches},
               {"le5_homogeneity_gap", le5_hom},
               {"le52_homogeneity_gap", le52_hom}};
  c.check(le5_hom <= c.tol.at("le5_homogeneity"), "le5 homogeneity violated");
  c.check(le52_hom <= c.tol.at("le52_homogeneity"), "le52 homogeneity violated");
}

// fixtures -----------------------------------------------------------------

void exp_fixtures(Ctx& c, const json&) {
  json list = json::array();
  CsvTable t({"name", "kind", "description"});
  bool round_trip = true;
  for (const auto& f : fixture_catalog()) {
    list.push_back({{"name", f.name}, {"kind", f.kind}, {"description", f.description}, {"spec", f.spec}});
    t.add({f.name, f.kind, f.description});
    json back;
    if (f.kind == "measure") back = to_json(stable_measure_from_json(f.spec));
    if (f.kind == "field") {
      back = canonical_field(f.spec);
      field_from_config(f.spec);
    }
    if (f.kind == "test_function") {
      back = canonical_test_function(f.spec);
      test_function_from_config(f.spec);
    }
    if (f.kind == "model") {
      back = canonical_model(f.spec);
      model_from_config(f.spec);
    }
    if (f.kind == "setup") {
      back = canonical_two_driver(f.spec);
      two_driver_from_config(f.spec);
    }
    if (back != f.spec) {
      round_trip = false;
      c.check(false, "fixture " + f.name + " does not round-trip");
    }
  }
  c.files.emplace_back("catalog.json", list.dump(2) + "\n");
  c.csv("fixtures.csv", t);
  c.results = {{"count", list.size()}, {"round_trip", round_trip}};
}

struct Experiment {
  std::string name;
  bool stochastic;
  std::vector<std::string> params;
  std::map<std::string, double> tolerances;
  std::function<void(Ctx&, const json&)> body;
};

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      {"symbol", false, {"measure", "sigma", "radii", "directions"}, {{"exponent", 1e-3}, {"direction", 1e-6}}, exp_symbol},
      {"sample",
       true,
       {"measure", "sigma", "method", "channel", "horizon", "steps", "n_paths", "cf_lo", "cf_hi", "cf_n", "write_ensemble"},
       {{"cf_sigmas", 4.0}},
       exp_sample},
      {"generator", false, {"model", "measure", "sigma", "test_function", "points", "t"}, {{"plane_wave", 1e-6}}, exp_generator},
      {"sde", true, {"field", "driver", "setup", "x0", "horizon", "steps", "n_paths", "stride", "q"}, {}, exp_sde},
      {"uniqueness",
       true,
       {"field", "driver", "mode", "q", "horizon", "fine_steps", "stride_x", "stride_y", "x0", "y0", "n_pairs",
        "maximal_levels", "bootstrap_resamples", "k_min", "k_max", "eps"},
       {{"spread", 5.0}},
       exp_uniqueness},
      {"mgp-check",
       true,
       {"model", "measure", "sigma", "test_functions", "windows", "horizon", "n_paths", "steps", "control_scale",
        "thinning_delta"},
       {{"control_z", 6.0}},
       exp_mgp},
      {"krylov",
       true,
       {"measure", "sigma", "test_function", "lambdas", "windows", "p", "support_lo", "support_hi", "horizon", "steps",
        "n_paths", "bootstrap_resamples"},
       {{"spread", 3.0}, {"trend_p", 0.05}, {"band_slack", 0.1}},
       exp_krylov},
      {"pde",
       false,
       {"measure", "sigma", "period", "n", "forcing", "horizon", "steps", "lambda", "p", "resolutions", "nodes"},
       {{"er10", 1e-10}, {"spectral", 1e-8}, {"ladder_spread", 1.2}},
       exp_pde},
      {"ineq-suite",
       true,
       {"abs_power_pairs", "abs_power_dim", "le52", "le52_initial", "le52_budget", "le5_alphas", "le5_beta",
        "le5_initial", "le5_budget", "homogeneity_cases"},
       {{"le5_homogeneity", 1e-6}, {"le52_homogeneity", 1e-10}},
       exp_ineq},
      {"fixtures", false, {}, {}, exp_fixtures},
  };
  return list;
}

const Experiment& find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return e;
  throw InvalidInput("unknown subcommand '" + name + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

json effective_config(const ExperimentConfig& cfg) {
  json j{{"subcommand", cfg.subcommand}, {"params", cfg.params}, {"tolerances", cfg.tolerances}};
  if (cfg.seed) j["seed"] = *cfg.seed;
  return j;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : experiments()) v.push_back(e.name);
    return v;
  }();
  return names;
}

bool is_stochastic(const std::string& subcommand) { return find_experiment(subcommand).stochastic; }

ExperimentConfig load_config(const std::string& subcommand, const CliOverrides& cli) {
  const auto& exp = find_experiment(subcommand);
  ExperimentConfig cfg;
  cfg.subcommand = subcommand;
  json file = json::object();
  if (cli.config_path) {
    try {
      file = json::parse(read_file(*cli.config_path));
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("malformed config JSON: ") + e.what());
    }
  }
  check_keys(file, {"subcommand", "seed", "jobs", "out", "tolerances", "params"}, "config");
  if (file.contains("subcommand") && file.at("subcommand").get<std::string>() != subcommand)
    throw InvalidInput("config is for subcommand '" + file.at("subcommand").get<std::string>() + "'");
  if (file.contains("seed")) {
    if (!file.at("seed").is_number_unsigned()) throw InvalidInput("config: seed must be a non-negative integer");
    cfg.seed = file.at("seed").get<std::uint64_t>();
  }
  if (file.contains("jobs")) cfg.jobs = file.at("jobs").get<int>();
  if (file.contains("out")) cfg.out_dir = file.at("out").get<std::string>();
  if (file.contains("params")) {
    cfg.params = file.at("params");
    if (!cfg.params.is_object()) throw InvalidInput("config: params must be an object");
    for (auto it = cfg.params.begin(); it != cfg.params.end(); ++it)
      if (std::find(exp.params.begin(), exp.params.end(), it.key()) == exp.params.end())
        throw InvalidInput("config: unknown parameter '" + it.key() + "' for " + subcommand);
  }
  if (file.contains("tolerances")) {
    const auto& t = file.at("tolerances");
    if (!t.is_object()) throw InvalidInput("config: tolerances must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!exp.tolerances.count(it.key())) throw InvalidInput("config: unknown tolerance '" + it.key() + "'");
      cfg.tolerances[it.key()] = it.value().get<double>();
    }
  }
  if (cli.seed) cfg.seed = cli.seed;
  if (cli.jobs) cfg.jobs = *cli.jobs;
  if (cli.out) cfg.out_dir = *cli.out;
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("STABLELIKE_OUT");
    cfg.out_dir = env && *env ? std::string(env) + "/" + subcommand : "results/" + subcommand;
  }
  if (cfg.jobs < 1) throw InvalidInput("jobs must be at least 1");
  if (exp.stochastic && !cfg.seed) throw InvalidInput(subcommand + " is stochastic and needs a seed");
  return cfg;
}

RunResult run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  res.out_dir = cfg.out_dir;
  const Experiment* exp = nullptr;
  try {
    exp = &find_experiment(cfg.subcommand);
    if (exp->stochastic && !cfg.seed) throw InvalidInput(cfg.subcommand + " is stochastic and needs a seed");
  } catch (const InvalidInput& e) {
    res.status = "config-error";
    res.message = e.what();
    return res;
  }
  Ctx ctx{cfg, exp->tolerances, {}, std::nullopt, json::object(), {}};
  for (const auto& [k, v] : cfg.tolerances) ctx.tol[k] = v;
  bool partial = false;
  try {
    exp->body(ctx, cfg.params);
    res.exit_code = ctx.failures.empty() ? kExitPass : kExitFail;
    res.status = ctx.failures.empty() ? "pass" : "fail";
  } catch (const InvalidInput& e) {
    res.exit_code = kExitConfig;
    res.status = "config-error";
    res.message = e.what();
    return res;
  } catch (const json::exception& e) {
    res.exit_code = kExitConfig;
    res.status = "config-error";
    res.message = std::string("config: ") + e.what();
    return res;
  } catch (const std::exception& e) {
    res.exit_code = kExitFail;
    res.status = "error";
    res.message = e.what();
    partial = true;
  }
  res.report = {{"subcommand", cfg.subcommand}, {"status", res.status}, {"failures", ctx.failures},
                {"results", ctx.results},       {"config", effective_config(cfg)}};
  if (!res.message.empty()) res.report["error"] = res.message;
  if (res.message.empty() && !ctx.failures.empty()) res.message = ctx.failures.front();
  fs::create_directories(cfg.out_dir);
  ctx.files.insert(ctx.files.begin(), {"report.json", res.report.dump(2) + "\n"});
  json artifacts = json::array();
  for (const auto& [name, bytes] : ctx.files) {
    write_file(fs::path(cfg.out_dir) / name, bytes);
    artifacts.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    res.artifacts.push_back(name);
  }
  if (ctx.ensemble) {
    auto path = fs::path(cfg.out_dir) / "ensemble.bin";
    write_ensemble(*ctx.ensemble, path.string());
    std::string bytes = read_file(path.string());
    artifacts.push_back({{"file", "ensemble.bin"}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    res.artifacts.push_back("ensemble.bin");
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest;
  manifest["subcommand"] = cfg.subcommand;
  manifest["status"] = res.status;
  manifest["exit_code"] = res.exit_code;
  manifest["config_sha256"] = sha256_hex(effective_config(cfg).dump());
  manifest["seed"] = cfg.seed ? json(*cfg.seed) : json();
  manifest["jobs"] = cfg.jobs;
  manifest["wall_time_seconds"] = wall;
  manifest["partial"] = partial;
  manifest["versions"]["stablelike"] = std::string(kVersion);
  manifest["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                  "." + std::to_string(EIGEN_MINOR_VERSION);
  manifest["versions"]["fftw"] = std::string(fftw_version);
  manifest["versions"]["compiler"] = std::string(__VERSION__);
  manifest["artifacts"] = artifacts;
  write_file(fs::path(cfg.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  res.artifacts.push_back("manifest.json");
  return res;
}

RunResult run_from_cli(const std::string& subcommand, const CliOverrides& cli) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(subcommand, cli);
  } catch (const InvalidInput& e) {
    RunResult r;
    r.status = "config-error";
    r.message = e.what();
    return r;
  } catch (const json::exception& e) {
    RunResult r;
    r.status = "config-error";
    r.message = std::string("config: ") + e.what();
    return r;
  }
  return run(cfg);
}

}  // namespace stablelike
