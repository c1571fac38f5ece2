// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [output-dir]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stablelike/fixtures.hpp"
#include "stablelike/rng.hpp"
#include "stablelike/runner.hpp"
#include "stablelike/symbol.hpp"

using namespace stablelike;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

// Pinned tolerances.
constexpr double kSymbolExponentTol = 1e-3;
constexpr double kSymbolDirectionTol = 1e-6;
constexpr double kCfSigmas = 4.0;
constexpr double kLowerBoundMargin = -1e-8;
constexpr double kContinuityTol = 0.05;
constexpr double kMartingaleNullZ = 4.0;
constexpr double kMartingaleControlZ = 6.0;
constexpr double kKrylovSpread = 3.0;
constexpr double kKrylovTrendP = 0.05;
constexpr double kKrylovBandSlack = 0.1;
constexpr double kEr10Tol = 1e-10;
constexpr double kSpectralTol = 1e-8;
constexpr double kLadderSpread = 1.2;
constexpr double kPerturbationSpread = 5.0;
constexpr double kLe5HomogeneityTol = 1e-6;
constexpr double kLe52HomogeneityTol = 1e-10;
constexpr double kSupStability = 0.01;

fs::path g_out;

Vec Vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult go(const std::string& sub, const json& params, const std::map<std::string, double>& tol,
             const std::string& tag, int jobs = 1, std::optional<std::uint64_t> seed = kSeed) {
  ExperimentConfig cfg;
  cfg.subcommand = sub;
  cfg.params = params;
  cfg.tolerances = tol;
  cfg.seed = is_stochastic(sub) ? seed : std::nullopt;
  cfg.jobs = jobs;
  cfg.out_dir = (g_out / tag).string();
  fs::remove_all(cfg.out_dir);
  return run(cfg);
}

void check_exit(Outcome& o, const RunResult& r, const std::string& tag) {
  if (r.exit_code == kExitConfig || r.status == "error") o.require(false, tag + ": " + r.status + " " + r.message);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. psi proportional to |xi|^alpha with a direction-independent constant.
Outcome symbol_identity() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_exp = 0, worst_dir = 0;
  for (const char* fixture : {"isotropic-1d", "isotropic-2d"}) {
    for (double a : {0.5, 1.0, 1.5, 1.9}) {
      json p{{"measure", {{"fixture", fixture}, {"alpha", a}}}, {"directions", 16}};
      std::string tag = std::string("c1-") + fixture + "-" + fmt(a);
      auto r = go("symbol", p, {{"exponent", kSymbolExponentTol}, {"direction", kSymbolDirectionTol}}, tag);
      check_exit(o, r, tag);
      if (r.report.contains("results") && r.report["results"].contains("max_exponent_deviation")) {
        const auto& res = r.report["results"];
        o.require(res["exponent_check_applies"].get<bool>() && res["direction_check_applies"].get<bool>(),
                  tag + ": check not applicable");
        worst_exp = std::max(worst_exp, res["max_exponent_deviation"].get<double>());
        worst_dir = std::max(worst_dir, res["direction_spread"].get<double>());
      }
      o.require(r.exit_code == kExitPass, tag + " " + r.message);
    }
  }
  // Closed form against direct quadrature of the Levy integral.
  double worst_quad = 0;
  for (double a : {0.5, 1.5}) {
    StableMeasure nu = measure_from_config(json{{"fixture", "isotropic-2d"}, {"alpha", a}});
    for (const Vec& xi : {Vec2(1.0, 0.0), Vec2(0.3, -2.0)}) {
      auto cf = stable_symbol(nu, Mat::Identity(2, 2), xi);
      auto qd = general_symbol(nu, Mat::Identity(2, 2), xi, a);
      worst_quad = std::max(worst_quad, std::abs(cf.value - qd.value) / std::abs(cf.value));
    }
  }
  o.require(worst_quad <= 1e-6, "closed form differs from quadrature by " + fmt(worst_quad));
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, "runtime " + fmt(secs) + " s");
  o.note("max exponent deviation " + fmt(worst_exp) + ", direction spread " + fmt(worst_dir) +
         ", quadrature gap " + fmt(worst_quad) + ", " + fmt(secs) + " s");
  return o;
}

// 2. Empirical characteristic function of the cylindrical driver.
Outcome sampler_fidelity() {
  Outcome o;
  for (double a : {0.7, 1.0, 1.5}) {
    const auto t0 = std::chrono::steady_clock::now();
    json p{{"measure", {{"fixture", "cylindrical-2d-axes"}, {"alpha", a}}},
           {"n_paths", 100000},
           {"steps", 1},
           {"horizon", 1.0},
           {"cf_lo", -2.0},
           {"cf_hi", 2.0},
           {"cf_n", 5}};
    std::string tag = "c2-alpha-" + fmt(a);
    auto r = go("sample", p, {{"cf_sigmas", kCfSigmas}}, tag);
    check_exit(o, r, tag);
    const double secs = seconds_since(t0);
    o.require(r.exit_code == kExitPass, tag + " " + r.message);
    o.require(secs < 60.0, tag + " runtime " + fmt(secs) + " s");
    if (r.report["results"].contains("max_cf_error"))
      o.note("alpha " + fmt(a) + ": max error " + fmt(r.report["results"]["max_cf_error"].get<double>()) + " vs " +
             fmt(r.report["results"]["bound"].get<double>()) + " (" + r.report["results"]["method"].get<std::string>() +
             ", " + fmt(secs) + " s)");
  }
  return o;
}

// 3. Re psi lower bound over random measures and coefficient matrices.
Outcome nondegeneracy_bound() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = INFINITY;
  int configs = 0;
  for (std::uint64_t c = 0; configs < 50; ++c) {
    Stream s(kSeed, c, 0xACC3);
    const int d = 2 + int(s.next_u32() % 2);
    const double alpha = 0.2 + 1.75 * s.uniform();
    const int pairs = d + int(s.next_u32() % 4);
    std::vector<Atom> atoms;
    for (int k = 0; k < pairs; ++k) {
      Vec v(d);
      for (int i = 0; i < d; ++i) v[i] = s.normal();
      v.normalize();
      const double w = 0.2 + 2.0 * s.uniform();
      atoms.push_back({v, w});
      atoms.push_back({-v, w});
    }
    StableMeasure nu(alpha, SphericalMeasure::from_atoms(d, atoms));
    if (!(nondegeneracy_constant(nu.spherical(), alpha) > 0.0)) continue;
    Mat sigma(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) sigma(i, j) = (i == j ? 1.0 : 0.0) + 0.6 * s.normal();
    if (Eigen::JacobiSVD<Mat>(sigma).singularValues().minCoeff() < 0.05) continue;
    // The model's measure dominates a scaled copy of itself.
    auto model = LevyModel::constant(nu, sigma);
    StableMeasure lower = nu.scaled(0.25 + 0.75 * s.uniform());
    std::vector<Vec> xs;
    for (int k = 0; k < 12; ++k) {
      Vec xi(d);
      for (int i = 0; i < d; ++i) xi[i] = s.normal();
      xs.push_back(xi * std::exp(2.0 * s.uniform() - 1.0));
    }
    auto rep = lower_bound_check(lower, model, 0.0, Vec::Zero(d), sigma, xs);
    worst = std::min(worst, rep.worst_margin);
    ++configs;
  }
  const double secs = seconds_since(t0);
  o.require(worst >= kLowerBoundMargin, "worst margin " + fmt(worst));
  o.require(secs < 30.0, "runtime " + fmt(secs) + " s");
  o.note(std::to_string(configs) + " configurations, worst margin " + fmt(worst) + ", " + fmt(secs) + " s");
  return o;
}

// 4. |psi_{sigma + eps I} - psi_sigma| ~ eps^{beta}, beta = alpha for alpha < 1 and 1 above.
Outcome symbol_continuity() {
  Outcome o;
  std::vector<double> eps;
  for (int k = 3; k <= 10; ++k) eps.push_back(std::ldexp(1.0, -k));
  // Below one the sharp exponent shows where xi . sigma theta vanishes on an atom.
  for (double a : {0.5, 0.8}) {
    StableMeasure m(a, SphericalMeasure::from_atoms(2, {{Vec2(0, 1), 1.0}, {Vec2(0, -1), 1.0}}));
    Mat s(2, 2);
    s << 1, -1, 0, 1;
    auto f = continuity_exponent(m, s, Vec2(1, 1), eps);
    o.require(std::abs(f.slope - a) <= kContinuityTol, "alpha " + fmt(a) + " slope " + fmt(f.slope));
    o.note("alpha " + fmt(a) + ": slope " + fmt(f.slope));
  }
  for (double a : {1.3, 1.7}) {
    auto m = measure_from_config(json{{"fixture", "cylindrical-2d-axes"}, {"alpha", a}});
    Mat s(2, 2);
    s << 1.0, 0.3, -0.2, 0.8;
    auto f = continuity_exponent(m, s, Vec2(0.7, -1.1), eps);
    o.require(std::abs(f.slope - 1.0) <= kContinuityTol, "alpha " + fmt(a) + " slope " + fmt(f.slope));
    o.note("alpha " + fmt(a) + ": slope " + fmt(f.slope));
  }
  return o;
}

// 5. Martingale-problem residuals and the doubled-measure negative control.
Outcome martingale_null() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  json p{{"measure", "isotropic-1d"},
         {"n_paths", 100000},
         {"test_functions",
          {json{{"type", "gaussian_bump"}, {"center", {0.0}}, {"width", 0.8}},
           json{{"type", "gaussian_bump"}, {"center", {0.5}}, {"width", 0.6}},
           json{{"type", "gaussian_bump"}, {"center", {-0.7}}, {"width", 1.0}}}},
         {"control_scale", 2.0}};
  auto r = go("mgp-check", p, {{"control_z", kMartingaleControlZ}}, "c5");
  check_exit(o, r, "mgp-check");
  double null_z = 0, control_z = INFINITY;
  if (r.report["results"].contains("rows")) {
    for (const auto& row : r.report["results"]["rows"]) {
      const double z = std::abs(row["z"].get<double>());
      if (row["scale"].get<double>() == 1.0)
        null_z = std::max(null_z, z);
      else
        control_z = std::min(control_z, z);
    }
  }
  const double secs = seconds_since(t0);
  o.require(null_z <= kMartingaleNullZ, "null |z| " + fmt(null_z));
  o.require(control_z > kMartingaleControlZ, "control |z| " + fmt(control_z));
  o.require(secs < 120.0, "runtime " + fmt(secs) + " s");
  o.note("max null |z| " + fmt(null_z) + ", min control |z| " + fmt(control_z) + ", " + fmt(secs) + " s");
  return o;
}

// 6. Occupation-time ratio bounded in lambda; window exponent inside the band.
Outcome krylov_bound() {
  Outcome o;
  json p{{"measure", "isotropic-1d"}, {"lambdas", {1, 2, 4, 8}}, {"p", 8.0}};
  auto r = go("krylov", p,
              {{"spread", kKrylovSpread}, {"trend_p", kKrylovTrendP}, {"band_slack", kKrylovBandSlack}}, "c6");
  check_exit(o, r, "krylov");
  o.require(r.exit_code == kExitPass, r.message);
  const auto& res = r.report["results"];
  if (res.contains("ratio_spread"))
    o.note("spread " + fmt(res["ratio_spread"].get<double>()) + ", trend p " +
           fmt(res["trend_p_value"].get<double>()) + ", window exponent " +
           fmt(res["window_exponent"].get<double>()) + " in [" + fmt(res["exponent_band"][0].get<double>()) +
           ", 1]");
  return o;
}

// 7. Resolvent equation: pointwise equality, p = 2 constant, p = 4 refinement.
Outcome resolvent_estimates() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  json p{{"measure", {{"fixture", "cylindrical-2d-axes"}, {"alpha", 1.2}}},
         {"forcing", "kink"},
         {"p", 4.0},
         {"lambda", 1.0},
         {"resolutions", {64, 128, 256}}};
  auto r = go("pde", p, {{"er10", kEr10Tol}, {"spectral", kSpectralTol}, {"ladder_spread", kLadderSpread}}, "c7");
  check_exit(o, r, "pde");
  o.require(r.exit_code == kExitPass, r.message);
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  const auto& res = r.report["results"];
  if (res.contains("constant_forcing_gap"))
    o.note("constant-forcing gap " + fmt(res["constant_forcing_gap"].get<double>()) + ", p=2 gap " +
           fmt(res["p2_relative_gap"].get<double>()) + ", p=4 ladder spread " +
           fmt(res["ladder_spread"].get<double>()) + ", " + fmt(secs) + " s");
  return o;
}

// 8. Coupled solutions: exact zero, step ladder, Lipschitz perturbation.
Outcome pathwise_uniqueness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const json driver = "isotropic-1d";
  auto c = go("uniqueness",
              {{"mode", "coupled"}, {"field", {{"type", "hoelder"}, {"dim", 1}, {"gamma", 0.9}}}, {"driver", driver},
               {"n_pairs", 10000}, {"fine_steps", 256}},
              {}, "c8-coupled");
  check_exit(o, c, "coupled");
  o.require(c.report["results"].value("exact_zero", false), "identical coupling not bitwise zero");
  auto l = go("uniqueness",
              {{"mode", "ladder"}, {"field", {{"type", "hoelder"}, {"dim", 1}, {"gamma", 0.9}}}, {"driver", driver},
               {"n_pairs", 10000}, {"k_min", 5}, {"k_max", 9}},
              {}, "c8-ladder");
  check_exit(o, l, "ladder");
  o.require(l.report["results"].value("monotone", false), "step ladder not monotone");
  std::string ladder = slurp(g_out / "c8-ladder" / "ladder.csv");
  std::string moments;
  {
    std::istringstream in(ladder);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      auto a = line.find(','), b = line.find(',', a + 1);
      moments += (moments.empty() ? "" : " ") + fmt(std::stod(line.substr(a + 1, b - a - 1)));
    }
  }
  auto pt = go("uniqueness",
               {{"mode", "perturbation"}, {"field", "sine-diagonal-1d"}, {"driver", driver}, {"n_pairs", 10000},
                {"x0", {0.3}}, {"eps", {1e-1, 1e-2, 1e-3, 1e-4}}},
               {{"spread", kPerturbationSpread}}, "c8-perturbation");
  check_exit(o, pt, "perturbation");
  const double spread = pt.report["results"].value("spread", INFINITY);
  o.require(spread <= kPerturbationSpread, "perturbation spread " + fmt(spread));
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt(secs) + " s");
  o.note("ladder moments " + moments + ", perturbation spread " + fmt(spread) + ", " + fmt(secs) + " s");
  return o;
}

// 9. Elementary inequalities.
Outcome inequality_suite() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = go("ineq-suite", {{"abs_power_pairs", 1000000}},
              {{"le5_homogeneity", kLe5HomogeneityTol}, {"le52_homogeneity", kLe52HomogeneityTol}}, "c9");
  check_exit(o, r, "ineq-suite");
  const auto& res = r.report["results"];
  if (res.contains("abs_power")) {
    const auto pairs = res["abs_power"]["pairs"].get<std::size_t>();
    const auto viol = res["abs_power"]["violations"].get<std::size_t>();
    o.require(pairs >= 1000000 && viol == 0, "abs_power " + std::to_string(viol) + " violations");
    o.require(res["le5_homogeneity_gap"].get<double>() <= kLe5HomogeneityTol, "le5 homogeneity");
    o.require(res["le52_homogeneity_gap"].get<double>() <= kLe52HomogeneityTol, "le52 homogeneity");
    std::string sups;
    for (const auto& s : res["searches"]) {
      const auto h = s["sup_history"].get<std::vector<double>>();
      const bool stable = h.size() >= 2 && std::abs(h.back() - h[h.size() - 2]) <= kSupStability * h[h.size() - 2];
      o.require(stable, s["lemma"].get<std::string>() + " " + s["setting"].get<std::string>() + " not stable");
      sups += (sups.empty() ? "" : ", ") + s["lemma"].get<std::string>() + " " + fmt(s["sup_ratio"].get<double>());
    }
    o.note("sup ratios: " + sups);
  }
  const double secs = seconds_since(t0);
  o.require(secs < 120.0, "runtime " + fmt(secs) + " s");
  o.note(fmt(secs) + " s");
  return o;
}

// 10. Byte-identical CSV at one and eight workers.
Outcome reproducibility() {
  Outcome o;
  struct Case {
    std::string sub;
    json params;
  };
  const std::vector<Case> cases = {
      {"symbol", json::object()},
      {"sample", {{"measure", "cylindrical-2d-axes"}, {"n_paths", 20000}, {"steps", 4}}},
      {"generator", json::object()},
      {"sde", {{"n_paths", 4000}}},
      {"uniqueness", {{"mode", "coupled"}, {"n_pairs", 2000}, {"fine_steps", 128}, {"y0", {0.01}}}},
      {"uniqueness", {{"mode", "ladder"}, {"n_pairs", 2000}, {"k_min", 3}, {"k_max", 6}}},
      {"mgp-check", {{"n_paths", 20000}}},
      {"krylov", {{"n_paths", 4000}}},
      {"pde", {{"resolutions", {32, 64, 128}}}},
      {"ineq-suite", {{"abs_power_pairs", 50000}, {"le52_budget", 250000}, {"le5_budget", 512}}},
      {"fixtures", json::object()},
  };
  int compared = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    std::string tag = "c10-" + std::to_string(i) + "-" + c.sub;
    auto a = go(c.sub, c.params, {}, tag + "-j1", 1);
    auto b = go(c.sub, c.params, {}, tag + "-j8", 8);
    check_exit(o, a, tag);
    check_exit(o, b, tag);
    for (const auto& name : a.artifacts) {
      if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
      const std::string x = slurp(g_out / (tag + "-j1") / name), y = slurp(g_out / (tag + "-j8") / name);
      o.require(!x.empty() && x == y, tag + "/" + name + " differs");
      ++compared;
    }
  }
  o.require(compared >= int(cases.size()), "only " + std::to_string(compared) + " CSV files compared");
  o.note(std::to_string(compared) + " CSV files identical across 1 and 8 workers");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  g_out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(g_out);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"symbol identity", symbol_identity},
      {"sampler fidelity", sampler_fidelity},
      {"nondegeneracy lower bound", nondegeneracy_bound},
      {"symbol continuity exponent", symbol_continuity},
      {"martingale-problem null test", martingale_null},
      {"occupation-time boundedness", krylov_bound},
      {"resolvent estimates", resolvent_estimates},
      {"pathwise uniqueness", pathwise_uniqueness},
      {"inequality suite", inequality_suite},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2zu %-30s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
