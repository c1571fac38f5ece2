#pragma once
#include <functional>
#include <string>
#include <vector>

#include "stablelike/generator.hpp"
#include "stablelike/sampler.hpp"

namespace stablelike {

// Bounded functional of the marginals X_{s_1}, ..., X_{s_k}, s_i <= t1.
struct Conditioning {
  std::string description = "one";
  std::vector<double> times;
  std::function<double(const std::vector<Vec>&)> fn;  // empty means G = 1
};
Conditioning conditioning_one();
Conditioning conditioning_cos(double s, const Vec& xi);
Conditioning conditioning_bump(double s, const Vec& center, double width);

struct MartingaleOptions {
  double generator_scale = 1.0;  // multiplies the leading nonlocal part inside L only
  bool time_homogeneous = true;  // permits tabulation in one dimension
  bool tabulate = true;
  int table_nodes = 801;
  int jobs = 1;
};

struct MartingaleResidualReport {
  std::string test_function;
  double t1 = 0, t2 = 0;
  std::string conditioning;
  double residual = 0;
  double stderr_ = 0;
  std::size_t n_paths = 0;
  double generator_budget = 0;  // (t2 - t1) E|G| times the generator error bound
  double time_budget = 0;       // trapezoid Richardson estimate
  double tolerance() const { return 4.0 * stderr_ + generator_budget + time_budget; }
  bool consistent() const { return std::abs(residual) <= tolerance(); }
  double z() const { return stderr_ > 0 ? residual / stderr_ : 0.0; }
};

MartingaleResidualReport martingale_residual(const PathEnsemble& e, const LevyModel& model, const TestFunction& phi,
                                             double t1, double t2, const Conditioning& G = conditioning_one(),
                                             const MartingaleOptions& opt = {});

using SpaceTimeFn = std::function<double(double, const Vec&)>;

struct OccupationEstimate {
  double value;
  double stderr_;
};
OccupationEstimate occupation_estimate(const PathEnsemble& e, const SpaceTimeFn& f, double t1, double t2,
                                       int bootstrap_resamples = 2000, std::uint64_t seed = 1);

// Parameters of the well-posedness hypothesis that fix the admissible p.
struct KrylovHypothesis {
  int dim = 1;
  double alpha = 1.5;
  double alpha_bar = 0.0;    // 0 when no lower-order part
  double m = 0.0;            // index of the Dini-type modulus; 0 skips that term
  double gamma_sigma = 1.0;
  double gamma_nu = 1.0;
};
double krylov_p_threshold(const KrylovHypothesis& h);

struct KrylovOptions {
  std::vector<double> lambdas{1, 2, 4, 8};
  std::vector<std::pair<double, double>> windows;  // first one is the ratio window
  double p = 8.0;
  Vec support_lo, support_hi;  // box containing the support of the base function
  KrylovHypothesis hypothesis;
  int bootstrap_resamples = 400;
  std::uint64_t seed = 1;
};

struct KrylovReport {
  double p = 0;
  double p_threshold = 0;
  bool in_theory = true;
  std::string warning;
  std::vector<double> lambdas;
  std::vector<std::pair<double, double>> windows;
  // ratio[i][j]: lambda i, window j
  std::vector<std::vector<double>> ratio, ratio_stderr, occupation;
  std::vector<double> lp_norm;  // ||f_lambda||_{L^p(R^d)}
  double ratio_spread = 0;     // max / min over lambdas on the first window
  double trend_p_value = 1;    // Mann-Kendall two-sided
  double window_exponent = 0;  // slope of log E int f vs log window length, lambda = 1
  double constant_estimate = 0;
  double band_lo = 0, band_hi = 0;  // 1 - beta/alpha - 1/p over beta in (d/p, alpha(1 - 1/p))
};

// L^p(R^d) norm of f by tensor-product quadrature on the box [lo, hi].
double lp_norm_box(const TestFunction& f, const Vec& lo, const Vec& hi, double p);

KrylovReport krylov_ratio_sweep(const PathEnsemble& e, const TestFunction& f, const KrylovOptions& opt);

}  // namespace stablelike
