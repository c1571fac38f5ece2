#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablelike/sampler.hpp"

namespace stablelike {

enum class Regularity { lipschitz, hoelder, sobolev_sample, bounded };

struct CoefficientField {
  std::string name;
  int dim = 1;
  std::function<Mat(const Vec&)> sigma;
  Regularity regularity = Regularity::lipschitz;
  double constant = 0.0;  // Lipschitz constant, or Hoelder constant C
  double exponent = 1.0;  // Hoelder exponent gamma
  double sup_norm = 0.0;
  double min_singular = 0.0;
  std::function<double(const Vec&)> grad_norm;  // |grad sigma|, optional
  double sobolev_norm = NAN;                    // W^{1,p} norm on [-2, 2] for sobolev samples
  double sobolev_p = NAN;
};

struct FieldCheck {
  bool ok;
  double measured_sup;
  double measured_min_singular;
  double margin;  // min of the two bound slacks
};
// Checks the declared bounds on `probes` random points in [-radius, radius]^d.
FieldCheck check_field(const CoefficientField& f, int probes = 10000, double radius = 10.0,
                       std::uint64_t seed = 1);

CoefficientField constant_field(const Mat& a);
// diag(1 + amp sin x_1, 1, ..., 1)
CoefficientField sine_diagonal_field(int dim, double amp = 0.25);
// (1 + min(|x|^gamma, 1)) I
CoefficientField hoelder_field(int dim, double gamma);
// (1 + 0.5 (rho_eps * g)(x_1)) I with g(s) = min(|s|^gamma, 1); gradient in L^p for p (1 - gamma) < 1.
CoefficientField sobolev_sample_field(int dim, double gamma, double mollification, double p);
// Bounded measurable scalar field, e.g. a step: (lo + (hi - lo) 1{x_1 > 0}) I.
CoefficientField step_field(int dim, double lo, double hi);
CoefficientField zero_field(int dim);

// Euler scheme on the grid of `driver` coarsened by `stride`: per step
// X <- X + sigma(X_k) (continuous increment), then each logged jump with the
// pre-jump state.
PathEnsemble euler_solve(const CoefficientField& field, const PathEnsemble& driver, const Vec& x0,
                         std::size_t stride = 1, int jobs = 1);

PathEnsemble euler_solve_two_driver(const CoefficientField& field, const CoefficientField& field_bar,
                                    const PathEnsemble& driver, const PathEnsemble& driver_bar, const Vec& x0,
                                    int jobs = 1);

// sup over r = 2^{-k}, k = 0..K, of the average of g over B(x, r).
std::vector<double> discrete_maximal_diagnostic(const std::function<double(const Vec&)>& g,
                                                const std::vector<Vec>& points, int K = 10);

struct CouplingReport {
  std::vector<double> times;
  std::vector<double> moment;         // E|Z_t|^q
  std::vector<double> moment_stderr;  // bootstrap
  std::vector<double> ell_mean;       // mean of l_t over pairs
  std::vector<double> ell_max;
  bool ell_monotone = true;
  bool exact_zero = true;  // Z_t == 0 bitwise for every pair and time
  double step_x = 0.0, step_y = 0.0;
  double q = 0.0;
};

struct CouplingSetup {
  double horizon = 1.0;
  std::size_t fine_steps = 512;  // driver grid
  std::size_t stride_x = 1;      // Euler stride of the first solution
  std::size_t stride_y = 1;
  Vec x0;
  Vec y0;  // empty means x0
  std::size_t n_pairs = 1000;
  std::uint64_t seed = 1;
  int jobs = 1;
  int maximal_levels = 6;
  int bootstrap_resamples = 2000;
};

// Throws InvalidInput when q is outside (alpha, 1) for alpha < 1 or (alpha, 2) otherwise.
void check_coupling_exponent(double alpha, double q);

CouplingReport coupled_uniqueness_experiment(const CoefficientField& field, const DriverSpec& driver,
                                             double q, const CouplingSetup& setup);

struct PerturbationStudy {
  std::vector<double> eps;
  std::vector<double> moment;     // E|Z_T|^q
  std::vector<double> ratio;      // moment / eps^q
  std::vector<double> stderr_ratio;
  double fitted_rate = 0.0;       // C with E|Z_T|^q <= e^{CT} eps^q
  double spread = 0.0;            // max ratio / min ratio
};
PerturbationStudy perturbation_study(const CoefficientField& field, const DriverSpec& driver, double q,
                                     const std::vector<double>& eps, CouplingSetup setup);

struct StepLadder {
  std::vector<double> h;  // coarse step of each comparison (against h / 2)
  std::vector<double> moment;
  std::vector<double> moment_stderr;
  bool monotone = false;  // strictly decreasing as h decreases
};
// Compares Euler at step 2^{-k} against 2^{-k-1} for k in [k_min, k_max] on one shared driver.
StepLadder step_ladder(const CoefficientField& field, const DriverSpec& driver, double q, int k_min, int k_max,
                       CouplingSetup setup);

}  // namespace stablelike
