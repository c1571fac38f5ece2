#pragma once
#include <complex>
#include <vector>

#include "stablelike/measures.hpp"

namespace stablelike {

enum class SymbolMethod { closed_form, quadrature };

struct SymbolEvaluation {
  Vec xi;
  std::complex<double> value;
  SymbolMethod method;
  double est_error;
};

const char* to_string(SymbolMethod m);

// Integral of (1 - cos r) r^{-1-alpha} over (0, inf).
double radial_constant(double alpha);

// Closed form for symmetric spherical measures; asymmetric input falls back
// to general_symbol.
SymbolEvaluation stable_symbol(const StableMeasure& nu, const Mat& sigma, const Vec& xi);

// Quadrature evaluation of psi for the measure scale * nu with the
// compensation convention of index `convention` (pass nu.alpha() normally).
SymbolEvaluation general_symbol(const StableMeasure& nu, const Mat& sigma, const Vec& xi,
                                double convention, double scale = 1.0);

struct LowerBoundRow {
  Vec xi;
  double re_psi;
  double bound;
  double margin;
};

struct LowerBoundReport {
  double radial;
  double min_singular;
  double nondegeneracy;
  std::vector<LowerBoundRow> rows;
  double worst_margin;
};

// Compares Re psi of nu_{t,x} (from the model) with
// K_alpha * smin(sigma)^alpha * nondeg(lower) * |xi|^alpha.
LowerBoundReport lower_bound_check(const StableMeasure& lower, const LevyModel& model, double t,
                                   const Vec& x, const Mat& sigma, const std::vector<Vec>& xi_set);

struct ContinuityReport {
  double k_measure;     // |nu1 - nu2| <= k * nu1
  double sigma_gap;     // operator norm of sigma1 - sigma2
  double exponent;      // alpha for alpha < 1, beta for alpha == 1, 1 for alpha > 1
  std::vector<double> ratios;  // |psi1 - psi2| / |xi|^alpha
  double fitted_constant;
};

ContinuityReport symbol_continuity_check(const StableMeasure& nu1, const StableMeasure& nu2,
                                         const Mat& sigma1, const Mat& sigma2,
                                         const std::vector<Vec>& xi_set, double beta_at_one = 0.5);

struct ExponentFit {
  std::vector<double> eps;
  std::vector<double> diffs;
  double slope;
};

// |psi_{sigma + eps I}(xi) - psi_sigma(xi)| over the eps ladder, log-log fit.
ExponentFit continuity_exponent(const StableMeasure& nu, const Mat& sigma, const Vec& xi,
                                const std::vector<double>& eps);

}  // namespace stablelike
