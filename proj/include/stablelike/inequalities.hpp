#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablelike/rng.hpp"
#include "stablelike/linalg.hpp"

namespace stablelike {

// One evaluated instance of an elementary inequality LHS <= constant * shape.
struct InequalityCase {
  std::string lemma;           // "le5-i", "le5-ii", "le5-iii", "le52", "abs_power"
  std::vector<double> inputs;  // flattened arguments, lemma specific
  double lhs = 0.0;
  double shape = 0.0;          // bound without its constant
  double constant = 0.0;       // declared or running-max constant
  double rhs = 0.0;            // constant * shape
  double margin = 0.0;         // rhs - lhs, kept when negative
  double ratio = 0.0;          // lhs / shape, 0 when both vanish
  double oracle_error = 0.0;   // absolute error estimate of lhs
  // le5 only: the cosine-difference integral and the second integral.
  double cos_part = 0.0;
  double second_part = 0.0;
};

// Declares constant = ratio when constant is NaN, so margin is zero.
InequalityCase le5_check(double a, double b, double alpha, double beta = 0.5, double constant = NAN);
InequalityCase le52_check(const Vec& x, const Vec& y, double q, double constant = NAN);
// Constant is 1; rounding slack of a few ulps is absorbed in the margin test.
InequalityCase abs_power_check(const Vec& x, const Vec& y, double q);
bool violates(const InequalityCase& c);

// Tail handling of the le5 integrals. The analytic tail starts at R; the
// comparison replaces it with plain quadrature over [R, 10R].
struct Le5TailCheck {
  double lhs_analytic_tail = 0.0;
  double lhs_quadrature_tail = 0.0;
  double declared_bound = 0.0;
  double tail_start = 0.0;  // R in the original variable r
};
Le5TailCheck le5_tail_consistency(double a, double b, double alpha, double beta = 0.5);

// Draws one input and evaluates it. Draws for index i use Stream(seed, i, channel).
using CaseSampler = std::function<InequalityCase(Stream&)>;

CaseSampler le5_sampler(double alpha, double beta = 0.5);
// Mixture of generic, near-collinear, near-equal and antipodal pairs; both
// sides of |x - y| = |x| / 2 are represented.
CaseSampler le52_sampler(int dim, double q);
CaseSampler abs_power_sampler(int dim, double q);

struct SupSearchResult {
  std::string lemma;
  double sup_ratio = 0.0;
  InequalityCase argmax;
  bool stable = false;               // last doubling moved the sup by < 1%
  std::vector<std::size_t> budgets;  // cumulative sample counts
  std::vector<double> sup_history;
  std::vector<InequalityCase> worst;  // largest ratios, descending
  std::size_t violations = 0;         // abs_power only
};

// Doubles the sample from `initial` until `budget`. Ties go to the lower index.
SupSearchResult sup_ratio_search(const std::string& lemma, const CaseSampler& sampler, std::size_t initial,
                                 std::size_t budget, std::uint64_t seed, int jobs = 1, std::size_t keep_worst = 10);

struct AbsPowerSweep {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
  std::vector<double> qs;
};
// Splits n_pairs evenly over q in {0.1, ..., 0.9}.
AbsPowerSweep abs_power_sweep(std::size_t n_pairs, int dim, std::uint64_t seed, int jobs = 1);

}  // namespace stablelike
