#pragma once
#include <functional>
#include <utility>
#include <vector>

namespace stablelike {

using Fn1 = std::function<double(double)>;

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

// One 21-point Kronrod panel with the embedded 10-point Gauss estimate.
QuadResult gk21(const Fn1& f, double a, double b);

// Globally adaptive Gauss-Kronrod on [a,b] with optional interior breakpoints.
QuadResult integrate(const Fn1& f, double a, double b, const QuadOptions& opt = {},
                     const std::vector<double>& breakpoints = {});

// Integral of g(r) r^{-1-beta} over [0, r_s] when g(r) = O(r^k), k > beta.
// The substitution r = r_s t^{1/(k-beta)} removes the endpoint singularity.
QuadResult integrate_power_singular(const Fn1& g, double r_s, double beta, double k,
                                    const QuadOptions& opt = {});

// Integral of cos(a + b r) r^{-s} over [R, inf). Asymptotic series with an
// explicit remainder bound; short numerical lead-in when |b| R is small.
QuadResult cos_power_tail(double a, double b, double R, double s, const QuadOptions& opt = {});

// Geometric-panel integration of f on [a, b] with b/a potentially huge.
QuadResult integrate_geometric(const Fn1& f, double a, double b, double ratio,
                               const QuadOptions& opt = {});

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

// 1 - cos x without cancellation.
double one_minus_cos(double x);
// x - sin x without cancellation.
double x_minus_sin(double x);

}  // namespace stablelike
