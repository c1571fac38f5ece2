#pragma once
#include <string>
#include <vector>

#include "stablelike/measures.hpp"
#include "stablelike/test_functions.hpp"

namespace stablelike {

struct OperatorValue {
  double value = 0.0;
  double error = 0.0;
};

// f(x + y) - f(x) - y^{(a)} . grad f(x) with the compensator of index a.
double taylor_remainder(const TestFunction& f, const Vec& x, const Vec& y, double alpha);

// Integral of J_f^{(convention)}(x, sigma y) against scale * nu(dy).
OperatorValue nonlocal_operator(const StableMeasure& nu, double scale, const Mat& sigma, double convention,
                                const TestFunction& f, const Vec& x);

OperatorValue apply_A(const LevyModel& model, const TestFunction& f, double t, const Vec& x);

struct LowerOrderValue {
  double value = 0.0;
  double error = 0.0;
  std::string regime;  // which split of the lower index applies
  double theta1_lo = 0, theta1_hi = 0, theta2_lo = 0, theta2_hi = 0;
};
LowerOrderValue apply_B(const LevyModel& model, const TestFunction& f, double t, const Vec& x);

// A + B
OperatorValue apply_L(const LevyModel& model, const TestFunction& f, double t, const Vec& x);

// Integral of (f(x+sigma y) - f(x)) (g(x+sigma y) - g(x)) against scale * nu(dy).
OperatorValue carre_du_champ(const StableMeasure& nu, double scale, const Mat& sigma, const TestFunction& f,
                             const TestFunction& g, const Vec& x);

// sup over points and a dyadic radius ladder of |J_f(x, y)| / |y|^alpha.
double remainder_ratio_estimate(const TestFunction& f, const std::vector<Vec>& points, double alpha,
                                int levels_per_octave = 8, int octaves = 24);

// Tabulated x -> (A + B) f(x) for one-dimensional time-homogeneous models on a
// sinh-stretched grid with local cubic interpolation. Points outside the
// table are evaluated directly.
class GeneratorTable {
 public:
  GeneratorTable(const LevyModel& model, const TestFunction& f, double center, double core_width,
                 double half_range, int nodes = 801);
  double operator()(double x) const;
  double quadrature_error() const { return quad_error_; }
  double interpolation_error() const { return interp_error_; }
  double error_bound() const { return quad_error_ + interp_error_; }

 private:
  double interpolate(double u) const;
  LevyModel model_;
  TestFunction f_;
  double center_, width_, umax_, du_;
  std::vector<double> vals_;
  double quad_error_ = 0.0, interp_error_ = 0.0;
};

}  // namespace stablelike
