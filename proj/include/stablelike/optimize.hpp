#pragma once
#include <functional>
#include <vector>

namespace stablelike {

struct MinimizeResult {
  std::vector<double> x;
  double value;
  int iterations;
};

// Nelder-Mead simplex minimization starting from x0 with initial step.
MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x0, double step, double ftol = 1e-14,
                           int max_iter = 2000);

}  // namespace stablelike
