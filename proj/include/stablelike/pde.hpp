#pragma once
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablelike/linalg.hpp"
#include "stablelike/sampler.hpp"

namespace stablelike {

using cplx = std::complex<double>;

// Real field on the periodic box [0, period)^d with n points per axis (n a
// power of two). Index order is row-major with the last axis fastest.
class GridField {
 public:
  GridField() = default;
  GridField(int dim, int n, double period);
  static GridField sample(int dim, int n, double period, const std::function<double(const Vec&)>& f);
  // Inverse transform of a full spectrum (unnormalized forward convention), real part kept.
  static GridField from_spectrum(int dim, int n, double period, const std::vector<cplx>& spec);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double period() const { return period_; }
  std::size_t size() const { return values_.size(); }
  double cell_volume() const;
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values();
  Vec point(std::size_t i) const;
  Vec wavevector(std::size_t i) const;  // 2 pi k / period with k in [-n/2, n/2)
  const std::vector<cplx>& spectrum() const;

 private:
  int dim_ = 0, n_ = 0;
  double period_ = 0.0;
  std::vector<double> values_;
  mutable std::vector<cplx> spec_;
  mutable bool spec_valid_ = false;
};

double lp_norm(const GridField& f, double p);
double spectral_l2_norm(const GridField& f);
double max_abs(const GridField& f);
double roundtrip_error(const GridField& f);  // max relative error of forward then inverse

GridField apply_multiplier(const GridField& f, const std::function<cplx(const Vec&)>& m);
GridField frac_laplacian(const GridField& f, double alpha);
double fractional_l2(const GridField& f, double beta);  // ||Delta^{beta/2} f||_2 on the spectral side
double gradient_l2(const GridField& f);                  // ||grad f||_2 from spectral derivatives in real space

// psi on the grid wavenumbers.
struct GridSymbol {
  std::string description;
  int dim = 0, n = 0;
  double period = 0.0;
  std::vector<cplx> values;
};
GridSymbol grid_symbol(const StableMeasure& nu, const Mat& sigma, int n, double period);
GridSymbol grid_symbol(const std::string& description, int dim, int n, double period,
                       const std::function<cplx(const Vec&)>& psi);
// Throws InvalidSymbol when Re psi < 0 at a mode.
void check_symbol(const GridSymbol& s);

// Piecewise-constant-in-time field: values[k] on [times[k], times[k+1]).
struct PiecewiseField {
  std::vector<double> times;
  std::vector<GridField> values;
  static PiecewiseField constant(const GridField& f, double horizon, std::size_t steps);
  static PiecewiseField sample(int dim, int n, double period, const std::vector<double>& times,
                               const std::function<double(double, const Vec&)>& f);
};

struct ResolventSolution {
  std::vector<double> times;
  std::vector<GridField> u;
  double lambda = 0.0;
  std::string symbol;
  std::string method = "spectral";
  // Spectral state for exact evaluation inside intervals.
  std::vector<cplx> z;                      // lambda + psi
  std::vector<std::vector<cplx>> f_hat;     // per interval
  std::vector<std::vector<cplx>> u_hat;     // per time
  int dim = 0, n = 0;
  double period = 0.0;

  std::vector<cplx> spectrum_at(double t) const;
  GridField at(double t) const;
};

ResolventSolution spectral_resolvent(const GridSymbol& psi, const PiecewiseField& f, double lambda);

// max over grid times of ||u(t) - int_0^t ((L - lambda) u + f) ds||_2, time integral by Gauss-Legendre.
double weak_residual(const ResolventSolution& sol, int nodes_per_interval = 16);

struct FeynmanKacResult {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<double> value, stderr_;
  std::size_t n_paths = 0;
};
// u(t, x) = E int_0^t e^{-lambda r} f(t - r, x + X_r) dr with one path per (t, x) probe, trapezoid on `steps` steps.
FeynmanKacResult feynman_kac_resolvent(const DriverSpec& driver, const std::function<double(double, const Vec&)>& f,
                                       double lambda, const std::vector<std::pair<double, Vec>>& probes,
                                       std::size_t n_paths, std::size_t steps, std::uint64_t seed, int jobs = 1);

struct EstimateReport {
  double p = 2;
  std::vector<double> er10_lhs, er10_rhs;  // ||u(t)||_p^p and its bound at every grid time
  double er10_max_ratio = 0;               // max lhs / rhs
  double maximal_ratio = 0;                // ||Delta^{alpha/2} u||_{L^p(T)} / ||f||_{L^p(T)}
  double maximal_ratio_spectral = NAN;     // p = 2 only, closed form per mode
  double spectral_bound = NAN;             // sup |xi|^alpha / (lambda + Re psi)
};
EstimateReport estimate_checks(const ResolventSolution& sol, const PiecewiseField& f, double p, double alpha,
                               int nodes_per_interval = 16);

struct RefinementLadder {
  std::vector<int> n;
  std::vector<double> ratio;
  double spread = 0;  // max / min
  double trend_p_value = 1;
};
RefinementLadder resolvent_refinement_ladder(const StableMeasure& nu, const Mat& sigma, double period,
                                             const std::function<double(double, const Vec&)>& f, double horizon,
                                             std::size_t steps, double lambda, double p,
                                             const std::vector<int>& resolutions);

}  // namespace stablelike
