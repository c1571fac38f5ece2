#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablelike/measures.hpp"
#include "stablelike/rng.hpp"

namespace stablelike {

// Draws from the symmetric alpha-stable law with characteristic function
// exp(-t * scale * |u|^alpha) (Chambers-Mallows-Stuck).
double symmetric_stable(double alpha, double scale, double t, Stream& s);
std::vector<double> sample_1d_symmetric_stable(double alpha, double scale, double t, std::size_t n,
                                               Stream& s);
// Positive (alpha/2)-stable variable with Laplace transform exp(-lambda^{alpha/2}) (Kanter).
double positive_stable(double index, Stream& s);

enum class DriverMethod { automatic, exact, truncated };

struct DriverSpec {
  StableMeasure measure;
  Mat sigma;                                 // used when sigma_t is empty
  std::function<Mat(double)> sigma_t;        // optional time-dependent sigma
  Vec drift;                                 // alpha == 1 only; empty means zero
  double scale = 1.0;                        // constant modulation of the measure
  double delta = 0.0;                        // small-jump cutoff, 0 selects the default
  double max_jumps_per_path = 1e4;
  double l2_error_fraction = 1e-3;
  DriverMethod method = DriverMethod::automatic;
  std::uint32_t channel = 0;
  Vec start;                                 // empty means origin

  explicit DriverSpec(StableMeasure m) : measure(std::move(m)), sigma(Mat::Identity(measure.dim(), measure.dim())) {}
  Mat sigma_at(double t) const { return sigma_t ? sigma_t(t) : sigma; }
};

// Time-gridded paths plus the jumps above the cutoff. Increments per step are
// cont(step) followed by the logged jumps of that step in time order.
struct PathEnsemble {
  int dim = 0;
  std::size_t n_paths = 0;
  std::vector<double> grid;
  std::vector<double> states;  // n_paths x grid.size() x dim
  std::vector<double> cont;    // n_paths x (grid.size() - 1) x dim
  // Jump log in compressed rows: jumps of path p are [offsets[p], offsets[p+1]).
  std::vector<std::size_t> jump_offsets;
  std::vector<double> jump_times;
  std::vector<std::uint32_t> jump_steps;
  std::vector<double> jump_values;  // flat, dim per jump
  std::uint64_t seed = 0;
  std::uint32_t channel = 0;
  double delta = 0.0;
  double truncation_l2 = 0.0;  // bound on E|dropped small jumps|^2 over the horizon
  bool error_target_met = true;
  std::string method;
  std::string description;
  std::uint64_t proposals = 0;  // thinning telemetry: excess proposals
  std::uint64_t accepted = 0;

  std::size_t steps() const { return grid.size() - 1; }
  double* state(std::size_t p, std::size_t k) { return &states[(p * grid.size() + k) * dim]; }
  const double* state(std::size_t p, std::size_t k) const { return &states[(p * grid.size() + k) * dim]; }
  const double* cont_inc(std::size_t p, std::size_t k) const { return &cont[(p * steps() + k) * dim]; }
  Vec state_vec(std::size_t p, std::size_t k) const {
    return Eigen::Map<const Vec>(state(p, k), dim);
  }
  std::size_t jump_count(std::size_t p) const { return jump_offsets[p + 1] - jump_offsets[p]; }
  Vec start_state() const { return n_paths ? state_vec(0, 0) : Vec(); }
  // Component j of every path at grid index k.
  std::vector<double> marginal(std::size_t k, int j) const;
};

struct DeltaChoice {
  double delta;
  double expected_jumps;
  double l2_error;
  bool target_met;
};
DeltaChoice default_delta(const DriverSpec& spec, double horizon);
bool exact_decomposition_available(const DriverSpec& spec);

PathEnsemble sample_driver(const DriverSpec& spec, const std::vector<double>& grid, std::size_t n_paths,
                           std::uint64_t seed, int jobs = 1);

struct ThinningOptions {
  double delta = 0.01;
  Vec x0;
  std::uint32_t channel = 0;
  int jobs = 1;
};
PathEnsemble thinning_sample(const LevyModel& model, const std::vector<double>& grid, std::size_t n_paths,
                             std::uint64_t seed, const ThinningOptions& opt);

std::vector<double> uniform_grid(double horizon, std::size_t steps);

void write_ensemble(const PathEnsemble& e, const std::string& path);
PathEnsemble read_ensemble(const std::string& path);

}  // namespace stablelike
