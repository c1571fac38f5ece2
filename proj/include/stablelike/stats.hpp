#pragma once
#include <cstdint>
#include <functional>
#include <vector>

namespace stablelike {

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct LinearFit {
  double slope;
  double intercept;
  double r2;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);
// Fits log y = slope * log x + c.
LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);
double stderr_of_mean(const std::vector<double>& v);

// Bootstrap standard error of the mean with deterministic resampling.
double bootstrap_stderr(const std::vector<double>& v, int resamples, std::uint64_t seed);

// Sample distance correlation (V-statistic form).
double distance_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct PermutationResult {
  double statistic;
  double p_value;
};
PermutationResult distance_correlation_test(const std::vector<double>& x,
                                            const std::vector<double>& y, int permutations,
                                            std::uint64_t seed);

struct MannKendallResult {
  double s;
  double p_increasing;  // one-sided, upward trend
  double p_two_sided;
};
MannKendallResult mann_kendall(const std::vector<double>& series);

double normal_cdf(double z);

}  // namespace stablelike
