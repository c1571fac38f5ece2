#include "stablelike/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "stablelike/error.hpp"
#include "stablelike/rng.hpp"

namespace stablelike {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  double ne = na * nb / (na + nb);
  double sq = std::sqrt(ne);
  return {d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)};
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("least_squares: need >= 2 points");
  const double n = double(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  double slope = sxy / sxx;
  double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return {slope, my - slope * mx, r2};
}

LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw InvalidInput("loglog_fit: non-positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return least_squares(lx, ly);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

double stderr_of_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : sample_sd(v) / std::sqrt(double(v.size()));
}

double bootstrap_stderr(const std::vector<double>& v, int resamples, std::uint64_t seed) {
  if (v.size() < 2 || resamples < 2) return 0.0;
  std::vector<double> means(resamples);
  const std::size_t n = v.size();
  for (int b = 0; b < resamples; ++b) {
    Stream s(seed, std::uint64_t(b), 0xB007u);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[s.next_u64() % n];
    means[b] = acc / double(n);
  }
  return sample_sd(means);
}

namespace {
std::vector<double> centered_distances(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> a(n * n), row(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a[i * n + j] = std::abs(x[i] - x[j]);
      row[i] += a[i * n + j];
    }
  for (std::size_t i = 0; i < n; ++i) {
    total += row[i];
    row[i] /= double(n);
  }
  total /= double(n) * double(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] += total - row[i] - row[j];
  return a;
}

double dcor_from(const std::vector<double>& A, const std::vector<double>& B,
                 const std::vector<std::size_t>& perm) {
  const std::size_t n = perm.size();
  double vxy = 0, vxx = 0, vyy = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double a = A[i * n + j], b = B[perm[i] * n + perm[j]];
      vxy += a * b;
      vxx += a * a;
      vyy += b * b;
    }
  if (vxx <= 0 || vyy <= 0) return 0.0;
  return std::sqrt(std::max(0.0, vxy) / std::sqrt(vxx * vyy));
}
}  // namespace

double distance_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("distance_correlation: size");
  std::vector<std::size_t> id(x.size());
  std::iota(id.begin(), id.end(), 0);
  return dcor_from(centered_distances(x), centered_distances(y), id);
}

PermutationResult distance_correlation_test(const std::vector<double>& x,
                                            const std::vector<double>& y, int permutations,
                                            std::uint64_t seed) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("distance_correlation: size");
  auto A = centered_distances(x), B = centered_distances(y);
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  double stat = dcor_from(A, B, perm);
  int exceed = 0;
  Stream s(seed, 0, 0xDC0Bu);
  for (int k = 0; k < permutations; ++k) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[s.next_u64() % (i + 1)]);
    if (dcor_from(A, B, perm) >= stat) ++exceed;
  }
  return {stat, (exceed + 1.0) / (permutations + 1.0)};
}

MannKendallResult mann_kendall(const std::vector<double>& v) {
  const int n = int(v.size());
  auto score = [](const std::vector<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t j = i + 1; j < w.size(); ++j) s += (w[j] > w[i]) - (w[j] < w[i]);
    return s;
  };
  double s = score(v);
  MannKendallResult out{s, 1.0, 1.0};
  if (n < 3) return out;
  if (n <= 8) {
    // Exact null distribution over all orderings (ties treated as distinct ranks).
    std::vector<double> ranks(n);
    std::iota(ranks.begin(), ranks.end(), 0.0);
    long total = 0, ge = 0, abs_ge = 0;
    do {
      double t = score(ranks);
      ++total;
      if (t >= s) ++ge;
      if (std::abs(t) >= std::abs(s)) ++abs_ge;
    } while (std::next_permutation(ranks.begin(), ranks.end()));
    out.p_increasing = double(ge) / double(total);
    out.p_two_sided = double(abs_ge) / double(total);
    return out;
  }
  std::map<double, int> ties;
  for (double x : v) ++ties[x];
  double var = n * (n - 1.0) * (2.0 * n + 5.0);
  for (auto& [x, t] : ties) var -= t * (t - 1.0) * (2.0 * t + 5.0);
  var /= 18.0;
  double z = s > 0 ? (s - 1) / std::sqrt(var) : s < 0 ? (s + 1) / std::sqrt(var) : 0.0;
  out.p_increasing = 1.0 - normal_cdf(z);
  out.p_two_sided = 2.0 * (1.0 - normal_cdf(std::abs(z)));
  return out;
}

}  // namespace stablelike
