#include "stablelike/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <queue>

#include "stablelike/error.hpp"

namespace stablelike {

namespace {

constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208931262500, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

QuadResult gk21(const Fn1& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double k = kWgk[10] * fc, g = 0.0;
  for (int j = 0; j < 10; ++j) {
    double dx = h * kXgk[j];
    double s = f(c - dx) + f(c + dx);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  QuadResult r;
  r.value = k * h;
  r.error = std::abs((k - g) * h);
  r.evaluations = 21;
  if (!std::isfinite(r.value)) {
    r.converged = false;
    r.error = INFINITY;
  }
  return r;
}

QuadResult integrate(const Fn1& f, double a, double b, const QuadOptions& opt,
                     const std::vector<double>& breakpoints) {
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  std::priority_queue<Panel> heap;
  double total = 0.0, err = 0.0;
  int evals = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = gk21(f, cuts[i], cuts[i + 1]);
    heap.push({cuts[i], cuts[i + 1], r.value, r.error});
    total += r.value;
    err += r.error;
    evals += r.evaluations;
  }
  int panels = int(heap.size());
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (panels >= opt.max_intervals || !std::isfinite(err)) break;
    Panel p = heap.top();
    double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) break;
    heap.pop();
    auto l = gk21(f, p.a, m), r = gk21(f, m, p.b);
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    evals += 42;
    heap.push({p.a, m, l.value, l.error});
    heap.push({m, p.b, r.value, r.error});
    ++panels;
  }
  // Resum to shed accumulated rounding from the incremental updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  QuadResult out;
  out.value = sign * total;
  out.error = err;
  out.evaluations = evals;
  out.converged = std::isfinite(err) && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  return out;
}

QuadResult integrate_power_singular(const Fn1& g, double r_s, double beta, double k,
                                    const QuadOptions& opt) {
  if (!(k > beta)) throw InvalidInput("integrate_power_singular: need k > beta");
  if (r_s <= 0.0) return {};
  double e = k - beta;
  double pre = std::pow(r_s, -beta) / e;
  auto h = [&](double t) {
    if (t <= 0.0) return 0.0;
    double r = r_s * std::pow(t, 1.0 / e);
    double tb = std::pow(t, -beta / e - 1.0);
    return g(r) * tb;
  };
  auto r = integrate(h, 0.0, 1.0, {opt.abs_tol / pre, opt.rel_tol, opt.max_intervals});
  r.value *= pre;
  r.error *= pre;
  return r;
}

namespace {
QuadResult cos_power_asymptotic(double a, double b, double R, double s);
}

QuadResult cos_power_tail(double a, double b, double R, double s, const QuadOptions& opt) {
  if (R <= 0.0) throw InvalidInput("cos_power_tail: R must be positive");
  QuadResult out;
  if (b == 0.0) {
    if (s <= 1.0) throw DivergentIntegral("cos_power_tail: non-oscillatory tail with s <= 1");
    out.value = std::cos(a) * std::pow(R, 1.0 - s) / (s - 1.0);
    return out;
  }
  double ab = std::abs(b);
  if (ab * R < 40.0) {
    double R2 = 40.0 / ab;
    auto lead = integrate_geometric([&](double r) { return std::cos(a + b * r) * std::pow(r, -s); }, R, R2,
                                    2.0, opt);
    auto rest = cos_power_asymptotic(a, b, R2, s);
    out.value = lead.value + rest.value;
    out.error = lead.error + rest.error;
    out.evaluations = lead.evaluations;
    out.converged = lead.converged && rest.converged;
    return out;
  }
  return cos_power_asymptotic(a, b, R, s);
}

namespace {
QuadResult cos_power_asymptotic(double a, double b, double R, double s) {
  QuadResult out;
  double ab = std::abs(b);
  // I = -e^{i(a+bR)} sum_n (s)_n / (ib)^{n+1} R^{-s-n}
  std::complex<double> ib(0.0, b);
  std::complex<double> acc = 0.0;
  double poch = 1.0;  // (s)_n
  std::complex<double> ibp = ib;
  double Rp = std::pow(R, -s);
  double bound = INFINITY;
  for (int n = 0; n < 60; ++n) {
    std::complex<double> term = poch / ibp * Rp;
    acc += term;
    double next_poch = poch * (s + n);
    double rem = next_poch / std::pow(ab, n + 1) * std::pow(R, -s - n) / (s + n);
    if (rem < bound) bound = rem;
    if (rem < 1e-18 || (s + n) / (ab * R) > 0.5) {
      bound = rem;
      break;
    }
    poch = next_poch;
    ibp *= ib;
    Rp /= R;
  }
  std::complex<double> val = -std::exp(std::complex<double>(0.0, a + b * R)) * acc;
  out.value = val.real();
  out.error = bound;
  return out;
}
}  // namespace

QuadResult integrate_geometric(const Fn1& f, double a, double b, double ratio,
                               const QuadOptions& opt) {
  QuadResult out;
  if (!(b > a) || a <= 0.0) return out;
  double lo = a;
  while (lo < b) {
    double hi = std::min(b, lo * ratio);
    auto r = integrate(f, lo, hi, opt);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
    lo = hi;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

double one_minus_cos(double x) {
  double s = std::sin(0.5 * x);
  return 2.0 * s * s;
}

double x_minus_sin(double x) {
  if (std::abs(x) > 0.5) return x - std::sin(x);
  double x2 = x * x, term = x * x2 / 6.0, sum = 0.0;
  for (int k = 1; k < 20; ++k) {
    sum += term;
    term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace stablelike
