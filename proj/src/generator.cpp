#include "stablelike/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "stablelike/error.hpp"

namespace stablelike {

namespace {

const QuadOptions kRay{1e-13, 1e-11, 400};

double comp_indicator(double convention, double r, double nv) {
  if (convention > 1.0) return 1.0;
  if (convention == 1.0) return r * nv <= 1.0 ? 1.0 : 0.0;
  return 0.0;
}

// Integral over [0, r] of (int_0^s (s-u) q(u) du) s^{-1-a} ds with q the
// interpolating cubic of q(u) on four equispaced nodes in [0, r]. The error is
// the gap to the quadratic fit on three of the nodes.
template <class Q>
OperatorValue inner_taylor(Q&& q, double r, double a) {
  double y[4];
  for (int i = 0; i < 4; ++i) y[i] = q(r * i / 3.0);
  auto weight = [&](int k) { return std::pow(r, 2.0 - a) / ((k + 1.0) * (k + 2.0) * (k + 2.0 - a)); };
  // Monomial coefficients in t = s / r.
  double b0 = y[0];
  double b1 = (-11 * y[0] + 18 * y[1] - 9 * y[2] + 2 * y[3]) / 2.0;
  double b2 = (18 * y[0] - 45 * y[1] + 36 * y[2] - 9 * y[3]) / 2.0;
  double b3 = (-9 * y[0] + 27 * y[1] - 27 * y[2] + 9 * y[3]) / 2.0;
  double cubic = b0 * weight(0) + b1 * weight(1) + b2 * weight(2) + b3 * weight(3);
  // Quadratic through t = 0, 1/3, 2/3.
  double c1 = (-3 * y[0] + 4 * y[1] - y[2]) * 1.5;
  double c2 = (y[0] - 2 * y[1] + y[2]) * 4.5;
  double quad = b0 * weight(0) + c1 * weight(1) + c2 * weight(2);
  return {cubic, std::abs(cubic - quad)};
}

QuadResult integrate_edges(const Fn1& f, std::vector<double> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  QuadResult out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto p = integrate(f, edges[i], edges[i + 1], kRay);
    out.value += p.value;
    out.error += p.error;
    out.evaluations += p.evaluations;
    out.converged = out.converged && p.converged;
  }
  return out;
}

std::vector<double> geometric_edges(double a, double b, double extra) {
  std::vector<double> e{a};
  for (double x = 2.0 * a; x < b; x *= 2.0) e.push_back(x);
  e.push_back(b);
  if (extra > a && extra < b) e.push_back(extra);
  return e;
}

struct RayResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

// Slope of log|f| along the ray at large radii; DomainError when the growth
// rate reaches the measure's index.
double probe_growth(const TestFunction& f, const Vec& x, const Vec& v, double alpha, double& sup_abs) {
  const double base = f.length_scale / v.norm();
  sup_abs = std::abs(f.value(x));
  double prev = 0.0, slope = -INFINITY;
  for (int k = 0; k <= 40; ++k) {
    double r = base * std::ldexp(1.0, k);
    double a = std::abs(f.value(x + r * v));
    sup_abs = std::max(sup_abs, a);
    double la = std::log(a + 1e-300);
    if (k >= 30 && k % 10 == 0) {
      if (k > 30) slope = (la - prev) / (10.0 * std::log(2.0));
      prev = la;
    }
  }
  if (slope > alpha - 0.05)
    throw DomainError("test function grows too fast for the operator (growth exponent " + std::to_string(slope) +
                          ")",
                      NAN, INFINITY);
  return slope;
}

// Integral over r in (0, inf) of J_f(x, r v) r^{-1-a}.
RayResult ray_A(const TestFunction& f, const Vec& x, const Vec& v, double a, double conv, double f0,
                const Vec& g0) {
  RayResult res;
  const double nv = v.norm();
  if (nv == 0.0) return res;
  const double delta = std::clamp(0.1 * f.length_scale, 1e-4, 1.0);
  const double r_in = delta / nv;
  const double slope0 = v.dot(g0);
  auto g2 = [&](double s) { return v.dot(f.hess(x + s * v) * v); };
  auto inner = inner_taylor(g2, r_in, a);
  res.value += inner.value;
  res.error += inner.error;
  if (comp_indicator(conv, r_in, nv) == 0.0 && slope0 != 0.0) {
    if (a >= 1.0) throw DivergentIntegral("uncompensated gradient term diverges for index >= 1");
    res.value += slope0 * std::pow(r_in, 1.0 - a) / (1.0 - a);
  }
  if (conv > 1.0 && a <= 1.0 && slope0 != 0.0)
    throw DivergentIntegral("full compensation diverges at infinity for index <= 1");

  auto k = [&](double r) {
    double y = f.value(x + r * v) - f0 - comp_indicator(conv, r, nv) * r * slope0;
    return y * std::pow(r, -1.0 - a);
  };
  const double cut = conv == 1.0 ? 1.0 / nv : 0.0;
  double R = std::max(2.0 * r_in, cut);
  QuadResult tail;
  if (f.has_tail()) {
    R = std::max(R, f.tail_start(x, v));
    if (!f.compact) R = std::max(R, 8.0 * f.length_scale / nv);
    tail = f.tail(x, v, R, a);
  } else {
    double sup_abs = 0.0;
    probe_growth(f, x, v, a, sup_abs);
    R = std::max(R, 8.0 * f.length_scale / nv) * std::ldexp(1.0, 30);
    tail.error = (sup_abs + std::abs(f0)) * std::pow(R, -a) / a;
  }
  tail.value -= f0 * std::pow(R, -a) / a;
  if (conv > 1.0) tail.value -= slope0 * std::pow(R, 1.0 - a) / (a - 1.0);
  auto mid = integrate_edges(k, geometric_edges(r_in, R, cut));
  res.value += mid.value + tail.value;
  res.error += mid.error + tail.error;
  res.converged = mid.converged && tail.converged;
  return res;
}

// Polar axis for isotropic angular quadrature. Ray integrals of oscillating
// functions have a kink where sigma theta is orthogonal to the oscillation
// direction, so the axis is sigma^T times the dominant Hessian eigenvector.
Vec polar_axis(const TestFunction& f, const Vec& x, const Mat& sigma) {
  const int d = f.dim;
  Eigen::SelfAdjointEigenSolver<Mat> es(f.hess(x));
  Vec w;
  const Vec ev = es.eigenvalues().cwiseAbs();
  Eigen::Index k;
  if (ev.maxCoeff(&k) > 0.0) {
    w = es.eigenvectors().col(k);
  } else {
    w = f.grad(x);
    if (w.norm() == 0.0) w = Vec::Unit(d, d - 1);
  }
  Vec axis = sigma.transpose() * w;
  if (axis.norm() == 0.0) return Vec::Unit(d, d - 1);
  return axis.normalized();
}

// Integrates a per-direction functional against the spherical measure.
template <class F>
OperatorValue spherical_sum(const SphericalMeasure& s, const Mat& sigma, const Vec& axis, F&& ray) {
  const int d = s.dim();
  OperatorValue out;
  bool ok = true;
  double ray_err = 0.0;
  auto add = [&](const Vec& theta, double w) {
    RayResult r = ray(Vec(sigma * theta));
    out.value += w * r.value;
    out.error += std::abs(w) * r.error;
    ok = ok && r.converged;
  };
  if (!s.is_isotropic()) {
    for (const auto& a : s.atoms())
      if (a.weight != 0.0) add(a.direction, a.weight);
  } else if (d == 1) {
    add(Vec::Ones(1), 0.5 * s.isotropic_mass());
    add(-Vec::Ones(1), 0.5 * s.isotropic_mass());
  } else if (d == 2) {
    const double dens = s.isotropic_mass() / (2.0 * std::numbers::pi);
    const double phi0 = std::atan2(axis[1], axis[0]);
    auto q = integrate(
        [&](double phi) {
          Vec th(2);
          th << std::cos(phi0 + phi), std::sin(phi0 + phi);
          RayResult r = ray(Vec(sigma * th));
          ok = ok && r.converged;
          ray_err = std::max(ray_err, r.error);
          return r.value;
        },
        0.0, 2.0 * std::numbers::pi, {1e-11, 1e-10, 200}, {0.5 * std::numbers::pi, 1.5 * std::numbers::pi});
    out.value = dens * q.value;
    out.error = dens * q.error + s.isotropic_mass() * ray_err;
    ok = ok && q.converged;
  } else if (d == 3) {
    const double dens = s.isotropic_mass() / (4.0 * std::numbers::pi);
    Vec e1 = Vec::Unit(3, 0);
    if (std::abs(axis[0]) > 0.9) e1 = Vec::Unit(3, 1);
    e1 = (e1 - e1.dot(axis) * axis).normalized();
    Vec e2(3);
    e2 << axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2], axis[0] * e1[1] - axis[1] * e1[0];
    auto q = integrate(
        [&](double phi) {
          auto inner = integrate(
              [&](double lam) {
                Vec th = std::sin(phi) * (std::cos(lam) * e1 + std::sin(lam) * e2) + std::cos(phi) * axis;
                RayResult r = ray(Vec(sigma * th));
                ok = ok && r.converged;
                ray_err = std::max(ray_err, r.error);
                return r.value;
              },
              0.0, 2.0 * std::numbers::pi, {1e-9, 1e-8, 100});
          return std::sin(phi) * inner.value;
        },
        0.0, std::numbers::pi, {1e-9, 1e-8, 100}, {0.5 * std::numbers::pi});
    out.value = dens * q.value;
    out.error = dens * q.error + s.isotropic_mass() * ray_err;
    ok = ok && q.converged;
  } else {
    throw UnsupportedConfiguration("isotropic generator quadrature is limited to dim <= 3");
  }
  if (!ok) throw AccuracyError("generator quadrature budget exceeded", out.value, out.error);
  return out;
}

}  // namespace

double taylor_remainder(const TestFunction& f, const Vec& x, const Vec& y, double alpha) {
  double comp = comp_indicator(alpha, 1.0, y.norm());
  double v = f.value(x + y) - f.value(x);
  if (comp != 0.0) v -= y.dot(f.grad(x));
  return v;
}

OperatorValue nonlocal_operator(const StableMeasure& nu, double scale, const Mat& sigma, double convention,
                                const TestFunction& f, const Vec& x) {
  if (f.dim != nu.dim() || x.size() != nu.dim()) throw InvalidInput("generator: dimension mismatch");
  if (scale == 0.0) return {};
  const double a = nu.alpha();
  const double f0 = f.value(x);
  const Vec g0 = f.grad(x);
  auto r = spherical_sum(nu.spherical(), sigma, polar_axis(f, x, sigma), [&](const Vec& v) { return ray_A(f, x, v, a, convention, f0, g0); });
  r.value *= scale;
  r.error *= std::abs(scale);
  return r;
}

OperatorValue apply_A(const LevyModel& model, const TestFunction& f, double t, const Vec& x) {
  auto r = nonlocal_operator(model.base, model.m(t, x), model.sigma(t, x), model.alpha(), f, x);
  if (model.alpha() == 1.0 && model.b) r.value += model.b(t, x).dot(f.grad(x));
  return r;
}

LowerOrderValue apply_B(const LevyModel& model, const TestFunction& f, double t, const Vec& x) {
  LowerOrderValue out;
  if (!model.lower) {
    out.regime = "absent";
    return out;
  }
  const auto& lo = *model.lower;
  const double ab = lo.beta(), a = model.alpha();
  if (!(ab < a)) throw InvalidConfiguration("lower-order index must be below the leading index");
  auto r = nonlocal_operator(lo.nu_bar, 1.0, lo.sigma_bar(t, x), ab, f, x);
  out.value = r.value;
  out.error = r.error;
  if (a > 1.0 && a < 2.0 && lo.b_bar) out.value += lo.b_bar(t, x).dot(f.grad(x));
  if (ab < 1.0) {
    out.regime = "lower index below one";
    out.theta1_lo = ab;
    out.theta1_hi = std::min(a, 1.0);
    out.theta2_lo = 0.0;
    out.theta2_hi = ab;
  } else if (ab == 1.0) {
    out.regime = "lower index one";
    out.theta1_lo = 1.0;
    out.theta1_hi = a;
    out.theta2_lo = 0.0;
    out.theta2_hi = 1.0;
  } else {
    out.regime = "lower index above one";
    out.theta1_lo = ab;
    out.theta1_hi = a;
    out.theta2_lo = 1.0;
    out.theta2_hi = ab;
  }
  return out;
}

OperatorValue apply_L(const LevyModel& model, const TestFunction& f, double t, const Vec& x) {
  auto a = apply_A(model, f, t, x);
  if (!model.lower) return a;
  auto b = apply_B(model, f, t, x);
  return {a.value + b.value, a.error + b.error};
}

OperatorValue carre_du_champ(const StableMeasure& nu, double scale, const Mat& sigma, const TestFunction& f,
                             const TestFunction& g, const Vec& x) {
  const double a = nu.alpha();
  const double f0 = f.value(x), g0 = g.value(x);
  auto ray = [&](const Vec& v) {
    RayResult res;
    const double nv = v.norm();
    if (nv == 0.0) return res;
    const double delta = std::clamp(0.1 * std::min(f.length_scale, g.length_scale), 1e-4, 1.0);
    const double r_in = delta / nv;
    // k(s) = F(s) G(s) with F, G the increments along the ray.
    auto k2 = [&](double s) {
      Vec y = x + s * v;
      double F = f.value(y) - f0, G = g.value(y) - g0;
      double F1 = v.dot(f.grad(y)), G1 = v.dot(g.grad(y));
      double F2 = v.dot(f.hess(y) * v), G2 = v.dot(g.hess(y) * v);
      return F2 * G + 2.0 * F1 * G1 + F * G2;
    };
    auto inner = inner_taylor(k2, r_in, a);
    auto k = [&](double r) {
      Vec y = x + r * v;
      return (f.value(y) - f0) * (g.value(y) - g0) * std::pow(r, -1.0 - a);
    };
    double R = 2.0 * r_in;
    QuadResult tail;
    if (f.compact && g.compact) {
      R = std::max({R, f.tail_start(x, v), g.tail_start(x, v)});
      tail.value = f0 * g0 * std::pow(R, -a) / a;
    } else {
      double sf = 0.0, sg = 0.0;
      probe_growth(f, x, v, a, sf);
      probe_growth(g, x, v, a, sg);
      R = std::max(R, 8.0 * std::min(f.length_scale, g.length_scale) / nv) * std::ldexp(1.0, 30);
      tail.error = (sf + std::abs(f0)) * (sg + std::abs(g0)) * std::pow(R, -a) / a;
    }
    auto mid = integrate_edges(k, geometric_edges(r_in, R, 0.0));
    res.value = inner.value + mid.value + tail.value;
    res.error = inner.error + mid.error + tail.error;
    res.converged = mid.converged;
    return res;
  };
  auto r = spherical_sum(nu.spherical(), sigma, polar_axis(product(f, g), x, sigma), ray);
  r.value *= scale;
  r.error *= std::abs(scale);
  return r;
}

double remainder_ratio_estimate(const TestFunction& f, const std::vector<Vec>& points, double alpha,
                                int levels_per_octave, int octaves) {
  const int d = f.dim;
  std::vector<Vec> dirs;
  for (int j = 0; j < d; ++j) {
    dirs.push_back(Vec::Unit(d, j));
    dirs.push_back(-Vec::Unit(d, j));
    for (int i = j + 1; i < d; ++i) {
      for (double s : {1.0, -1.0}) {
        Vec v = (Vec::Unit(d, j) + s * Vec::Unit(d, i)) / std::sqrt(2.0);
        dirs.push_back(v);
        dirs.push_back(-v);
      }
    }
  }
  double best = 0.0;
  const double base = f.length_scale;
  for (const auto& x : points)
    for (const auto& th : dirs)
      for (int k = -octaves * levels_per_octave; k <= octaves * levels_per_octave; ++k) {
        double rho = base * std::exp2(double(k) / levels_per_octave);
        double v = std::abs(taylor_remainder(f, x, rho * th, alpha)) / std::pow(rho, alpha);
        best = std::max(best, v);
      }
  return best;
}

GeneratorTable::GeneratorTable(const LevyModel& model, const TestFunction& f, double center, double core_width,
                               double half_range, int nodes)
    : model_(model), f_(f), center_(center), width_(core_width) {
  if (model.dim() != 1) throw UnsupportedConfiguration("GeneratorTable is one-dimensional");
  if (nodes < 8) throw InvalidInput("GeneratorTable: need at least 8 nodes");
  umax_ = std::asinh(half_range / core_width);
  du_ = 2.0 * umax_ / (nodes - 1);
  vals_.resize(nodes);
  for (int i = 0; i < nodes; ++i) {
    double x = center_ + width_ * std::sinh(-umax_ + i * du_);
    auto r = apply_L(model_, f_, 0.0, Vec::Constant(1, x));
    vals_[i] = r.value;
    quad_error_ = std::max(quad_error_, r.error);
  }
  // Interpolation error from direct evaluation at cell midpoints.
  for (int i = 1; i + 2 < nodes; i += std::max(1, nodes / 97)) {
    double u = -umax_ + (i + 0.5) * du_;
    double x = center_ + width_ * std::sinh(u);
    double exact = apply_L(model_, f_, 0.0, Vec::Constant(1, x)).value;
    interp_error_ = std::max(interp_error_, std::abs(exact - interpolate(u)));
  }
}

double GeneratorTable::interpolate(double u) const {
  double s = (u + umax_) / du_;
  int i = int(std::floor(s));
  const int n = int(vals_.size());
  i = std::clamp(i, 1, n - 3);
  double t = s - i;
  double p0 = vals_[i - 1], p1 = vals_[i], p2 = vals_[i + 1], p3 = vals_[i + 2];
  // Cubic Lagrange through four neighbouring nodes.
  return p0 * (-t * (t - 1) * (t - 2) / 6.0) + p1 * ((t + 1) * (t - 1) * (t - 2) / 2.0) +
         p2 * (-(t + 1) * t * (t - 2) / 2.0) + p3 * ((t + 1) * t * (t - 1) / 6.0);
}

double GeneratorTable::operator()(double x) const {
  double u = std::asinh((x - center_) / width_);
  if (std::abs(u) >= umax_ - du_) return apply_L(model_, f_, 0.0, Vec::Constant(1, x)).value;
  return interpolate(u);
}

}  // namespace stablelike
