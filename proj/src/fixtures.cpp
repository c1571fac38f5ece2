#include "stablelike/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "stablelike/error.hpp"

namespace stablelike {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw InvalidInput(what + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      throw InvalidInput(what + ": unknown key '" + it.key() + "'");
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template <class T>
T need(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw InvalidInput(what + ": missing '" + key + "'");
  return j.at(key).get<T>();
}

json measure_json(double alpha, SphericalMeasure s) { return to_json(StableMeasure(alpha, std::move(s))); }

SphericalMeasure axis_atoms(int dim, double w) {
  std::vector<Atom> atoms;
  for (int i = 0; i < dim; ++i) {
    atoms.push_back({Vec::Unit(dim, i), w});
    atoms.push_back({-Vec::Unit(dim, i), w});
  }
  return SphericalMeasure::from_atoms(dim, atoms);
}

std::vector<FixtureEntry> build_catalog() {
  std::vector<FixtureEntry> c;
  c.push_back({"isotropic-1d", "measure", "isotropic stable, alpha 1.5, spherical mass 2",
               measure_json(1.5, SphericalMeasure::isotropic(1, 2.0))});
  c.push_back({"isotropic-2d", "measure", "isotropic stable, alpha 1.5, uniform spherical mass 2 pi",
               measure_json(1.5, SphericalMeasure::isotropic(2, 2.0 * M_PI))});
  c.push_back({"cylindrical-2d-axes", "measure", "independent coordinates: 4 unit atoms on the axes, alpha 1.5",
               measure_json(1.5, axis_atoms(2, 1.0))});
  c.push_back({"sine-diagonal-1d", "field", "1 + 0.25 sin x, Lipschitz",
               {{"type", "sine_diagonal"}, {"dim", 1}, {"amp", 0.25}}});
  c.push_back({"sine-diagonal-2d", "field", "diag(1 + 0.25 sin x_1, 1), Lipschitz",
               {{"type", "sine_diagonal"}, {"dim", 2}, {"amp", 0.25}}});
  c.push_back({"hoelder-1d", "field", "1 + min(|x|^0.5, 1), Hoelder 1/2",
               {{"type", "hoelder"}, {"dim", 1}, {"gamma", 0.5}}});
  c.push_back({"sobolev-sample-1d", "field", "mollified |x|^0.7 profile, gradient in L^2",
               {{"type", "sobolev_sample"}, {"dim", 1}, {"gamma", 0.7}, {"mollification", 0.01}, {"p", 2.0}}});
  c.push_back({"step-1d", "field", "bounded measurable step 1 -> 2 at the origin",
               {{"type", "step"}, {"dim", 1}, {"lo", 1.0}, {"hi", 2.0}}});
  c.push_back({"bump-1d", "test_function", "Gaussian bump at 0, width 0.8",
               {{"type", "gaussian_bump"}, {"center", {0.0}}, {"width", 0.8}, {"amplitude", 1.0}}});
  c.push_back({"bump-2d", "test_function", "Gaussian bump at the origin, width 0.8",
               {{"type", "gaussian_bump"}, {"center", {0.0, 0.0}}, {"width", 0.8}, {"amplitude", 1.0}}});
  c.push_back({"plane-wave-1d", "test_function", "cos(1.3 x)",
               {{"type", "plane_wave"}, {"xi", {1.3}}, {"phase", 0.0}}});
  c.push_back({"modulated-1d", "model", "nu_x = (1 + 0.5 sin x) nu for the isotropic 1d measure, sigma = 1",
               {{"type", "modulated"},
                {"base", measure_json(1.5, SphericalMeasure::isotropic(1, 2.0))},
                {"sigma", {{1.0}}},
                {"amplitude", 0.5}}});
  c.push_back({"two-driver", "setup",
               "dX = sigma(X) dL + sigma_bar(X) dL_bar with indices 1.5 and 0.5 (second index below the first)",
               {{"driver", measure_json(1.5, SphericalMeasure::isotropic(1, 2.0))},
                {"driver_bar", measure_json(0.5, SphericalMeasure::isotropic(1, 2.0))},
                {"field", {{"type", "sine_diagonal"}, {"dim", 1}, {"amp", 0.25}}},
                {"field_bar", {{"type", "constant"}, {"matrix", {{0.5}}}}},
                {"x0", {0.0}}}});
  return c;
}

}  // namespace

std::vector<FixtureEntry> fixture_catalog() { return build_catalog(); }

const FixtureEntry& find_fixture(const std::string& name) {
  static const std::vector<FixtureEntry> catalog = build_catalog();
  for (const auto& f : catalog)
    if (f.name == name) return f;
  throw InvalidInput("unknown fixture '" + name + "'");
}

json resolve(const json& j, const std::string& kind) {
  if (j.is_string()) {
    const auto& f = find_fixture(j.get<std::string>());
    if (f.kind != kind) throw InvalidInput("fixture '" + f.name + "' is a " + f.kind + ", expected " + kind);
    return f.spec;
  }
  return j;
}

Mat matrix_from_json(const json& j, int dim) {
  if (!j.is_array() || int(j.size()) != dim) throw InvalidInput("matrix: expected " + std::to_string(dim) + " rows");
  Mat m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    auto row = j.at(r).get<std::vector<double>>();
    if (int(row.size()) != dim) throw InvalidInput("matrix: ragged row");
    for (int c = 0; c < dim; ++c) m(r, c) = row[c];
  }
  return m;
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (int c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Vec vector_from_json(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vec>(v.data(), Eigen::Index(v.size()));
}

json vector_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

StableMeasure measure_from_config(const json& j) {
  if (j.is_object() && j.contains("fixture")) {
    check_keys(j, {"fixture", "alpha"}, "measure");
    json base = resolve(j.at("fixture"), "measure");
    if (j.contains("alpha")) base["alpha"] = j.at("alpha").get<double>();
    return stable_measure_from_json(base);
  }
  return stable_measure_from_json(resolve(j, "measure"));
}

json canonical_field(const json& in) {
  json j = resolve(in, "field");
  const std::string what = "field";
  auto type = need<std::string>(j, "type", what);
  json out{{"type", type}};
  if (type == "constant") {
    check_keys(j, {"type", "matrix"}, what);
    out["matrix"] = j.at("matrix");
  } else if (type == "zero") {
    check_keys(j, {"type", "dim"}, what);
    out["dim"] = need<int>(j, "dim", what);
  } else if (type == "sine_diagonal") {
    check_keys(j, {"type", "dim", "amp"}, what);
    out["dim"] = need<int>(j, "dim", what);
    out["amp"] = get_or(j, "amp", 0.25);
  } else if (type == "hoelder") {
    check_keys(j, {"type", "dim", "gamma"}, what);
    out["dim"] = need<int>(j, "dim", what);
    out["gamma"] = need<double>(j, "gamma", what);
  } else if (type == "sobolev_sample") {
    check_keys(j, {"type", "dim", "gamma", "mollification", "p"}, what);
    out["dim"] = need<int>(j, "dim", what);
    out["gamma"] = need<double>(j, "gamma", what);
    out["mollification"] = need<double>(j, "mollification", what);
    out["p"] = need<double>(j, "p", what);
  } else if (type == "step") {
    check_keys(j, {"type", "dim", "lo", "hi"}, what);
    out["dim"] = need<int>(j, "dim", what);
    out["lo"] = need<double>(j, "lo", what);
    out["hi"] = need<double>(j, "hi", what);
  } else {
    throw InvalidInput("field: unknown type '" + type + "'");
  }
  return out;
}

CoefficientField field_from_config(const json& in) {
  json j = canonical_field(in);
  auto type = j.at("type").get<std::string>();
  if (type == "constant") return constant_field(matrix_from_json(j.at("matrix"), int(j.at("matrix").size())));
  int d = j.at("dim").get<int>();
  if (type == "zero") return zero_field(d);
  if (type == "sine_diagonal") return sine_diagonal_field(d, j.at("amp").get<double>());
  if (type == "hoelder") return hoelder_field(d, j.at("gamma").get<double>());
  if (type == "sobolev_sample")
    return sobolev_sample_field(d, j.at("gamma").get<double>(), j.at("mollification").get<double>(),
                                j.at("p").get<double>());
  return step_field(d, j.at("lo").get<double>(), j.at("hi").get<double>());
}

json canonical_test_function(const json& in) {
  json j = resolve(in, "test_function");
  const std::string what = "test function";
  auto type = need<std::string>(j, "type", what);
  if (type == "gaussian_bump") {
    check_keys(j, {"type", "center", "width", "amplitude"}, what);
    return {{"type", type}, {"center", need<std::vector<double>>(j, "center", what)},
            {"width", need<double>(j, "width", what)}, {"amplitude", get_or(j, "amplitude", 1.0)}};
  }
  if (type == "plane_wave") {
    check_keys(j, {"type", "xi", "phase"}, what);
    return {{"type", type}, {"xi", need<std::vector<double>>(j, "xi", what)}, {"phase", get_or(j, "phase", 0.0)}};
  }
  if (type == "constant") {
    check_keys(j, {"type", "dim", "value"}, what);
    return {{"type", type}, {"dim", need<int>(j, "dim", what)}, {"value", need<double>(j, "value", what)}};
  }
  throw InvalidInput("test function: unknown type '" + type + "'");
}

TestFunction test_function_from_config(const json& in) {
  json j = canonical_test_function(in);
  auto type = j.at("type").get<std::string>();
  if (type == "gaussian_bump")
    return gaussian_bump(vector_from_json(j.at("center")), j.at("width").get<double>(),
                         j.at("amplitude").get<double>());
  if (type == "plane_wave") return plane_wave(vector_from_json(j.at("xi")), j.at("phase").get<double>());
  return constant_function(j.at("dim").get<int>(), j.at("value").get<double>());
}

json canonical_model(const json& in) {
  json j = resolve(in, "model");
  check_keys(j, {"type", "base", "sigma", "amplitude"}, "model");
  if (need<std::string>(j, "type", "model") != "modulated") throw InvalidInput("model: type must be 'modulated'");
  auto base = measure_from_config(need<json>(j, "base", "model"));
  double amp = get_or(j, "amplitude", 0.0);
  if (!(amp >= 0.0 && amp < 1.0)) throw InvalidInput("model: amplitude must lie in [0, 1)");
  Mat sigma = j.contains("sigma") ? matrix_from_json(j.at("sigma"), base.dim()) : Mat::Identity(base.dim(), base.dim());
  return {{"type", "modulated"}, {"base", to_json(base)}, {"sigma", matrix_to_json(sigma)}, {"amplitude", amp}};
}

LevyModel model_from_config(const json& in) {
  json j = canonical_model(in);
  auto base = stable_measure_from_json(j.at("base"));
  Mat sigma = matrix_from_json(j.at("sigma"), base.dim());
  double amp = j.at("amplitude").get<double>();
  LevyModel m = LevyModel::constant(base, sigma);
  if (amp > 0.0) {
    m.m = [amp](double, const Vec& x) { return 1.0 + amp * std::sin(x[0]); };
    m.m_min = 1.0 - amp;
    m.m_max = 1.0 + amp;
    m.constant_coefficients = false;
  }
  return m;
}

json canonical_two_driver(const json& in) {
  json j = resolve(in, "setup");
  const std::string what = "two-driver setup";
  check_keys(j, {"driver", "driver_bar", "field", "field_bar", "x0"}, what);
  auto l = measure_from_config(need<json>(j, "driver", what));
  auto lb = measure_from_config(need<json>(j, "driver_bar", what));
  if (!(lb.alpha() < l.alpha())) throw InvalidInput(what + ": second driver index must be below the first");
  if (l.dim() != lb.dim()) throw InvalidInput(what + ": driver dimensions differ");
  json x0 = j.contains("x0") ? j.at("x0") : vector_to_json(Vec::Zero(l.dim()));
  return {{"driver", to_json(l)},
          {"driver_bar", to_json(lb)},
          {"field", canonical_field(need<json>(j, "field", what))},
          {"field_bar", canonical_field(need<json>(j, "field_bar", what))},
          {"x0", x0}};
}

TwoDriverSetup two_driver_from_config(const json& in) {
  json j = canonical_two_driver(in);
  TwoDriverSetup s{stable_measure_from_json(j.at("driver")), stable_measure_from_json(j.at("driver_bar")),
                   field_from_config(j.at("field")), field_from_config(j.at("field_bar")),
                   vector_from_json(j.at("x0"))};
  if (s.field.dim != s.driver.dim() || s.field_bar.dim != s.driver.dim() || s.x0.size() != s.driver.dim())
    throw InvalidInput("two-driver setup: dimension mismatch");
  return s;
}

}  // namespace stablelike
