#pragma once
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "stablelike/measures.hpp"
#include "stablelike/sde.hpp"
#include "stablelike/test_functions.hpp"

namespace stablelike {

using nlohmann::json;

// Throws InvalidInput unless j is an object whose keys all appear in `allowed`.
void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what);

struct FixtureEntry {
  std::string name;
  std::string kind;  // measure, field, test_function, model, setup
  std::string description;
  json spec;
};

std::vector<FixtureEntry> fixture_catalog();
const FixtureEntry& find_fixture(const std::string& name);

// A measure is an inline object, a fixture name, or {"fixture": name, "alpha": a}.
StableMeasure measure_from_config(const json& j);

// Fields: {"type": constant|zero|sine_diagonal|hoelder|sobolev_sample|step, ...}.
json canonical_field(const json& j);
CoefficientField field_from_config(const json& j);

// Test functions: {"type": gaussian_bump|plane_wave|constant, ...}.
json canonical_test_function(const json& j);
TestFunction test_function_from_config(const json& j);

// Modulated model nu_x = (1 + amplitude sin x_1) nu with constant sigma.
json canonical_model(const json& j);
LevyModel model_from_config(const json& j);

// Second driver must have a strictly smaller index than the first.
struct TwoDriverSetup {
  StableMeasure driver;
  StableMeasure driver_bar;
  CoefficientField field;
  CoefficientField field_bar;
  Vec x0;
};
json canonical_two_driver(const json& j);
TwoDriverSetup two_driver_from_config(const json& j);

// Accepts a fixture name or an inline object of the matching kind.
json resolve(const json& j, const std::string& kind);

Mat matrix_from_json(const json& j, int dim);
json matrix_to_json(const Mat& m);
Vec vector_from_json(const json& j);
json vector_to_json(const Vec& v);

}  // namespace stablelike
