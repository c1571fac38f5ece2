#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace stablelike {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

// Carries the best value reached before the budget ran out.
struct AccuracyError : Error {
  double partial;
  double est_error;
  AccuracyError(const std::string& what, double partial_value, double err)
      : Error(what), partial(partial_value), est_error(err) {}
};

// Test function outside the admissible growth class.
struct DomainError : AccuracyError {
  using AccuracyError::AccuracyError;
};

struct UnsupportedConfiguration : Error {
  using Error::Error;
};
struct Undecidable : Error {
  using Error::Error;
};
struct DivergentIntegral : Error {
  using Error::Error;
};
struct InvalidConfiguration : Error {
  using Error::Error;
};
struct InvalidSymbol : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  std::size_t path;
  DivergenceError(const std::string& what, std::size_t path_index)
      : Error(what), path(path_index) {}
};

}  // namespace stablelike
