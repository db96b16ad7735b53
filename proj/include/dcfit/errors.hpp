#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dcfit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A model could not be fit (rank deficiency, separation, non-finite loss, ...).
struct FitError : Error {
  using Error::Error;
};

// An iterative solver ran out of iterations or diverged.
struct ConvergenceError : FitError {
  using FitError::FitError;
};

// Prediction-time feature schema does not match the training schema.
struct SchemaError : Error {
  using Error::Error;
};

// A propensity score of exactly 0 or 1 reached an inverse-weighting formula.
struct PositivityError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Invalid configuration; carries every violation found, not just the first.
struct ConfigError : Error {
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  explicit ConfigError(const std::string& msg)
      : Error(msg), violations_{msg} {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace dcfit
