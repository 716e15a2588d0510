#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace faircredit {

/// Bad user input: unreadable files, missing columns, malformed cells or
/// config values. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Poisson rate exceeded the configured cap, which signals a divergent
/// linear predictor.
class RateOverflowError : public std::runtime_error {
 public:
  RateOverflowError(double linear_predictor, double cap);

  double linear_predictor() const noexcept { return linear_predictor_; }

 private:
  double linear_predictor_;
};

/// The least-squares design matrix is not of full column rank.
class RankDeficientError : public std::runtime_error {
 public:
  explicit RankDeficientError(std::string column);

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Too many likelihood evaluations failed during sampling.
class SamplerAbort : public std::runtime_error {
 public:
  SamplerAbort(std::size_t failed_steps, std::size_t total_steps, double last_bad_predictor);

  std::size_t failed_steps() const noexcept { return failed_; }
  std::size_t total_steps() const noexcept { return total_; }

 private:
  std::size_t failed_;
  std::size_t total_;
};

}  // namespace faircredit
