#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "faircredit/dataset.hpp"
#include "faircredit/predictors.hpp"

namespace faircredit {

/// 1 - SS_res / SS_tot, with SS_tot about the mean of `targets`.
/// Throws std::invalid_argument on length mismatch, empty input, or
/// constant targets.
double r_squared(std::span<const double> targets, std::span<const double> predictions);

inline const std::array<std::string, 5> kCovarianceColumns{"age_std", "sex", "job", "house",
                                                           "credit"};

struct CovarianceMatrix {
  Eigen::Matrix<double, 5, 5> values;
  bool correlation = false;
};

/// Sample covariance (denominator n - 1) over kCovarianceColumns, or the
/// correlation matrix when `correlation` is set.
CovarianceMatrix covariance_matrix(const Dataset& data, bool correlation = false);
std::string covariance_to_csv(const CovarianceMatrix& m, const std::string& header_comment = {});

enum class ProtectedAttribute { sex, age };

/// How an age counterfactual is formed: mirror the z-score around the mean,
/// or add a fixed number of years through the recorded standardization.
struct AgeFlip {
  enum class Mode { mirror, shift_years } mode = Mode::mirror;
  double years = 10.0;
};

Dataset flip_attribute(const Dataset& data, ProtectedAttribute attribute, const AgeFlip& age = {});

using PredictFn = std::function<std::vector<double>(const Dataset&)>;

/// Mean absolute change in prediction when the attribute is flipped.
double counterfactual_gap(const PredictFn& predict, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age = {});
double counterfactual_gap(const LinearModel& model, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age = {});
/// The flipped arm reruns test-time inference on the same random stream.
double counterfactual_gap(const FairModel& model, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age = {});

struct CompareConfig {
  ModelConfig model;
  SamplerConfig sampler;
  ForestConfig forest;
  LatentFeature feature = LatentFeature::mean;
  AgeFlip age_flip;
  /// Also score the fair model with test latents conditioned on credit.
  bool leaky_fair = false;
};

struct ModelRow {
  std::string name;
  double train_r2 = 0.0;
  double test_r2 = 0.0;
  double gap_sex = 0.0;
  double gap_age = 0.0;
};

struct ComparisonReport {
  std::vector<ModelRow> rows;  // full, unaware, fair
  std::optional<double> leaky_fair_test_r2;
  std::uint64_t split_seed = 0;
  std::uint64_t sampler_seed = 0;
  std::string config_snapshot;
};

struct Comparison {
  ComparisonReport report;
  LinearModel full;
  LinearModel unaware;
  FairFit fair;
};

/// Fits the three models on `train` and scores R^2 on both sets and
/// counterfactual gaps on `test`.
Comparison compare_models(const Dataset& train, const Dataset& test, const CompareConfig& config,
                          std::uint64_t split_seed = 0);

/// One row per model: `model,train_r2,test_r2,gap_sex,gap_age`. Metadata
/// and the labelled leaky fair score go into leading `#` comment lines.
std::string report_to_csv(const ComparisonReport& report, const std::string& header_comment = {});
std::string report_to_table(const ComparisonReport& report);

}  // namespace faircredit
