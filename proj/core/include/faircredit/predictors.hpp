#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "faircredit/dataset.hpp"
#include "faircredit/probmodel.hpp"
#include "faircredit/sampler.hpp"

namespace faircredit {

// ---------------------------------------------------------------------------
// Linear models

struct LinearModel {
  std::vector<std::string> feature_names;
  std::vector<double> coefficients;
  double intercept = 0.0;

  bool operator==(const LinearModel&) const = default;
};

/// Ordinary least squares with an intercept, solved by column-pivoted
/// Householder QR. Requires n > p + 1. Throws RankDeficientError naming the
/// first column ("intercept" or a feature name) that lies in the span of
/// the columns before it.
LinearModel fit_ols(const Eigen::MatrixXd& features, std::span<const double> targets,
                    std::vector<std::string> feature_names = {});

/// Throws std::invalid_argument when the column count does not match.
std::vector<double> predict_ols(const LinearModel& model, const Eigen::MatrixXd& features);

inline const std::vector<std::string> kFullFeatures{"sex", "age_std", "job", "house"};
inline const std::vector<std::string> kUnawareFeatures{"job", "house"};

/// Columns of `data` picked by name from {sex, age_std, job, house}.
Eigen::MatrixXd design_matrix(const Dataset& data, const std::vector<std::string>& names);
std::vector<double> credit_targets(const Dataset& data);

/// OLS of credit on (sex, age_std, job, house).
LinearModel fit_full(const Dataset& train);
/// OLS of credit on (job, house).
LinearModel fit_unaware(const Dataset& train);
/// Predicts with the model's own feature names.
std::vector<double> predict_linear(const LinearModel& model, const Dataset& data);

std::string linear_model_to_text(const LinearModel& model);
LinearModel linear_model_from_text(std::string_view text);

// ---------------------------------------------------------------------------
// Random forest over the single latent feature

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 6;
  std::size_t min_leaf = 5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ForestConfig&) const = default;
};

/// Flat regression tree. Internal nodes send c <= threshold left.
struct RegressionTree {
  struct Node {
    bool leaf = true;
    double threshold = 0.0;  // internal nodes
    double value = 0.0;      // leaves
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;  // nodes[0] is the root, stored in preorder

  double predict(double c) const;
  std::size_t depth() const;

  bool operator==(const RegressionTree&) const = default;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestConfig config;
  double target_min = 0.0;
  double target_max = 0.0;

  double predict(double c) const;

  bool operator==(const ForestModel&) const = default;
};

/// Fits a single greedy variance-reduction tree on the given sample.
RegressionTree fit_tree(std::span<const double> c_values, std::span<const double> targets,
                        std::size_t max_depth, std::size_t min_leaf);

/// Bagged regression trees; tree t is fit on a bootstrap resample drawn
/// from stream t of `config.seed`. Needs at least 2 * min_leaf points.
ForestModel fit_forest(std::span<const double> c_values, std::span<const double> targets,
                       const ForestConfig& config);

std::vector<double> predict_forest(const ForestModel& model, std::span<const double> c_values);

/// Line format: a `forest <n_trees> <max_depth> <min_leaf> <seed>` header,
/// a `range <min> <max>` line, then per tree `tree <node_count>` followed by
/// its nodes in preorder, each `split <threshold>` or `leaf <value>`.
std::string forest_to_text(const ForestModel& model);
ForestModel forest_from_text(std::string_view text);

// ---------------------------------------------------------------------------
// Two-stage fair model

enum class LatentFeature { mean, median };

struct FairModel {
  ModelParams theta_hat;
  ForestModel forest;
  ModelConfig model_config;
  SamplerConfig latent_sampler_config;  // test-time inference
  LatentFeature feature = LatentFeature::mean;

  bool operator==(const FairModel&) const = default;
};

struct FairFit {
  FairModel model;
  Chain chain;                       // oriented, see orient_latent_axis
  std::vector<double> train_latent;  // per-observation latent feature
};

/// Stage 1 runs the sampler on `train` and takes coordinate-wise posterior
/// medians as theta_hat; stage 2 fits the forest on the per-observation
/// latent feature against credit. Test-time inference reuses the sampler
/// schedule and seed.
FairFit fit_fair(const Dataset& train, const ModelConfig& model_config,
                 const SamplerConfig& sampler_config, const ForestConfig& forest_config,
                 LatentFeature feature = LatentFeature::mean);

/// Latent feature of each observation inferred with fixed theta_hat.
std::vector<double> infer_latent_features(const FairModel& model, const Dataset& data,
                                          bool include_credit = false);

/// Leakage-free by default: credit is not used to infer the test latents.
std::vector<double> predict_fair(const FairModel& model, const Dataset& test,
                                 bool include_credit = false);

/// Writes params.txt, forest.txt and config.txt into `dir`.
void save_fair_model(const FairModel& model, const std::filesystem::path& dir,
                     const std::string& header_comment = {});
FairModel load_fair_model(const std::filesystem::path& dir);

}  // namespace faircredit
