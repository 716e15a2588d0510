#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faircredit/dataset.hpp"

namespace faircredit {

/// Coordinates of the parameter vector, in the canonical sweep order.
enum class Param : std::size_t {
  b_j,
  beta_j_s,
  beta_j_a,
  beta_j_c,
  b_h,
  beta_h_s,
  beta_h_a,
  beta_h_c,
  beta_c_s,
  beta_c_a,
  beta_c_c,
  b_c,
};

inline constexpr std::size_t kParamCount = 12;

std::string_view param_name(Param p);
/// Throws InputError for an unknown name.
Param param_from_name(std::string_view name);

/// Which likelihood block a coordinate belongs to.
enum class Block { job, house, credit };
Block param_block(Param p);

/// Intercepts and coefficients of the job, house and credit likelihoods.
struct ModelParams {
  double b_j = 0.0;
  double beta_j_s = 0.0;
  double beta_j_a = 0.0;
  double beta_j_c = 0.0;
  double b_h = 0.0;
  double beta_h_s = 0.0;
  double beta_h_a = 0.0;
  double beta_h_c = 0.0;
  double beta_c_s = 0.0;
  double beta_c_a = 0.0;
  double beta_c_c = 0.0;
  double b_c = 0.0;  // only read when the credit intercept is enabled

  double& operator[](Param p);
  double operator[](Param p) const;

  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;
};

struct ModelConfig {
  bool include_credit_intercept = false;
  /// Credit is divided by this and rounded half-to-even before the Poisson term.
  double credit_scale = 1.0;
  double poisson_rate_cap = 1e7;

  /// Throws InputError on a non-positive scale or cap.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Coordinates that are sampled and carry a prior: 11, or 12 with b_c.
std::span<const Param> active_params(const ModelConfig& config);

struct LatentState {
  std::vector<double> c;

  std::size_t size() const { return c.size(); }
};

/// Inverse logit, branch-stable for large |x|.
double sigmoid(double x);
/// log(sigmoid(x)) without forming sigmoid(x).
double log_sigmoid(double x);

/// y*log(p) + (1-y)*log(1-p).
double bernoulli_log_pmf(int y, double p);
/// Same density parameterized by the log-odds `eta`; stays accurate when p
/// would round to 0 or 1.
double bernoulli_logit_log_pmf(int y, double eta);

/// log(k!) for k >= 0.
double log_factorial(std::int64_t k);

/// k*log(rate) - rate - log(k!). Throws RateOverflowError when rate > cap
/// and std::invalid_argument when rate <= 0 or k < 0.
double poisson_log_pmf(std::int64_t k, double rate, double rate_cap = 1e7);

/// log N(x; 0, 1).
double std_normal_log_pdf(double x);

double log_prior(const ModelParams& theta, const ModelConfig& config = {});

/// Linear predictors of the three likelihood blocks.
double job_predictor(const ModelParams& theta, double c, const Observation& obs);
double house_predictor(const ModelParams& theta, double c, const Observation& obs);
double credit_predictor(const ModelParams& theta, double c, const Observation& obs,
                        const ModelConfig& config);

/// round(credit / credit_scale), half-to-even.
std::int64_t scaled_credit(const Observation& obs, const ModelConfig& config);

/// Log-likelihood of one block for one observation.
double block_log_likelihood(Block block, const ModelParams& theta, double c,
                            const Observation& obs, const ModelConfig& config);

/// Job and house terms, plus the credit term iff `include_credit`.
double obs_log_likelihood(const ModelParams& theta, double c, const Observation& obs,
                          bool include_credit, const ModelConfig& config = {});

/// Joint log density of parameters and latents given the data, with the
/// credit term included. Throws std::invalid_argument on a length mismatch.
double log_posterior(const ModelParams& theta, const LatentState& latents, const Dataset& data,
                     const ModelConfig& config = {});

/// `name = value` lines, in canonical order. b_c is written only when
/// `include_credit_intercept` is set.
std::string params_to_text(const ModelParams& theta, bool include_credit_intercept);
/// Unknown names and malformed lines throw InputError; missing names keep 0.
ModelParams params_from_text(std::string_view text);

}  // namespace faircredit
