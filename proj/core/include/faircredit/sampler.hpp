#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "faircredit/dataset.hpp"
#include "faircredit/error.hpp"
#include "faircredit/probmodel.hpp"
#include "faircredit/random.hpp"

namespace faircredit {

struct SamplerConfig {
  std::size_t iterations = 5000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  double delta = 0.5;       // half-width of the uniform latent proposal
  double param_step = 0.1;  // initial std of the parameter random walk
  bool adapt_during_burn_in = true;
  double target_accept = 0.35;
  std::size_t adapt_interval = 100;  // sweeps per adaptation window
  double adapt_factor = 1.1;
  std::uint64_t seed = 0;

  /// Throws InputError on any violated constraint.
  void validate() const;
  /// floor((iterations - burn_in) / thin)
  std::size_t stored_draws() const { return (iterations - burn_in) / thin; }

  bool operator==(const SamplerConfig&) const = default;
};

struct StepResult {
  double value = 0.0;
  bool accepted = false;
  bool failed = false;  // the target threw at the proposal; treated as a rejection
  double bad_predictor = NAN;  // offending linear predictor of a rate overflow
};

/// One Metropolis step with a symmetric uniform proposal on
/// [current - delta, current + delta]. `log_target` maps a state to its
/// unnormalized log density; the current density is passed in so callers
/// can avoid recomputing it. Consumes exactly two uniforms: proposal, then
/// the accept test.
template <typename LogTarget>
StepResult metropolis_uniform_step(double current, double current_log_density, double delta,
                                   RandomStream& rng, LogTarget&& log_target) {
  const double proposal = rng.uniform(current - delta, current + delta);
  const double u = rng.uniform();
  double proposed_log_density;
  try {
    proposed_log_density = log_target(proposal);
  } catch (const RateOverflowError& e) {
    return {current, false, true, e.linear_predictor()};
  } catch (const std::exception&) {
    return {current, false, true};
  }
  const double log_ratio = proposed_log_density - current_log_density;
  if (std::log(u) < log_ratio) return {proposal, true, false};
  return {current, false, false};
}

/// Latent target for one observation: log N(c; 0, 1) plus its likelihood.
double latent_log_target(double c, const ModelParams& theta, const Observation& obs,
                         bool include_credit, const ModelConfig& config);

/// Metropolis update of one observation's latent confounder.
StepResult mh_step_latent(double current_c, const ModelParams& theta, const Observation& obs,
                          double delta, bool include_credit, const ModelConfig& config,
                          RandomStream& rng);

struct ParamStepResult {
  ModelParams theta;
  bool accepted = false;
  bool failed = false;
  double bad_predictor = NAN;
};

/// Single-coordinate normal random-walk update of `name` against the full
/// posterior (credit term included). Draws one normal, then one uniform.
/// A zero step proposes the current value, which is always accepted.
ParamStepResult mh_step_param(Param name, const ModelParams& theta, const LatentState& latents,
                              const Dataset& data, double step, const ModelConfig& config,
                              RandomStream& rng);

/// Stored MCMC output. Draw vectors share one schedule: post burn-in, every
/// `thin`-th sweep.
struct Chain {
  std::vector<ModelParams> param_draws;
  /// latent_draws[i][d] is draw d of observation i.
  std::vector<std::vector<double>> latent_draws;
  std::array<double, kParamCount> accept_rate_params{};  // post burn-in; 0 for inactive
  double accept_rate_latents = 0.0;
  std::size_t failed_steps = 0;
  double final_delta = 0.0;
  std::array<double, kParamCount> final_param_steps{};
  SamplerConfig config;
  ModelConfig model_config;
  std::uint64_t rng_seed = 0;

  std::size_t draw_count() const { return param_draws.size(); }
  /// Draws of one coordinate.
  std::vector<double> param_series(Param p) const;
  /// Per-observation posterior mean and median of the latent draws.
  std::vector<double> latent_means() const;
  std::vector<double> latent_medians() const;
  /// Coordinate-wise posterior median.
  ModelParams median_params() const;

  bool operator==(const Chain&) const = default;
};

/// Metropolis-within-Gibbs sampler over parameters and latents. Everything
/// starts at zero. Each sweep updates the active parameters in canonical
/// order, then every latent in index order. Parameter moves use stream 0;
/// latent i uses stream i + 1 of `sampler_config.seed`.
///
/// During burn-in, when adaptation is on, every `adapt_interval` sweeps the
/// latent half-width and each parameter's step are multiplied by
/// `adapt_factor` if the window's acceptance exceeded `target_accept` and
/// divided by it otherwise. Both are frozen after burn-in.
///
/// Throws SamplerAbort when more than 1% of all steps failed.
Chain run_chain(const Dataset& data, const ModelConfig& model_config,
                const SamplerConfig& sampler_config);

/// Mirrors the latent axis: negates the C loadings and every latent draw.
/// The posterior is invariant under this map.
void flip_latent_axis(Chain& chain);

/// Orients the latent axis so the posterior medians of the three C loadings
/// sum to a non-negative value. Returns true if the chain was flipped.
bool orient_latent_axis(Chain& chain);

struct LatentPosterior {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double accept_rate = 0.0;
  std::vector<double> draws;
};

/// Stream id reserved for test-time inference. Every call restarts the same
/// stream, so identical observations get identical summaries and a
/// counterfactual pair shares its random numbers.
inline constexpr std::uint64_t kTestInferenceStream = 0x7e57'0000'0000'0000ULL;

/// Latent posterior of a single new observation under fixed parameters.
/// The credit term is excluded unless `include_credit` is set, which is the
/// leaky protocol kept for comparison only.
LatentPosterior infer_latent_test(const ModelParams& theta_hat, const Observation& obs,
                                  const ModelConfig& model_config,
                                  const SamplerConfig& sampler_config,
                                  bool include_credit = false);

/// `draw,<param names...>` with active parameters only.
std::string params_chain_to_csv(const Chain& chain, const std::string& header_comment = {});
/// `draw,c_<i>...` for the selected observations (all when empty).
std::string latents_chain_to_csv(const Chain& chain, const std::vector<std::size_t>& subset = {},
                                 const std::string& header_comment = {});

/// Named columns read back from a chain CSV.
struct ChainTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Parses a chain CSV (first column is the draw index and is dropped).
/// Throws InputError on empty or malformed input.
ChainTable read_chain_csv(const std::filesystem::path& path);

}  // namespace faircredit
