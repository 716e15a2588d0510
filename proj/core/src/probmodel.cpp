#include "faircredit/probmodel.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"

namespace faircredit {
namespace {

constexpr std::array<std::string_view, kParamCount> kNames{
    "b_j",      "beta_j_s", "beta_j_a", "beta_j_c", "b_h",      "beta_h_s",
    "beta_h_a", "beta_h_c", "beta_c_s", "beta_c_a", "beta_c_c", "b_c"};

constexpr std::array<double ModelParams::*, kParamCount> kFields{
    &ModelParams::b_j,      &ModelParams::beta_j_s, &ModelParams::beta_j_a,
    &ModelParams::beta_j_c, &ModelParams::b_h,      &ModelParams::beta_h_s,
    &ModelParams::beta_h_a, &ModelParams::beta_h_c, &ModelParams::beta_c_s,
    &ModelParams::beta_c_a, &ModelParams::beta_c_c, &ModelParams::b_c};

constexpr std::array<Param, kParamCount> kAllParams{
    Param::b_j,      Param::beta_j_s, Param::beta_j_a, Param::beta_j_c,
    Param::b_h,      Param::beta_h_s, Param::beta_h_a, Param::beta_h_c,
    Param::beta_c_s, Param::beta_c_a, Param::beta_c_c, Param::b_c};

constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace

std::string_view param_name(Param p) { return kNames[static_cast<std::size_t>(p)]; }

Param param_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (kNames[i] == name) return static_cast<Param>(i);
  }
  throw InputError("unknown parameter name '" + std::string(name) + "'");
}

Block param_block(Param p) {
  const auto i = static_cast<std::size_t>(p);
  if (i <= static_cast<std::size_t>(Param::beta_j_c)) return Block::job;
  if (i <= static_cast<std::size_t>(Param::beta_h_c)) return Block::house;
  return Block::credit;
}

double& ModelParams::operator[](Param p) { return this->*kFields[static_cast<std::size_t>(p)]; }

double ModelParams::operator[](Param p) const {
  return this->*kFields[static_cast<std::size_t>(p)];
}

bool ModelParams::all_finite() const {
  for (auto field : kFields) {
    if (!std::isfinite(this->*field)) return false;
  }
  return true;
}

void ModelConfig::validate() const {
  if (!(credit_scale > 0.0) || !std::isfinite(credit_scale)) {
    throw InputError("model config: credit_scale must be positive and finite");
  }
  if (!(poisson_rate_cap > 0.0)) throw InputError("model config: poisson_rate_cap must be positive");
}

std::span<const Param> active_params(const ModelConfig& config) {
  const std::span<const Param> all(kAllParams);
  return config.include_credit_intercept ? all : all.first(kParamCount - 1);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double bernoulli_log_pmf(int y, double p) { return y == 1 ? std::log(p) : std::log1p(-p); }

double bernoulli_logit_log_pmf(int y, double eta) {
  return y == 1 ? log_sigmoid(eta) : log_sigmoid(-eta);
}

double log_factorial(std::int64_t k) {
  if (k < 0) throw std::invalid_argument("log_factorial: negative argument");
  if (k < 2) return 0.0;
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(static_cast<double>(k) + 1.0, &sign);
#else
  return std::lgamma(static_cast<double>(k) + 1.0);
#endif
}

double poisson_log_pmf(std::int64_t k, double rate, double rate_cap) {
  if (k < 0) throw std::invalid_argument("poisson_log_pmf: negative count");
  if (!(rate > 0.0)) throw std::invalid_argument("poisson_log_pmf: rate must be positive");
  if (rate > rate_cap) throw RateOverflowError(std::log(rate), rate_cap);
  return static_cast<double>(k) * std::log(rate) - rate - log_factorial(k);
}

double std_normal_log_pdf(double x) { return -0.5 * x * x - kHalfLog2Pi; }

double log_prior(const ModelParams& theta, const ModelConfig& config) {
  double total = 0.0;
  for (auto p : active_params(config)) total += std_normal_log_pdf(theta[p]);
  return total;
}

double job_predictor(const ModelParams& theta, double c, const Observation& obs) {
  return theta.b_j + obs.sex * theta.beta_j_s + obs.age_std * theta.beta_j_a + c * theta.beta_j_c;
}

double house_predictor(const ModelParams& theta, double c, const Observation& obs) {
  return theta.b_h + obs.sex * theta.beta_h_s + obs.age_std * theta.beta_h_a + c * theta.beta_h_c;
}

double credit_predictor(const ModelParams& theta, double c, const Observation& obs,
                        const ModelConfig& config) {
  const double eta = obs.sex * theta.beta_c_s + obs.age_std * theta.beta_c_a + c * theta.beta_c_c;
  return config.include_credit_intercept ? eta + theta.b_c : eta;
}

std::int64_t scaled_credit(const Observation& obs, const ModelConfig& config) {
  // nearbyint honours the default round-half-to-even mode.
  return static_cast<std::int64_t>(
      std::nearbyint(static_cast<double>(obs.credit) / config.credit_scale));
}

double block_log_likelihood(Block block, const ModelParams& theta, double c,
                            const Observation& obs, const ModelConfig& config) {
  switch (block) {
    case Block::job:
      return bernoulli_logit_log_pmf(obs.job, job_predictor(theta, c, obs));
    case Block::house:
      return bernoulli_logit_log_pmf(obs.house, house_predictor(theta, c, obs));
    case Block::credit: {
      const double eta = credit_predictor(theta, c, obs, config);
      const double rate = std::exp(eta);
      if (!(rate <= config.poisson_rate_cap)) throw RateOverflowError(eta, config.poisson_rate_cap);
      const auto k = scaled_credit(obs, config);
      // k*eta rather than k*log(exp(eta)): exact in log space even when exp underflows.
      return static_cast<double>(k) * eta - rate - log_factorial(k);
    }
  }
  return 0.0;
}

double obs_log_likelihood(const ModelParams& theta, double c, const Observation& obs,
                          bool include_credit, const ModelConfig& config) {
  double total = block_log_likelihood(Block::job, theta, c, obs, config) +
                 block_log_likelihood(Block::house, theta, c, obs, config);
  if (include_credit) total += block_log_likelihood(Block::credit, theta, c, obs, config);
  return total;
}

double log_posterior(const ModelParams& theta, const LatentState& latents, const Dataset& data,
                     const ModelConfig& config) {
  if (latents.size() != data.size()) {
    throw std::invalid_argument("log_posterior: " + std::to_string(latents.size()) +
                                " latents for " + std::to_string(data.size()) + " observations");
  }
  double total = log_prior(theta, config);
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += std_normal_log_pdf(latents.c[i]) +
             obs_log_likelihood(theta, latents.c[i], data[i], true, config);
  }
  return total;
}

std::string params_to_text(const ModelParams& theta, bool include_credit_intercept) {
  ModelConfig config;
  config.include_credit_intercept = include_credit_intercept;
  std::string out;
  for (auto p : active_params(config)) {
    out += std::string(param_name(p)) + " = " + io::format_exact(theta[p]) + "\n";
  }
  return out;
}

ModelParams params_from_text(std::string_view text) {
  ModelParams theta;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = io::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw InputError("params line " + std::to_string(line_no) + ": expected 'name = value'");
    }
    const auto name = io::trim(trimmed.substr(0, eq));
    const auto value_text = io::trim(trimmed.substr(eq + 1));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc() || ptr != value_text.data() + value_text.size() || !std::isfinite(value)) {
      throw InputError("params line " + std::to_string(line_no) + ": bad value '" + value_text + "'");
    }
    theta[param_from_name(name)] = value;
  }
  return theta;
}

}  // namespace faircredit
