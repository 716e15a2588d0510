#include "faircredit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"
#include "stats.hpp"

namespace faircredit {
namespace {

// Block log-likelihood up to terms that do not depend on the parameters, for
// use in acceptance-ratio differences (the log k! of the Poisson term cancels).
double block_kernel(Block block, const ModelParams& theta, double c, const Observation& obs,
                    const ModelConfig& config) {
  if (block != Block::credit) return block_log_likelihood(block, theta, c, obs, config);
  const double eta = credit_predictor(theta, c, obs, config);
  const double rate = std::exp(eta);
  if (!(rate <= config.poisson_rate_cap)) throw RateOverflowError(eta, config.poisson_rate_cap);
  return static_cast<double>(scaled_credit(obs, config)) * eta - rate;
}

double block_sum(Block block, const ModelParams& theta, const LatentState& latents,
                 const Dataset& data, const ModelConfig& config) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += block_kernel(block, theta, latents.c[i], data[i], config);
  }
  return total;
}

double adapt(double value, double accept_rate, const SamplerConfig& config) {
  return accept_rate > config.target_accept ? value * config.adapt_factor
                                            : value / config.adapt_factor;
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations <= burn_in) throw InputError("sampler config: iterations must exceed burn_in");
  if (thin < 1) throw InputError("sampler config: thin must be >= 1");
  if (!(delta > 0.0)) throw InputError("sampler config: delta must be positive");
  if (!(param_step > 0.0)) throw InputError("sampler config: param_step must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw InputError("sampler config: target_accept must lie in (0, 1)");
  }
  if (adapt_interval < 1) throw InputError("sampler config: adapt_interval must be >= 1");
  if (!(adapt_factor >= 1.0)) throw InputError("sampler config: adapt_factor must be >= 1");
  if (stored_draws() < 1) throw InputError("sampler config: schedule stores no draws");
}

double latent_log_target(double c, const ModelParams& theta, const Observation& obs,
                         bool include_credit, const ModelConfig& config) {
  return std_normal_log_pdf(c) + obs_log_likelihood(theta, c, obs, include_credit, config);
}

StepResult mh_step_latent(double current_c, const ModelParams& theta, const Observation& obs,
                          double delta, bool include_credit, const ModelConfig& config,
                          RandomStream& rng) {
  if (!(delta > 0.0)) throw std::invalid_argument("mh_step_latent: delta must be positive");
  auto target = [&](double c) { return latent_log_target(c, theta, obs, include_credit, config); };
  double current_density;
  try {
    current_density = target(current_c);
  } catch (const std::exception&) {
    // An unevaluable current state: let any evaluable proposal through.
    current_density = -INFINITY;
  }
  return metropolis_uniform_step(current_c, current_density, delta, rng, target);
}

ParamStepResult mh_step_param(Param name, const ModelParams& theta, const LatentState& latents,
                              const Dataset& data, double step, const ModelConfig& config,
                              RandomStream& rng) {
  if (!(step >= 0.0)) throw std::invalid_argument("mh_step_param: step must be non-negative");
  if (latents.size() != data.size()) {
    throw std::invalid_argument("mh_step_param: latent/data length mismatch");
  }
  ModelParams proposal = theta;
  proposal[name] = theta[name] + step * rng.normal();
  const double u = rng.uniform();

  const Block block = param_block(name);
  double log_ratio;
  try {
    log_ratio = std_normal_log_pdf(proposal[name]) - std_normal_log_pdf(theta[name]) +
                block_sum(block, proposal, latents, data, config);
  } catch (const RateOverflowError& e) {
    return {theta, false, true, e.linear_predictor()};
  } catch (const std::exception&) {
    return {theta, false, true};
  }
  try {
    log_ratio -= block_sum(block, theta, latents, data, config);
  } catch (const std::exception&) {
    log_ratio = INFINITY;
  }
  if (std::log(u) < log_ratio) return {proposal, true, false};
  return {theta, false, false};
}

std::vector<double> Chain::param_series(Param p) const {
  std::vector<double> out;
  out.reserve(param_draws.size());
  for (const auto& d : param_draws) out.push_back(d[p]);
  return out;
}

std::vector<double> Chain::latent_means() const {
  std::vector<double> out;
  out.reserve(latent_draws.size());
  for (const auto& draws : latent_draws) out.push_back(detail::mean(draws));
  return out;
}

std::vector<double> Chain::latent_medians() const {
  std::vector<double> out;
  out.reserve(latent_draws.size());
  for (const auto& draws : latent_draws) out.push_back(detail::quantile7(draws, 0.5));
  return out;
}

ModelParams Chain::median_params() const {
  ModelParams theta;
  for (auto p : active_params(model_config)) theta[p] = detail::quantile7(param_series(p), 0.5);
  return theta;
}

Chain run_chain(const Dataset& data, const ModelConfig& model_config,
                const SamplerConfig& sampler_config) {
  if (data.empty()) throw InputError("run_chain: empty dataset");
  model_config.validate();
  sampler_config.validate();

  const std::size_t n = data.size();
  const auto params = active_params(model_config);
  const auto& cfg = sampler_config;

  ModelParams theta;
  LatentState latents{std::vector<double>(n, 0.0)};
  RandomStream param_rng = RandomStream::derive(cfg.seed, 0);
  std::vector<RandomStream> latent_rng;
  latent_rng.reserve(n);
  for (std::size_t i = 0; i < n; ++i) latent_rng.push_back(RandomStream::derive(cfg.seed, i + 1));

  Chain chain;
  chain.config = cfg;
  chain.model_config = model_config;
  chain.rng_seed = cfg.seed;
  chain.param_draws.reserve(cfg.stored_draws());
  chain.latent_draws.assign(n, {});
  for (auto& d : chain.latent_draws) d.reserve(cfg.stored_draws());

  double delta = cfg.delta;
  std::array<double, kParamCount> steps{};
  for (auto p : params) steps[static_cast<std::size_t>(p)] = cfg.param_step;

  std::array<std::size_t, kParamCount> window_param_accepts{};
  std::size_t window_latent_accepts = 0;
  std::array<std::size_t, kParamCount> param_accepts{};
  std::size_t latent_accepts = 0;
  std::size_t failed = 0;
  std::size_t total = 0;
  double last_bad_predictor = NAN;

  auto check_failures = [&] {
    if (static_cast<double>(failed) > 0.01 * static_cast<double>(total)) {
      throw SamplerAbort(failed, total, last_bad_predictor);
    }
  };

  for (std::size_t sweep = 0; sweep < cfg.iterations; ++sweep) {
    const bool post_burn_in = sweep >= cfg.burn_in;

    for (auto p : params) {
      const auto k = static_cast<std::size_t>(p);
      auto r = mh_step_param(p, theta, latents, data, steps[k], model_config, param_rng);
      ++total;
      if (r.failed) {
        ++failed;
        last_bad_predictor = r.bad_predictor;
      }
      if (r.accepted) {
        theta = r.theta;
        ++window_param_accepts[k];
        if (post_burn_in) ++param_accepts[k];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto r = mh_step_latent(latents.c[i], theta, data[i], delta, true, model_config,
                              latent_rng[i]);
      ++total;
      if (r.failed) {
        ++failed;
        last_bad_predictor = r.bad_predictor;
      }
      if (r.accepted) {
        latents.c[i] = r.value;
        ++window_latent_accepts;
        if (post_burn_in) ++latent_accepts;
      }
    }

    if ((sweep + 1) % cfg.adapt_interval == 0) {
      if (!post_burn_in && cfg.adapt_during_burn_in) {
        const double window = static_cast<double>(cfg.adapt_interval);
        delta = adapt(delta, static_cast<double>(window_latent_accepts) / (window * n), cfg);
        for (auto p : params) {
          const auto k = static_cast<std::size_t>(p);
          steps[k] = adapt(steps[k], static_cast<double>(window_param_accepts[k]) / window, cfg);
        }
      }
      window_param_accepts.fill(0);
      window_latent_accepts = 0;
      check_failures();
    }

    if (post_burn_in && (sweep - cfg.burn_in + 1) % cfg.thin == 0) {
      chain.param_draws.push_back(theta);
      for (std::size_t i = 0; i < n; ++i) chain.latent_draws[i].push_back(latents.c[i]);
    }
  }
  check_failures();

  const double kept_sweeps = static_cast<double>(cfg.iterations - cfg.burn_in);
  for (auto p : params) {
    const auto k = static_cast<std::size_t>(p);
    chain.accept_rate_params[k] = static_cast<double>(param_accepts[k]) / kept_sweeps;
  }
  chain.accept_rate_latents = static_cast<double>(latent_accepts) / (kept_sweeps * n);
  chain.failed_steps = failed;
  chain.final_delta = delta;
  chain.final_param_steps = steps;
  return chain;
}

void flip_latent_axis(Chain& chain) {
  for (auto& theta : chain.param_draws) {
    theta.beta_j_c = -theta.beta_j_c;
    theta.beta_h_c = -theta.beta_h_c;
    theta.beta_c_c = -theta.beta_c_c;
  }
  for (auto& draws : chain.latent_draws) {
    for (auto& c : draws) c = -c;
  }
}

bool orient_latent_axis(Chain& chain) {
  if (chain.param_draws.empty()) return false;
  const double loading = detail::quantile7(chain.param_series(Param::beta_j_c), 0.5) +
                         detail::quantile7(chain.param_series(Param::beta_h_c), 0.5) +
                         detail::quantile7(chain.param_series(Param::beta_c_c), 0.5);
  if (loading >= 0.0) return false;
  flip_latent_axis(chain);
  return true;
}

LatentPosterior infer_latent_test(const ModelParams& theta_hat, const Observation& obs,
                                  const ModelConfig& model_config,
                                  const SamplerConfig& sampler_config, bool include_credit) {
  if (!theta_hat.all_finite()) throw std::invalid_argument("infer_latent_test: non-finite theta");
  model_config.validate();
  sampler_config.validate();
  const auto& cfg = sampler_config;

  auto rng = RandomStream::derive(cfg.seed, kTestInferenceStream);
  double c = 0.0;
  double delta = cfg.delta;
  std::size_t window_accepts = 0;
  std::size_t accepts = 0;
  std::size_t failed = 0;
  double last_bad_predictor = NAN;

  LatentPosterior post;
  post.draws.reserve(cfg.stored_draws());
  for (std::size_t s = 0; s < cfg.iterations; ++s) {
    const bool post_burn_in = s >= cfg.burn_in;
    const auto r = mh_step_latent(c, theta_hat, obs, delta, include_credit, model_config, rng);
    if (r.failed) {
      ++failed;
      last_bad_predictor = r.bad_predictor;
    }
    if (r.accepted) {
      c = r.value;
      ++window_accepts;
      if (post_burn_in) ++accepts;
    }
    if ((s + 1) % cfg.adapt_interval == 0) {
      if (!post_burn_in && cfg.adapt_during_burn_in) {
        delta = adapt(delta, static_cast<double>(window_accepts) / cfg.adapt_interval, cfg);
      }
      window_accepts = 0;
    }
    if (post_burn_in && (s - cfg.burn_in + 1) % cfg.thin == 0) post.draws.push_back(c);
  }
  if (static_cast<double>(failed) > 0.01 * static_cast<double>(cfg.iterations)) {
    throw SamplerAbort(failed, cfg.iterations, last_bad_predictor);
  }

  post.mean = detail::mean(post.draws);
  post.median = detail::quantile7(post.draws, 0.5);
  post.std = detail::sample_sd(post.draws);
  post.accept_rate = static_cast<double>(accepts) / static_cast<double>(cfg.iterations - cfg.burn_in);
  return post;
}

std::string params_chain_to_csv(const Chain& chain, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  const auto params = active_params(chain.model_config);
  out << "draw";
  for (auto p : params) out << ',' << param_name(p);
  out << '\n';
  for (std::size_t d = 0; d < chain.param_draws.size(); ++d) {
    out << d;
    for (auto p : params) out << ',' << io::format_exact(chain.param_draws[d][p]);
    out << '\n';
  }
  return out.str();
}

std::string latents_chain_to_csv(const Chain& chain, const std::vector<std::size_t>& subset,
                                 const std::string& header_comment) {
  std::vector<std::size_t> columns = subset;
  if (columns.empty()) {
    columns.resize(chain.latent_draws.size());
    for (std::size_t i = 0; i < columns.size(); ++i) columns[i] = i;
  }
  for (auto i : columns) {
    if (i >= chain.latent_draws.size()) {
      throw std::out_of_range("latents_chain_to_csv: observation index out of range");
    }
  }
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "draw";
  for (auto i : columns) out << ",c_" << i;
  out << '\n';
  for (std::size_t d = 0; d < chain.draw_count(); ++d) {
    out << d;
    for (auto i : columns) out << ',' << io::format_exact(chain.latent_draws[i][d]);
    out << '\n';
  }
  return out.str();
}

ChainTable read_chain_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("missing chain file '" + path.string() + "'");
  std::istringstream in(io::read_file(path));
  ChainTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = io::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto fields = io::split_csv_line(trimmed);
    if (!have_header) {
      if (fields.size() < 2) throw InputError("chain file '" + path.string() + "': no value columns");
      table.names.assign(fields.begin() + 1, fields.end());
      table.columns.assign(table.names.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != table.names.size() + 1) {
      throw InputError("chain file '" + path.string() + "' line " + std::to_string(line_no) +
                       ": expected " + std::to_string(table.names.size() + 1) + " fields");
    }
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      try {
        std::size_t used = 0;
        const double v = std::stod(fields[j + 1], &used);
        if (used != fields[j + 1].size()) throw std::invalid_argument("trailing characters");
        table.columns[j].push_back(v);
      } catch (const std::exception&) {
        throw InputError("chain file '" + path.string() + "' line " + std::to_string(line_no) +
                         ": bad value '" + fields[j + 1] + "'");
      }
    }
  }
  if (table.rows() == 0) throw InputError("chain file '" + path.string() + "' has no draws");
  return table;
}

}  // namespace faircredit
