#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "faircredit/dataset.hpp"
#include "faircredit/diagnostics.hpp"
#include "faircredit/error.hpp"
#include "faircredit/io.hpp"
#include "faircredit/sampler.hpp"
#include "test_support.hpp"

using namespace faircredit;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Trapezoid quadrature of the single-observation latent posterior (no credit).
std::pair<double, double> quadrature_moments(const ModelParams& theta, const Observation& obs) {
  const int points = 2001;
  const double lo = -10, hi = 10, h = (hi - lo) / (points - 1);
  double z = 0, m1 = 0, m2 = 0;
  for (int k = 0; k < points; ++k) {
    const double c = lo + k * h;
    const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
    const double logp = -0.5 * c * c + obs_log_likelihood(theta, c, obs, false);
    const double p = w * std::exp(logp);
    z += p;
    m1 += p * c;
    m2 += p * c * c;
  }
  const double mean = m1 / z;
  return {mean, std::sqrt(m2 / z - mean * mean)};
}

Dataset small_synthetic(std::size_t n, std::uint64_t seed, ModelConfig* cfg_out = nullptr) {
  ModelParams truth{0.3, -0.5, 0.4, 1.0, -0.2, 0.5, -0.6, 0.8, -0.2, 0.2, 0.7, 1.2};
  ModelConfig cfg;
  cfg.include_credit_intercept = true;
  if (cfg_out) *cfg_out = cfg;
  return generate_synthetic(truth, cfg, n, seed).data;
}

}  // namespace

TEST(LatentStep, TinyDeltaAlmostAlwaysAccepts) {
  ModelParams theta{0.2, 0.3, -0.1, 1.2, 0.0, 0.4, 0.2, -0.7, 0.1, 0.0, 0.3, 0.0};
  const auto o = fctest::obs(1, 0.4, 1, 0, 3);
  RandomStream rng(1);
  double c = 0.2;
  int accepted = 0;
  for (int s = 0; s < 1000; ++s) {
    auto r = mh_step_latent(c, theta, o, 1e-12, true, ModelConfig{}, rng);
    EXPECT_LE(std::abs(r.value - c), 1e-12);
    c = r.value;
    accepted += r.accepted;
  }
  EXPECT_GT(accepted, 990);
}

TEST(LatentStep, ZeroThetaTargetsStandardNormal) {
  const auto o = fctest::obs(0, 0.0, 1, 1, 5);
  RandomStream rng(77);
  std::vector<double> draws;
  double c = 0.0;
  for (int s = 0; s < 50000; ++s) {
    c = mh_step_latent(c, ModelParams{}, o, 1.5, false, ModelConfig{}, rng).value;
    draws.push_back(c);
  }
  const double ess = ess_bulk(draws);
  EXPECT_NEAR(mean_of(draws), 0.0, 3.0 / std::sqrt(ess));
  EXPECT_NEAR(sample_sd(draws), 1.0, 0.05);
}

TEST(LatentStep, NonNegativeLogRatioAlwaysAccepts) {
  RandomStream rng(3);
  for (int s = 0; s < 10000; ++s) {
    auto r = metropolis_uniform_step(0.0, -5.0, 1.0, rng, [](double) { return -5.0; });
    ASSERT_TRUE(r.accepted);
  }
}

TEST(LatentStep, ConsumesExactlyTwoUniformsInOrder) {
  RandomStream rng(11), copy(11);
  const double current = 0.3, delta = 0.7;
  const auto r = mh_step_latent(current, ModelParams{}, fctest::obs(0, 0, 0, 0, 1), delta, false,
                                ModelConfig{}, rng);
  const double proposal = copy.uniform(current - delta, current + delta);
  const double u = copy.uniform();
  EXPECT_TRUE(rng == copy);
  const double log_r = -0.5 * (proposal * proposal - current * current);
  EXPECT_EQ(r.accepted, std::log(u) < log_r);
  EXPECT_EQ(r.value, r.accepted ? proposal : current);
}

TEST(LatentStep, FailingTargetCountsAsRejection) {
  RandomStream rng(5);
  auto r = metropolis_uniform_step(1.0, 0.0, 0.5, rng,
                                   [](double) -> double { throw RateOverflowError(42.0, 1e7); });
  EXPECT_TRUE(r.failed);
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.value, 1.0);
  EXPECT_EQ(r.bad_predictor, 42.0);
}

// Empirical acceptance from a fixed state against E[min(1, r)] computed by
// integrating over the uniform proposal.
TEST(LatentStep, AcceptanceMatchesExpectedMinRatio) {
  ModelParams theta{0.5, 0.0, 0.0, 2.0, -0.3, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0};
  const auto o = fctest::obs(1, 0.0, 1, 0, 1);
  const double current = 0.8, delta = 2.0;
  const double f0 = latent_log_target(current, theta, o, false, ModelConfig{});
  const int grid = 20000;
  double expected = 0;
  for (int k = 0; k < grid; ++k) {
    const double c = current - delta + (k + 0.5) * (2 * delta / grid);
    expected += std::min(1.0, std::exp(latent_log_target(c, theta, o, false, ModelConfig{}) - f0));
  }
  expected /= grid;
  RandomStream rng(2024);
  const int trials = 40000;
  int accepted = 0;
  for (int t = 0; t < trials; ++t) {
    accepted += mh_step_latent(current, theta, o, delta, false, ModelConfig{}, rng).accepted;
  }
  const double se = std::sqrt(expected * (1 - expected) / trials);
  EXPECT_NEAR(static_cast<double>(accepted) / trials, expected, 3 * se);
}

TEST(ParamStep, ZeroStepAlwaysAccepted) {
  ModelConfig cfg;
  const auto d = small_synthetic(30, 1, &cfg);
  LatentState z{std::vector<double>(d.size(), 0.3)};
  ModelParams theta{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.1, 0.1, 0.1, 0.5};
  RandomStream rng(8);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto r = mh_step_param(static_cast<Param>(i), theta, z, d, 0.0, cfg, rng);
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.theta, theta);
  }
}

TEST(ParamStep, OnlyTouchesOneCoordinate) {
  ModelConfig cfg;
  const auto d = small_synthetic(30, 1, &cfg);
  LatentState z{std::vector<double>(d.size(), 0.0)};
  RandomStream rng(9);
  ModelParams theta;
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = static_cast<Param>(rep % kParamCount);
    const auto r = mh_step_param(p, theta, z, d, 0.3, cfg, rng);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      const auto q = static_cast<Param>(i);
      if (q != p) {
        EXPECT_EQ(r.theta[q], theta[q]);
      }
    }
    theta = r.theta;
  }
}

TEST(ParamStep, BlockRatioMatchesFullPosteriorRatio) {
  ModelConfig cfg;
  const auto d = small_synthetic(40, 2, &cfg);
  LatentState z;
  RandomStream g(4);
  for (std::size_t i = 0; i < d.size(); ++i) z.c.push_back(g.normal());
  ModelParams theta{0.1, -0.2, 0.3, 0.5, 0.0, 0.2, -0.1, 0.4, 0.05, 0.0, 0.3, 1.0};
  // The step's accept decision must equal log u < full log-posterior difference.
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto p = static_cast<Param>(i);
    RandomStream rng(100 + i), copy(100 + i);
    const auto r = mh_step_param(p, theta, z, d, 0.2, cfg, rng);
    ModelParams proposal = theta;
    proposal[p] += 0.2 * copy.normal();
    const double u = copy.uniform();
    const double diff = log_posterior(proposal, z, d, cfg) - log_posterior(theta, z, d, cfg);
    if (std::abs(std::log(u) - diff) > 1e-8) {
      EXPECT_EQ(r.accepted, std::log(u) < diff) << param_name(p);
    }
  }
}

TEST(ParamStep, HugeStepRarelyAcceptedOnRealData) {
  const auto data = split(preprocess(load_csv(fctest::kDataCsv).records), {800, 0}).train;
  LatentState z{std::vector<double>(data.size(), 0.0)};
  ModelParams theta;
  RandomStream rng(31);
  std::size_t accepted = 0, steps = 0;
  for (int sweep = 0; sweep < 1000; ++sweep) {
    for (Param p : active_params(ModelConfig{})) {
      auto r = mh_step_param(p, theta, z, data, 100.0, ModelConfig{}, rng);
      accepted += r.accepted;
      ++steps;
      if (r.accepted) theta = r.theta;
    }
  }
  EXPECT_LT(static_cast<double>(accepted) / steps, 0.05);
}

TEST(RunChain, StoredDrawCounts) {
  ModelConfig cfg;
  const auto d = small_synthetic(5, 3, &cfg);
  struct Case {
    std::size_t it, burn, thin, expected;
  };
  for (auto c : {Case{5000, 1000, 1, 4000}, Case{1000, 999, 1, 1}, Case{1000, 100, 7, 128}, Case{50, 0, 3, 16}}) {
    SamplerConfig sc;
    sc.iterations = c.it;
    sc.burn_in = c.burn;
    sc.thin = c.thin;
    const auto chain = run_chain(d, cfg, sc);
    EXPECT_EQ(chain.draw_count(), c.expected);
    EXPECT_EQ(sc.stored_draws(), c.expected);
    for (const auto& lat : chain.latent_draws) EXPECT_EQ(lat.size(), c.expected);
  }
}

TEST(RunChain, DeterministicPerSeed) {
  ModelConfig cfg;
  const auto d = small_synthetic(40, 4, &cfg);
  SamplerConfig sc;
  sc.iterations = 600;
  sc.burn_in = 200;
  sc.seed = 5;
  const auto a = run_chain(d, cfg, sc);
  const auto b = run_chain(d, cfg, sc);
  EXPECT_TRUE(a == b);
  sc.seed = 6;
  EXPECT_FALSE(a == run_chain(d, cfg, sc));
}

TEST(RunChain, AdaptedAcceptanceInRangeOnSyntheticData) {
  ModelConfig cfg;
  const auto d = small_synthetic(200, 7, &cfg);
  SamplerConfig sc;
  sc.seed = 3;
  const auto chain = run_chain(d, cfg, sc);
  EXPECT_GE(chain.accept_rate_latents, 0.1);
  EXPECT_LE(chain.accept_rate_latents, 0.7);
  for (Param p : active_params(cfg)) {
    const double a = chain.accept_rate_params[static_cast<std::size_t>(p)];
    EXPECT_GE(a, 0.1) << param_name(p);
    EXPECT_LE(a, 0.7) << param_name(p);
  }
  EXPECT_EQ(chain.failed_steps, 0u);
}

TEST(RunChain, AbortsWhenLikelihoodKeepsFailing) {
  ModelConfig cfg;
  cfg.poisson_rate_cap = 1e-6;  // every credit term overflows
  const auto d = small_synthetic(10, 1);
  SamplerConfig sc;
  sc.iterations = 300;
  sc.burn_in = 100;
  EXPECT_THROW(run_chain(d, cfg, sc), SamplerAbort);
}

TEST(RunChain, RejectsBadConfigAndEmptyData) {
  SamplerConfig sc;
  sc.burn_in = sc.iterations;
  EXPECT_THROW(sc.validate(), InputError);
  sc = SamplerConfig{};
  sc.thin = 0;
  EXPECT_THROW(sc.validate(), InputError);
  sc = SamplerConfig{};
  sc.delta = 0;
  EXPECT_THROW(sc.validate(), InputError);
  sc = SamplerConfig{};
  sc.param_step = -1;
  EXPECT_THROW(sc.validate(), InputError);
  EXPECT_THROW(run_chain(Dataset{}, ModelConfig{}, SamplerConfig{}), InputError);
}

TEST(RunChain, OrientationFlipsLoadingsAndLatents) {
  ModelConfig cfg;
  const auto d = small_synthetic(30, 5, &cfg);
  SamplerConfig sc;
  sc.iterations = 400;
  sc.burn_in = 100;
  auto chain = run_chain(d, cfg, sc);
  auto flipped = chain;
  flip_latent_axis(flipped);
  EXPECT_EQ(flipped.param_draws[0].beta_j_c, -chain.param_draws[0].beta_j_c);
  EXPECT_EQ(flipped.param_draws[0].b_j, chain.param_draws[0].b_j);
  EXPECT_EQ(flipped.latent_draws[3][7], -chain.latent_draws[3][7]);
  flip_latent_axis(flipped);
  EXPECT_TRUE(flipped == chain);

  orient_latent_axis(chain);
  const auto m = chain.median_params();
  EXPECT_GE(m.beta_j_c + m.beta_h_c + m.beta_c_c, 0.0);
  EXPECT_FALSE(orient_latent_axis(chain));
}

TEST(TestInference, ZeroThetaGivesPrior) {
  SamplerConfig sc;
  const auto post = infer_latent_test(ModelParams{}, fctest::obs(1, 0.5, 1, 0, 900), ModelConfig{}, sc);
  EXPECT_EQ(post.draws.size(), 4000u);
  EXPECT_NEAR(post.mean, 0.0, 3.0 / std::sqrt(ess_bulk(post.draws)));
  EXPECT_GE(post.std, 0.9);
  EXPECT_LE(post.std, 1.1);
  const auto [lo, hi] = std::minmax_element(post.draws.begin(), post.draws.end());
  EXPECT_GE(post.median, *lo);
  EXPECT_LE(post.median, *hi);
}

TEST(TestInference, JobLoadingTiltsPosteriorAsQuadratureSays) {
  ModelParams theta;
  theta.beta_j_c = 3.0;
  const auto o = fctest::obs(0, 0.0, 1, 0, 100);
  SamplerConfig sc;
  sc.iterations = 200000;
  sc.burn_in = 2000;
  const auto post = infer_latent_test(theta, o, ModelConfig{}, sc);
  const auto [mean, sd] = quadrature_moments(theta, o);
  EXPECT_GT(post.mean, 0.0);
  EXPECT_NEAR(post.mean, mean, 0.02);
  EXPECT_NEAR(post.std, sd, 0.02);
}

TEST(TestInference, IgnoresCreditUnlessLeaky) {
  ModelParams theta;
  theta.beta_c_c = 1.0;
  SamplerConfig sc;
  const auto a = infer_latent_test(theta, fctest::obs(0, 0, 1, 1, 1), ModelConfig{}, sc);
  const auto b = infer_latent_test(theta, fctest::obs(0, 0, 1, 1, 50), ModelConfig{}, sc);
  EXPECT_EQ(a.draws, b.draws);
  const auto leaky = infer_latent_test(theta, fctest::obs(0, 0, 1, 1, 50), ModelConfig{}, sc, true);
  EXPECT_GT(leaky.mean, a.mean + 1.0);
}

TEST(TestInference, SameObservationSameSummary) {
  ModelParams theta{0.5, -0.3, 0.2, 1.0, 0.1, 0.2, -0.4, 0.9, 0, 0, 0, 0};
  const auto o = fctest::obs(1, -1.2, 0, 1, 10);
  const auto a = infer_latent_test(theta, o, ModelConfig{}, SamplerConfig{});
  const auto b = infer_latent_test(theta, o, ModelConfig{}, SamplerConfig{});
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.median, b.median);
  EXPECT_EQ(a.draws, b.draws);
}

TEST(ChainCsv, RoundTripsThroughReader) {
  fctest::TempDir dir("chain");
  ModelConfig cfg;
  const auto d = small_synthetic(12, 8, &cfg);
  SamplerConfig sc;
  sc.iterations = 300;
  sc.burn_in = 100;
  const auto chain = run_chain(d, cfg, sc);
  io::write_file_atomic(dir / "params.csv", params_chain_to_csv(chain, "config_hash=abc"));
  io::write_file_atomic(dir / "latents.csv", latents_chain_to_csv(chain, {2, 5}));
  const auto pt = read_chain_csv(dir / "params.csv");
  ASSERT_EQ(pt.names.size(), 12u);
  EXPECT_EQ(pt.names[0], "b_j");
  EXPECT_EQ(pt.names.back(), "b_c");
  EXPECT_EQ(pt.rows(), 200u);
  EXPECT_EQ(pt.columns[3], chain.param_series(Param::beta_j_c));
  const auto lt = read_chain_csv(dir / "latents.csv");
  EXPECT_EQ(lt.names, (std::vector<std::string>{"c_2", "c_5"}));
  EXPECT_EQ(lt.columns[1], chain.latent_draws[5]);
}

TEST(ChainCsv, EmptyOrMalformedFails) {
  fctest::TempDir dir("chain");
  io::write_file_atomic(dir / "e.csv", "");
  EXPECT_THROW(read_chain_csv(dir / "e.csv"), InputError);
  io::write_file_atomic(dir / "h.csv", "draw,b_j\n");
  EXPECT_THROW(read_chain_csv(dir / "h.csv"), InputError);
  io::write_file_atomic(dir / "m.csv", "draw,b_j\n0,x\n");
  EXPECT_THROW(read_chain_csv(dir / "m.csv"), InputError);
}
