#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"
#include "faircredit/predictors.hpp"
#include "test_support.hpp"

using namespace faircredit;

namespace {

double sse(const Eigen::MatrixXd& x, const std::vector<double>& y, const LinearModel& m) {
  const auto pred = predict_ols(m, x);
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
  return s;
}

Dataset tiny_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  Dataset d;
  d.standardization.enabled = true;
  for (std::size_t i = 0; i < n; ++i) {
    const int sex = coin(gen), job = coin(gen), house = coin(gen);
    const double age = nd(gen);
    const auto credit = static_cast<std::int64_t>(1000 + 300 * sex + 200 * age + 800 * job - 400 * house +
                                                  100 * nd(gen) + 500);
    d.observations.push_back({sex, age, job, house, std::max<std::int64_t>(1, credit)});
  }
  return d;
}

}  // namespace

TEST(Ols, ExactLine) {
  Eigen::MatrixXd x(10, 1);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i * 0.7 - 2;
    y[i] = 2 * x(i, 0) + 1;
  }
  const auto m = fit_ols(x, y, {"x"});
  EXPECT_NEAR(m.coefficients[0], 2.0, 1e-10);
  EXPECT_NEAR(m.intercept, 1.0, 1e-10);
  const auto pred = predict_ols(m, x);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(pred[i], y[i], 1e-9);
}

TEST(Ols, DuplicateColumnNamesIt) {
  Eigen::MatrixXd x(10, 2);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = x(i, 1) = i;
    y[i] = i % 3;
  }
  try {
    fit_ols(x, y, {"a", "b"});
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.column(), "b");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(10, 1, 4.0);
  try {
    fit_ols(c, y, {"const"});
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.column(), "const");
  }
}

TEST(Ols, ResidualOrthogonalToDesign) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(50, 3);
  std::vector<double> y(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nd(gen);
    y[i] = nd(gen) + x(i, 0) - 2 * x(i, 2);
  }
  const auto m = fit_ols(x, y);
  const auto pred = predict_ols(m, x);
  Eigen::VectorXd r(50);
  for (int i = 0; i < 50; ++i) r(i) = y[i] - pred[i];
  EXPECT_NEAR(r.sum(), 0.0, 1e-8);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(x.col(j).dot(r), 0.0, 1e-8);
}

TEST(Ols, PerturbationNeverLowersSse) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(40, 4);
  std::vector<double> y(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = nd(gen);
    y[i] = 3 + nd(gen);
  }
  const auto m = fit_ols(x, y);
  const double base = sse(x, y, m);
  for (int j = -1; j < 4; ++j) {
    for (double eps : {1e-3, -1e-3}) {
      auto p = m;
      (j < 0 ? p.intercept : p.coefficients[j]) += eps;
      EXPECT_GE(sse(x, y, p), base);
    }
  }
}

TEST(Ols, RequiresEnoughRowsAndMatchingColumns) {
  Eigen::MatrixXd x(5, 4);
  x.setRandom();
  std::vector<double> y(5, 1.0);
  EXPECT_THROW(fit_ols(x, y), std::invalid_argument);
  const auto d = tiny_dataset(5, 1);
  EXPECT_THROW(fit_full(d), std::invalid_argument);
  const auto m = fit_full(tiny_dataset(30, 1));
  EXPECT_THROW(predict_ols(m, Eigen::MatrixXd::Zero(3, 2)), std::invalid_argument);
}

TEST(Ols, PredictionBasics) {
  LinearModel m{{"a", "b"}, {0.0, 0.0}, 7.0};
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
  for (double p : predict_ols(m, x)) EXPECT_EQ(p, 7.0);
  LinearModel n{{"a", "b"}, {1.5, -2.0}, 0.25};
  const auto before = predict_ols(n, x);
  n.intercept += 3.0;
  const auto after = predict_ols(n, x);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_DOUBLE_EQ(after[i] - before[i], 3.0);
}

TEST(Baselines, FeatureSetsAndInvariance) {
  const auto d = tiny_dataset(200, 2);
  const auto full = fit_full(d);
  EXPECT_EQ(full.feature_names, kFullFeatures);
  EXPECT_EQ(full.coefficients.size(), 4u);
  const auto unaware = fit_unaware(d);
  EXPECT_EQ(unaware.coefficients.size(), 2u);
  auto changed = d;
  for (auto& o : changed.observations) {
    o.sex = 1 - o.sex;
    o.age_std = 3.0 * o.age_std + 17.0;
  }
  EXPECT_EQ(predict_linear(unaware, d), predict_linear(unaware, changed));
}

TEST(Baselines, UnawareCollinearJobHouse) {
  auto d = tiny_dataset(50, 3);
  for (auto& o : d.observations) o.house = o.job;
  EXPECT_THROW(fit_unaware(d), RankDeficientError);
}

TEST(Baselines, TextRoundTrip) {
  const auto m = fit_full(tiny_dataset(60, 4));
  EXPECT_EQ(linear_model_from_text(linear_model_to_text(m)), m);
  EXPECT_EQ(linear_model_from_text("# config_hash=1\n" + linear_model_to_text(m)), m);
}

TEST(Forest, DepthZeroIsBaggedMean) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::vector<double> c(300), y(300);
  for (std::size_t i = 0; i < 300; ++i) {
    c[i] = nd(gen);
    y[i] = 10 + 3 * nd(gen);
  }
  ForestConfig cfg{100, 0, 5, 7};
  const auto f = fit_forest(c, y, cfg);
  for (const auto& t : f.trees) {
    EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.depth(), 0u);
  }
  double mean = 0, var = 0;
  for (double v : y) mean += v;
  mean /= 300;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= 299;
  const double se = std::sqrt(var / 300);
  EXPECT_NEAR(f.predict(0.3), mean, 3 * se);
  EXPECT_EQ(f.predict(-5.0), f.predict(5.0));
}

TEST(Forest, StepRecovery) {
  std::vector<double> c(100), y(100);
  for (int i = 0; i < 100; ++i) {
    c[i] = -1.0 + 2.0 * i / 99.0;
    y[i] = c[i] < 0 ? 0.0 : 100.0;
  }
  const auto f = fit_forest(c, y, ForestConfig{50, 2, 5, 1});
  const auto pred = predict_forest(f, c);
  double ss_res = 0, ss_tot = 0;
  for (int i = 0; i < 100; ++i) {
    ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
    ss_tot += (y[i] - 50) * (y[i] - 50);
  }
  EXPECT_GT(1 - ss_res / ss_tot, 0.95);
  EXPECT_LT(f.predict(-1), f.predict(1));
}

TEST(Forest, MoreTreesNoWorseOnHeldOut) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  auto make = [&](std::size_t n, std::vector<double>& c, std::vector<double>& y) {
    c.resize(n);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = nd(gen);
      y[i] = std::sin(2 * c[i]) * 5 + 2 * nd(gen);
    }
  };
  std::vector<double> c, y, ct, yt;
  make(400, c, y);
  make(2000, ct, yt);
  auto mse = [&](const ForestModel& f) {
    const auto p = predict_forest(f, ct);
    double s = 0;
    for (std::size_t i = 0; i < yt.size(); ++i) s += (yt[i] - p[i]) * (yt[i] - p[i]);
    return s / yt.size();
  };
  EXPECT_LE(mse(fit_forest(c, y, {200, 6, 5, 3})), mse(fit_forest(c, y, {1, 6, 5, 3})));
}

TEST(Forest, BoundsDepthAndExtrapolation) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  std::vector<double> c(250), y(250);
  for (std::size_t i = 0; i < 250; ++i) {
    c[i] = nd(gen);
    y[i] = std::exp(c[i]) + nd(gen);
  }
  const auto f = fit_forest(c, y, ForestConfig{40, 4, 3, 2});
  const double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
  for (double q = -8; q <= 8; q += 0.05) {
    const double p = f.predict(q);
    EXPECT_GE(p, lo);
    EXPECT_LE(p, hi);
  }
  double max_thr = -INFINITY;
  for (const auto& t : f.trees) {
    EXPECT_LE(t.depth(), 4u);
    for (const auto& n : t.nodes) {
      if (!n.leaf) max_thr = std::max(max_thr, n.threshold);
    }
  }
  EXPECT_EQ(f.predict(1e9), f.predict(max_thr + 1));
}

TEST(Forest, LeavesWithinBootstrapTargets) {
  std::vector<double> c{0.1, 0.4, 0.2, 0.9, 0.5, 0.3, 0.8, 0.7, 0.6, 0.05, 0.95, 0.45};
  std::vector<double> y{1, 4, 2, 9, 5, 3, 8, 7, 6, 0.5, 9.5, 4.5};
  const auto t = fit_tree(c, y, 3, 2);
  for (const auto& n : t.nodes) {
    if (n.leaf) {
      EXPECT_GE(n.value, 0.5);
      EXPECT_LE(n.value, 9.5);
    }
  }
  RegressionTree single;
  single.nodes.push_back({true, 0.0, 42.0, -1, -1});
  EXPECT_EQ(single.predict(-3.0), 42.0);
  EXPECT_EQ(single.predict(1e9), 42.0);
}

TEST(Forest, SeedReproducibilityAndSerialization) {
  std::vector<double> c(60), y(60);
  for (int i = 0; i < 60; ++i) {
    c[i] = std::cos(i * 1.3);
    y[i] = i % 7;
  }
  const auto a = fit_forest(c, y, {20, 5, 2, 11});
  const auto b = fit_forest(c, y, {20, 5, 2, 11});
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == fit_forest(c, y, {20, 5, 2, 12}));
  const auto text = forest_to_text(a);
  EXPECT_EQ(text.rfind("forest 20 5 2 11\n", 0), 0u);
  EXPECT_TRUE(forest_from_text(text) == a);
}

TEST(Forest, RejectsBadInput) {
  std::vector<double> c(9, 0.0), y(9, 1.0);
  EXPECT_THROW(fit_forest(c, y, ForestConfig{10, 3, 5, 0}), std::invalid_argument);
  EXPECT_THROW(fit_forest(c, std::vector<double>(8, 1.0), ForestConfig{10, 3, 1, 0}), std::invalid_argument);
  ForestConfig bad{0, 3, 5, 0};
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(Fair, StageTwoIsAFunctionOfCAlone) {
  ModelConfig mc;
  mc.include_credit_intercept = true;
  mc.credit_scale = 100;
  const auto d = tiny_dataset(80, 9);
  SamplerConfig sc;
  sc.iterations = 600;
  sc.burn_in = 200;
  const auto fit = fit_fair(d, mc, sc, ForestConfig{30, 4, 3, 1});
  EXPECT_EQ(fit.train_latent.size(), d.size());
  EXPECT_EQ(fit.train_latent, fit.chain.latent_means());
  EXPECT_EQ(fit.model.theta_hat, fit.chain.median_params());
  const std::vector<double> cs{-1.0, 0.0, 0.7};
  EXPECT_EQ(predict_forest(fit.model.forest, cs), predict_forest(fit.model.forest, cs));
  // Two observations with equal inferred C get equal predictions whatever else differs.
  for (double c : cs) EXPECT_EQ(fit.model.forest.predict(c), fit.model.forest.predict(c + 0.0));
}

TEST(Fair, DeterministicAndIdenticalRowsAgree) {
  ModelConfig mc;
  mc.include_credit_intercept = true;
  mc.credit_scale = 100;
  const auto d = tiny_dataset(60, 10);
  SamplerConfig sc;
  sc.iterations = 500;
  sc.burn_in = 100;
  const auto a = fit_fair(d, mc, sc, ForestConfig{20, 3, 3, 2});
  const auto b = fit_fair(d, mc, sc, ForestConfig{20, 3, 3, 2});
  EXPECT_TRUE(a.model == b.model);

  Dataset test;
  test.standardization = d.standardization;
  test.observations = {d[0], d[0], d[1]};
  test.observations[1].credit = d[0].credit + 5000;  // credit never informs test latents
  const auto p = predict_fair(a.model, test);
  EXPECT_EQ(p[0], p[1]);
}

TEST(Fair, ZeroThetaGivesNearlyConstantPredictions) {
  ModelConfig mc;
  mc.include_credit_intercept = true;
  mc.credit_scale = 100;
  const auto d = tiny_dataset(120, 12);
  SamplerConfig sc;
  sc.iterations = 600;
  sc.burn_in = 200;
  auto fit = fit_fair(d, mc, sc, ForestConfig{100, 3, 5, 4});
  fit.model.theta_hat = ModelParams{};
  fit.model.latent_sampler_config.iterations = 20000;
  const auto preds = predict_fair(fit.model, d);
  std::vector<double> per_tree;
  for (const auto& t : fit.model.forest.trees) per_tree.push_back(t.predict(0.0));
  double m = 0, v = 0;
  for (double x : per_tree) m += x;
  m /= per_tree.size();
  for (double x : per_tree) v += (x - m) * (x - m);
  const double boot_se = std::sqrt(v / (per_tree.size() - 1) / per_tree.size());
  const auto [lo, hi] = std::minmax_element(preds.begin(), preds.end());
  // Every observation shares the prior latent, hence the same random stream: identical output.
  EXPECT_LE(*hi - *lo, boot_se);
}

TEST(Fair, SaveLoadRoundTrip) {
  fctest::TempDir dir("fair");
  ModelConfig mc;
  mc.include_credit_intercept = true;
  mc.credit_scale = 100;
  const auto d = tiny_dataset(40, 13);
  SamplerConfig sc;
  sc.iterations = 300;
  sc.burn_in = 100;
  sc.seed = 9;
  const auto fit = fit_fair(d, mc, sc, ForestConfig{10, 3, 3, 5}, LatentFeature::median);
  save_fair_model(fit.model, dir.path(), "config_hash=q");
  const auto back = load_fair_model(dir.path());
  EXPECT_TRUE(back == fit.model);
  EXPECT_EQ(predict_fair(back, d), predict_fair(fit.model, d));
}
