#include "faircredit/eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "faircredit/io.hpp"

namespace faircredit {
namespace {

std::string snapshot(const CompareConfig& c) {
  std::ostringstream out;
  out << "model.include_credit_intercept=" << c.model.include_credit_intercept
      << " model.credit_scale=" << io::format_exact(c.model.credit_scale)
      << " sampler.iterations=" << c.sampler.iterations << " sampler.burn_in=" << c.sampler.burn_in
      << " sampler.thin=" << c.sampler.thin << " sampler.delta=" << io::format_exact(c.sampler.delta)
      << " sampler.param_step=" << io::format_exact(c.sampler.param_step)
      << " sampler.adapt=" << c.sampler.adapt_during_burn_in
      << " forest.n_trees=" << c.forest.n_trees << " forest.max_depth=" << c.forest.max_depth
      << " forest.min_leaf=" << c.forest.min_leaf << " forest.seed=" << c.forest.seed
      << " feature=" << (c.feature == LatentFeature::mean ? "mean" : "median")
      << " age_flip=" << (c.age_flip.mode == AgeFlip::Mode::mirror ? "mirror" : "shift_years");
  return out.str();
}

}  // namespace

double r_squared(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.empty() || targets.size() != predictions.size()) {
    throw std::invalid_argument("r_squared: lengths must be equal and nonzero");
  }
  double mean = 0.0;
  for (double y : targets) mean += y;
  mean /= static_cast<double>(targets.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
    ss_res += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
  }
  if (!(ss_tot > 0.0)) throw std::invalid_argument("r_squared: constant targets");
  return 1.0 - ss_res / ss_tot;
}

CovarianceMatrix covariance_matrix(const Dataset& data, bool correlation) {
  if (data.size() < 2) throw std::invalid_argument("covariance_matrix: need at least 2 observations");
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::Matrix<double, Eigen::Dynamic, 5> x(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data[static_cast<std::size_t>(i)];
    x.row(i) << o.age_std, o.sex, o.job, o.house, static_cast<double>(o.credit);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  CovarianceMatrix out;
  out.values = (centered.transpose() * centered) / static_cast<double>(n - 1);
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  out.correlation = correlation;
  if (correlation) {
    const Eigen::Matrix<double, 5, 1> sd = out.values.diagonal().cwiseSqrt();
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) out.values(i, j) /= sd(i) * sd(j);
    }
  }
  return out;
}

std::string covariance_to_csv(const CovarianceMatrix& m, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << (m.correlation ? "correlation" : "covariance");
  for (const auto& name : kCovarianceColumns) out << ',' << name;
  out << '\n';
  for (int i = 0; i < 5; ++i) {
    out << kCovarianceColumns[static_cast<std::size_t>(i)];
    for (int j = 0; j < 5; ++j) out << ',' << io::format_sig(m.values(i, j), 10);
    out << '\n';
  }
  return out.str();
}

Dataset flip_attribute(const Dataset& data, ProtectedAttribute attribute, const AgeFlip& age) {
  Dataset out = data;
  for (auto& obs : out.observations) {
    if (attribute == ProtectedAttribute::sex) {
      obs.sex = 1 - obs.sex;
    } else if (age.mode == AgeFlip::Mode::mirror) {
      obs.age_std = -obs.age_std;
    } else {
      const auto& s = data.standardization;
      obs.age_std = s.apply(s.invert(obs.age_std) + age.years);
    }
  }
  return out;
}

double counterfactual_gap(const PredictFn& predict, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age) {
  if (data.empty()) throw std::invalid_argument("counterfactual_gap: empty dataset");
  const auto base = predict(data);
  const auto flipped = predict(flip_attribute(data, attribute, age));
  if (base.size() != data.size() || flipped.size() != data.size()) {
    throw std::logic_error("counterfactual_gap: predictor returned the wrong number of values");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) total += std::abs(flipped[i] - base[i]);
  return total / static_cast<double>(base.size());
}

double counterfactual_gap(const LinearModel& model, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age) {
  return counterfactual_gap([&](const Dataset& d) { return predict_linear(model, d); }, data,
                            attribute, age);
}

double counterfactual_gap(const FairModel& model, const Dataset& data,
                          ProtectedAttribute attribute, const AgeFlip& age) {
  return counterfactual_gap([&](const Dataset& d) { return predict_fair(model, d); }, data,
                            attribute, age);
}

Comparison compare_models(const Dataset& train, const Dataset& test, const CompareConfig& config,
                          std::uint64_t split_seed) {
  Comparison out;
  out.full = fit_full(train);
  out.unaware = fit_unaware(train);
  out.fair = fit_fair(train, config.model, config.sampler, config.forest, config.feature);

  const auto y_train = credit_targets(train);
  const auto y_test = credit_targets(test);

  auto linear_row = [&](const std::string& name, const LinearModel& m) {
    ModelRow row;
    row.name = name;
    row.train_r2 = r_squared(y_train, predict_linear(m, train));
    row.test_r2 = r_squared(y_test, predict_linear(m, test));
    row.gap_sex = counterfactual_gap(m, test, ProtectedAttribute::sex, config.age_flip);
    row.gap_age = counterfactual_gap(m, test, ProtectedAttribute::age, config.age_flip);
    return row;
  };
  out.report.rows.push_back(linear_row("full", out.full));
  out.report.rows.push_back(linear_row("unaware", out.unaware));

  const auto& fair = out.fair.model;
  ModelRow row;
  row.name = "fair";
  row.train_r2 = r_squared(y_train, predict_forest(fair.forest, out.fair.train_latent));
  row.test_r2 = r_squared(y_test, predict_fair(fair, test));
  row.gap_sex = counterfactual_gap(fair, test, ProtectedAttribute::sex, config.age_flip);
  row.gap_age = counterfactual_gap(fair, test, ProtectedAttribute::age, config.age_flip);
  out.report.rows.push_back(row);

  if (config.leaky_fair) {
    out.report.leaky_fair_test_r2 = r_squared(y_test, predict_fair(fair, test, true));
  }
  out.report.split_seed = split_seed;
  out.report.sampler_seed = config.sampler.seed;
  out.report.config_snapshot = snapshot(config);
  return out;
}

std::string report_to_csv(const ComparisonReport& report, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "# split_seed=" << report.split_seed << " sampler_seed=" << report.sampler_seed << '\n';
  out << "# config " << report.config_snapshot << '\n';
  if (report.leaky_fair_test_r2) {
    out << "# fair_leaky_test_r2=" << io::format_sig(*report.leaky_fair_test_r2, 6)
        << " (paper protocol: test latents conditioned on credit; leaks the target)\n";
  }
  out << "model,train_r2,test_r2,gap_sex,gap_age\n";
  for (const auto& r : report.rows) {
    out << r.name << ',' << io::format_sig(r.train_r2, 6) << ',' << io::format_sig(r.test_r2, 6)
        << ',' << io::format_sig(r.gap_sex, 6) << ',' << io::format_sig(r.gap_age, 6) << '\n';
  }
  return out.str();
}

std::string report_to_table(const ComparisonReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "R^2";
  for (const auto& r : report.rows) out << std::right << std::setw(14) << r.name;
  out << '\n' << std::fixed;
  auto line = [&](const char* label, auto field, int precision) {
    out << std::left << std::setw(16) << label << std::right << std::setprecision(precision);
    for (const auto& r : report.rows) out << std::setw(14) << r.*field;
    out << '\n';
  };
  line("Training", &ModelRow::train_r2, 3);
  line("Testing", &ModelRow::test_r2, 3);
  line("Sex flip gap", &ModelRow::gap_sex, 2);
  line("Age flip gap", &ModelRow::gap_age, 2);
  if (report.leaky_fair_test_r2) {
    out << std::setprecision(3)
        << "Fair model, leaky test protocol (credit informs test latents): testing R^2 = "
        << *report.leaky_fair_test_r2 << '\n';
  }
  return out.str();
}

}  // namespace faircredit
