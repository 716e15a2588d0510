#include "faircredit/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"
#include "faircredit/random.hpp"

namespace faircredit {
namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(features.cols()) = features;
  return design;
}

std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& what) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = io::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw InputError(what + " line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    out[io::trim(trimmed.substr(0, eq))] = io::trim(trimmed.substr(eq + 1));
  }
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw InputError("bad numeric value '" + text + "' for '" + key + "'");
}

std::uint64_t to_unsigned(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size() && text.front() != '-') return v;
  } catch (const std::exception&) {
  }
  throw InputError("bad integer value '" + text + "' for '" + key + "'");
}

class TreeBuilder {
 public:
  TreeBuilder(std::vector<double> c, std::vector<double> y, std::size_t max_depth,
              std::size_t min_leaf)
      : c_(std::move(c)), y_(std::move(y)), max_depth_(max_depth), min_leaf_(min_leaf) {}

  RegressionTree build() {
    RegressionTree tree;
    nodes_ = &tree.nodes;
    grow(0, c_.size(), 0);
    return tree;
  }

 private:
  // Grows the subtree over the c-sorted range [lo, hi) and returns its index.
  std::int32_t grow(std::size_t lo, std::size_t hi, std::size_t depth) {
    const auto n = hi - lo;
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += y_[i];
    mean /= static_cast<double>(n);

    const auto index = static_cast<std::int32_t>(nodes_->size());
    nodes_->push_back({true, 0.0, mean, -1, -1});

    const bool pure = std::all_of(y_.begin() + static_cast<std::ptrdiff_t>(lo),
                                  y_.begin() + static_cast<std::ptrdiff_t>(hi),
                                  [&](double v) { return v == y_[lo]; });
    if (depth >= max_depth_ || n < 2 * min_leaf_ || pure) return index;

    // Centered sums keep the SSE arithmetic well conditioned.
    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = y_[i] - mean;
      total += d;
      total_sq += d * d;
    }
    double best_sse = INFINITY;
    std::size_t best_k = 0;
    double left = 0.0;
    double left_sq = 0.0;
    for (std::size_t k = lo + 1; k + min_leaf_ <= hi; ++k) {
      const double d = y_[k - 1] - mean;
      left += d;
      left_sq += d * d;
      if (k - lo < min_leaf_ || c_[k - 1] == c_[k]) continue;
      const auto nl = static_cast<double>(k - lo);
      const auto nr = static_cast<double>(hi - k);
      const double right = total - left;
      const double sse = (left_sq - left * left / nl) + ((total_sq - left_sq) - right * right / nr);
      if (sse < best_sse) {
        best_sse = sse;
        best_k = k;
      }
    }
    if (best_k == 0) return index;

    const double a = c_[best_k - 1];
    const double b = c_[best_k];
    double threshold = a + (b - a) / 2.0;
    if (!(threshold < b)) threshold = a;

    const auto l = grow(lo, best_k, depth + 1);
    const auto r = grow(best_k, hi, depth + 1);
    auto& node = (*nodes_)[static_cast<std::size_t>(index)];
    node.leaf = false;
    node.threshold = threshold;
    node.value = 0.0;
    node.left = l;
    node.right = r;
    return index;
  }

  std::vector<double> c_;
  std::vector<double> y_;
  std::size_t max_depth_;
  std::size_t min_leaf_;
  std::vector<RegressionTree::Node>* nodes_ = nullptr;
};

}  // namespace

// ---------------------------------------------------------------------------
// Linear models

LinearModel fit_ols(const Eigen::MatrixXd& features, std::span<const double> targets,
                    std::vector<std::string> feature_names) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto p = static_cast<std::size_t>(features.cols());
  if (targets.size() != n) throw std::invalid_argument("fit_ols: target length mismatch");
  if (n <= p + 1) {
    throw std::invalid_argument("fit_ols: need more than " + std::to_string(p + 1) +
                                " rows, got " + std::to_string(n));
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < p; ++j) feature_names.push_back("x" + std::to_string(j));
  }
  if (feature_names.size() != p) throw std::invalid_argument("fit_ols: feature name count mismatch");

  const Eigen::MatrixXd design = with_intercept(features);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (static_cast<std::size_t>(qr.rank()) < p + 1) {
    for (Eigen::Index j = 1; j <= design.cols(); ++j) {
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> prefix(design.leftCols(j));
      if (prefix.rank() < j) {
        throw RankDeficientError(j == 1 ? "intercept" : feature_names[static_cast<std::size_t>(j - 2)]);
      }
    }
  }
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd beta = qr.solve(y);

  LinearModel model;
  model.feature_names = std::move(feature_names);
  model.intercept = beta(0);
  model.coefficients.assign(beta.data() + 1, beta.data() + beta.size());
  return model;
}

std::vector<double> predict_ols(const LinearModel& model, const Eigen::MatrixXd& features) {
  if (static_cast<std::size_t>(features.cols()) != model.coefficients.size()) {
    throw std::invalid_argument("predict_ols: expected " + std::to_string(model.coefficients.size()) +
                                " columns, got " + std::to_string(features.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double v = model.intercept;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      v += model.coefficients[static_cast<std::size_t>(j)] * features(i, j);
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

Eigen::MatrixXd design_matrix(const Dataset& data, const std::vector<std::string>& names) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::function<double(const Observation&)> get;
    if (names[j] == "sex") get = [](const Observation& o) { return double(o.sex); };
    else if (names[j] == "age_std") get = [](const Observation& o) { return o.age_std; };
    else if (names[j] == "job") get = [](const Observation& o) { return double(o.job); };
    else if (names[j] == "house") get = [](const Observation& o) { return double(o.house); };
    else throw std::invalid_argument("design_matrix: unknown feature '" + names[j] + "'");
    for (std::size_t i = 0; i < data.size(); ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = get(data[i]);
    }
  }
  return x;
}

std::vector<double> credit_targets(const Dataset& data) {
  std::vector<double> y;
  y.reserve(data.size());
  for (const auto& obs : data.observations) y.push_back(static_cast<double>(obs.credit));
  return y;
}

LinearModel fit_full(const Dataset& train) {
  return fit_ols(design_matrix(train, kFullFeatures), credit_targets(train), kFullFeatures);
}

LinearModel fit_unaware(const Dataset& train) {
  return fit_ols(design_matrix(train, kUnawareFeatures), credit_targets(train), kUnawareFeatures);
}

std::vector<double> predict_linear(const LinearModel& model, const Dataset& data) {
  return predict_ols(model, design_matrix(data, model.feature_names));
}

std::string linear_model_to_text(const LinearModel& model) {
  std::string features;
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    features += (j ? "," : "") + model.feature_names[j];
  }
  std::string out = "features = " + features + "\n";
  out += "intercept = " + io::format_exact(model.intercept) + "\n";
  for (std::size_t j = 0; j < model.coefficients.size(); ++j) {
    out += "coef." + model.feature_names[j] + " = " + io::format_exact(model.coefficients[j]) + "\n";
  }
  return out;
}

LinearModel linear_model_from_text(std::string_view text) {
  const auto kv = parse_key_values(text, "linear model");
  LinearModel model;
  const auto features = kv.find("features");
  const auto intercept = kv.find("intercept");
  if (features == kv.end() || intercept == kv.end()) {
    throw InputError("linear model: missing 'features' or 'intercept'");
  }
  if (!features->second.empty()) model.feature_names = io::split_csv_line(features->second);
  model.intercept = to_double(intercept->second, "intercept");
  for (const auto& name : model.feature_names) {
    const auto it = kv.find("coef." + name);
    if (it == kv.end()) throw InputError("linear model: missing 'coef." + name + "'");
    model.coefficients.push_back(to_double(it->second, "coef." + name));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Forest

void ForestConfig::validate() const {
  if (n_trees < 1) throw InputError("forest config: n_trees must be >= 1");
  if (min_leaf < 1) throw InputError("forest config: min_leaf must be >= 1");
}

double RegressionTree::predict(double c) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    i = static_cast<std::size_t>(c <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    if (nodes[i].leaf) return 0;
    return 1 + std::max(walk(static_cast<std::size_t>(nodes[i].left)),
                        walk(static_cast<std::size_t>(nodes[i].right)));
  };
  return nodes.empty() ? 0 : walk(0);
}

RegressionTree fit_tree(std::span<const double> c_values, std::span<const double> targets,
                        std::size_t max_depth, std::size_t min_leaf) {
  if (c_values.size() != targets.size() || c_values.empty()) {
    throw std::invalid_argument("fit_tree: empty or mismatched input");
  }
  std::vector<std::size_t> order(c_values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return c_values[a] < c_values[b]; });
  std::vector<double> c;
  std::vector<double> y;
  c.reserve(order.size());
  y.reserve(order.size());
  for (auto i : order) {
    c.push_back(c_values[i]);
    y.push_back(targets[i]);
  }
  return TreeBuilder(std::move(c), std::move(y), max_depth, std::max<std::size_t>(min_leaf, 1)).build();
}

ForestModel fit_forest(std::span<const double> c_values, std::span<const double> targets,
                       const ForestConfig& config) {
  config.validate();
  if (c_values.size() != targets.size()) throw std::invalid_argument("fit_forest: length mismatch");
  if (c_values.size() < 2 * config.min_leaf) {
    throw std::invalid_argument("fit_forest: insufficient data (" + std::to_string(c_values.size()) +
                                " points, need " + std::to_string(2 * config.min_leaf) + ")");
  }
  const std::size_t n = c_values.size();
  ForestModel model;
  model.config = config;
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  model.target_min = *lo;
  model.target_max = *hi;
  model.trees.reserve(config.n_trees);

  std::vector<double> c(n);
  std::vector<double> y(n);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    auto rng = RandomStream::derive(config.seed, t);
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = rng.below(n);
      c[k] = c_values[i];
      y[k] = targets[i];
    }
    model.trees.push_back(fit_tree(c, y, config.max_depth, config.min_leaf));
  }
  return model;
}

double ForestModel::predict(double c) const {
  double total = 0.0;
  for (const auto& tree : trees) total += tree.predict(c);
  return total / static_cast<double>(trees.size());
}

std::vector<double> predict_forest(const ForestModel& model, std::span<const double> c_values) {
  if (model.trees.empty()) throw std::invalid_argument("predict_forest: empty forest");
  std::vector<double> out;
  out.reserve(c_values.size());
  for (double c : c_values) out.push_back(model.predict(c));
  return out;
}

std::string forest_to_text(const ForestModel& model) {
  std::ostringstream out;
  out << "forest " << model.trees.size() << ' ' << model.config.max_depth << ' '
      << model.config.min_leaf << ' ' << model.config.seed << '\n';
  out << "range " << io::format_exact(model.target_min) << ' ' << io::format_exact(model.target_max)
      << '\n';
  for (const auto& tree : model.trees) {
    out << "tree " << tree.nodes.size() << '\n';
    std::function<void(std::size_t)> emit = [&](std::size_t i) {
      const auto& node = tree.nodes[i];
      if (node.leaf) {
        out << "leaf " << io::format_exact(node.value) << '\n';
        return;
      }
      out << "split " << io::format_exact(node.threshold) << '\n';
      emit(static_cast<std::size_t>(node.left));
      emit(static_cast<std::size_t>(node.right));
    };
    emit(0);
  }
  return out.str();
}

ForestModel forest_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    auto t = io::trim(line);
    if (!t.empty() && t.front() != '#') lines.push_back(std::move(t));
  }
  std::size_t pos = 0;
  auto next = [&](const std::string& tag) {
    if (pos >= lines.size()) throw InputError("forest file: unexpected end, wanted '" + tag + "'");
    std::istringstream ss(lines[pos++]);
    std::string got;
    ss >> got;
    if (got != tag) throw InputError("forest file: expected '" + tag + "', got '" + got + "'");
    std::vector<std::string> rest;
    for (std::string w; ss >> w;) rest.push_back(w);
    return rest;
  };

  ForestModel model;
  const auto header = next("forest");
  if (header.size() != 4) throw InputError("forest file: malformed header");
  const auto n_trees = to_unsigned(header[0], "n_trees");
  model.config.n_trees = n_trees;
  model.config.max_depth = to_unsigned(header[1], "max_depth");
  model.config.min_leaf = to_unsigned(header[2], "min_leaf");
  model.config.seed = to_unsigned(header[3], "seed");
  const auto range = next("range");
  if (range.size() != 2) throw InputError("forest file: malformed range");
  model.target_min = to_double(range[0], "range");
  model.target_max = to_double(range[1], "range");

  for (std::uint64_t t = 0; t < n_trees; ++t) {
    const auto tree_header = next("tree");
    if (tree_header.size() != 1) throw InputError("forest file: malformed tree header");
    const auto count = to_unsigned(tree_header[0], "node count");
    RegressionTree tree;
    std::function<std::int32_t()> read_node = [&]() -> std::int32_t {
      if (pos >= lines.size()) throw InputError("forest file: truncated tree");
      std::istringstream ss(lines[pos++]);
      std::string kind;
      std::string value;
      ss >> kind >> value;
      const auto index = static_cast<std::int32_t>(tree.nodes.size());
      if (kind == "leaf") {
        tree.nodes.push_back({true, 0.0, to_double(value, "leaf"), -1, -1});
        return index;
      }
      if (kind != "split") throw InputError("forest file: unknown node kind '" + kind + "'");
      tree.nodes.push_back({false, to_double(value, "split"), 0.0, -1, -1});
      const auto l = read_node();
      const auto r = read_node();
      tree.nodes[static_cast<std::size_t>(index)].left = l;
      tree.nodes[static_cast<std::size_t>(index)].right = r;
      return index;
    };
    read_node();
    if (tree.nodes.size() != count) throw InputError("forest file: node count mismatch");
    model.trees.push_back(std::move(tree));
  }
  if (model.trees.empty()) throw InputError("forest file: no trees");
  return model;
}

// ---------------------------------------------------------------------------
// Fair model

FairFit fit_fair(const Dataset& train, const ModelConfig& model_config,
                 const SamplerConfig& sampler_config, const ForestConfig& forest_config,
                 LatentFeature feature) {
  if (train.empty()) throw InputError("fit_fair: empty training set");
  forest_config.validate();
  FairFit fit;
  fit.chain = run_chain(train, model_config, sampler_config);
  orient_latent_axis(fit.chain);
  fit.model.theta_hat = fit.chain.median_params();
  fit.model.model_config = model_config;
  fit.model.latent_sampler_config = sampler_config;
  fit.model.feature = feature;
  fit.train_latent =
      feature == LatentFeature::mean ? fit.chain.latent_means() : fit.chain.latent_medians();
  fit.model.forest = fit_forest(fit.train_latent, credit_targets(train), forest_config);
  return fit;
}

std::vector<double> infer_latent_features(const FairModel& model, const Dataset& data,
                                          bool include_credit) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& obs : data.observations) {
    const auto post = infer_latent_test(model.theta_hat, obs, model.model_config,
                                        model.latent_sampler_config, include_credit);
    out.push_back(model.feature == LatentFeature::mean ? post.mean : post.median);
  }
  return out;
}

std::vector<double> predict_fair(const FairModel& model, const Dataset& test, bool include_credit) {
  if (test.empty()) throw std::invalid_argument("predict_fair: empty dataset");
  return predict_forest(model.forest, infer_latent_features(model, test, include_credit));
}

void save_fair_model(const FairModel& model, const std::filesystem::path& dir,
                     const std::string& header_comment) {
  const std::string comment = header_comment.empty() ? "" : "# " + header_comment + "\n";
  io::write_file_atomic(dir / "params.txt",
                        comment + params_to_text(model.theta_hat,
                                                 model.model_config.include_credit_intercept));
  io::write_file_atomic(dir / "forest.txt", comment + forest_to_text(model.forest));

  const auto& m = model.model_config;
  const auto& s = model.latent_sampler_config;
  std::ostringstream cfg;
  cfg << comment;
  cfg << "model.include_credit_intercept = " << (m.include_credit_intercept ? "true" : "false") << '\n'
      << "model.credit_scale = " << io::format_exact(m.credit_scale) << '\n'
      << "model.poisson_rate_cap = " << io::format_exact(m.poisson_rate_cap) << '\n'
      << "sampler.iterations = " << s.iterations << '\n'
      << "sampler.burn_in = " << s.burn_in << '\n'
      << "sampler.thin = " << s.thin << '\n'
      << "sampler.delta = " << io::format_exact(s.delta) << '\n'
      << "sampler.param_step = " << io::format_exact(s.param_step) << '\n'
      << "sampler.adapt_during_burn_in = " << (s.adapt_during_burn_in ? "true" : "false") << '\n'
      << "sampler.target_accept = " << io::format_exact(s.target_accept) << '\n'
      << "sampler.adapt_interval = " << s.adapt_interval << '\n'
      << "sampler.adapt_factor = " << io::format_exact(s.adapt_factor) << '\n'
      << "sampler.seed = " << s.seed << '\n'
      << "feature = " << (model.feature == LatentFeature::mean ? "mean" : "median") << '\n';
  io::write_file_atomic(dir / "config.txt", cfg.str());
}

FairModel load_fair_model(const std::filesystem::path& dir) {
  FairModel model;
  model.theta_hat = params_from_text(io::read_file(dir / "params.txt"));
  model.forest = forest_from_text(io::read_file(dir / "forest.txt"));
  const auto kv = parse_key_values(io::read_file(dir / "config.txt"), "fair model config");
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InputError("fair model config: missing '" + key + "'");
    return it->second;
  };
  auto get_bool = [&](const std::string& key) {
    const auto& v = get(key);
    if (v != "true" && v != "false") throw InputError("fair model config: '" + key + "' must be true/false");
    return v == "true";
  };
  auto& m = model.model_config;
  m.include_credit_intercept = get_bool("model.include_credit_intercept");
  m.credit_scale = to_double(get("model.credit_scale"), "model.credit_scale");
  m.poisson_rate_cap = to_double(get("model.poisson_rate_cap"), "model.poisson_rate_cap");
  auto& s = model.latent_sampler_config;
  s.iterations = to_unsigned(get("sampler.iterations"), "sampler.iterations");
  s.burn_in = to_unsigned(get("sampler.burn_in"), "sampler.burn_in");
  s.thin = to_unsigned(get("sampler.thin"), "sampler.thin");
  s.delta = to_double(get("sampler.delta"), "sampler.delta");
  s.param_step = to_double(get("sampler.param_step"), "sampler.param_step");
  s.adapt_during_burn_in = get_bool("sampler.adapt_during_burn_in");
  s.target_accept = to_double(get("sampler.target_accept"), "sampler.target_accept");
  s.adapt_interval = to_unsigned(get("sampler.adapt_interval"), "sampler.adapt_interval");
  s.adapt_factor = to_double(get("sampler.adapt_factor"), "sampler.adapt_factor");
  s.seed = to_unsigned(get("sampler.seed"), "sampler.seed");
  const auto& feature = get("feature");
  if (feature != "mean" && feature != "median") throw InputError("fair model config: bad feature");
  model.feature = feature == "mean" ? LatentFeature::mean : LatentFeature::median;
  m.validate();
  s.validate();
  return model;
}

}  // namespace faircredit
