#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"

namespace faircredit::cli {
namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = io::to_lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw InputError("config '" + key + "': expected a boolean, got '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InputError("config '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw InputError("config '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::string fmt(double v) { return io::format_exact(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

}  // namespace

RunConfig preset_config(Preset preset) {
  RunConfig config;
  config.preset = preset;
  if (preset == Preset::recommended) {
    config.model.include_credit_intercept = true;
    config.model.credit_scale = 1000.0;
    config.sampler.iterations = 20000;
    config.sampler.burn_in = 4000;
    config.sampler.thin = 4;
    config.sampler.delta = 1.0;
  }
  config.truth = ModelParams{0.5, -1.0, 0.8, 1.5, -0.5, 0.7, -1.2, 1.2, -0.5, 0.4, 1.0, 1.5};
  return config;
}

Preset parse_preset(const std::string& name) {
  if (name == "paper") return Preset::paper;
  if (name == "recommended") return Preset::recommended;
  throw InputError("unknown preset '" + name + "' (expected paper or recommended)");
}

std::string preset_name(Preset preset) {
  return preset == Preset::paper ? "paper" : "recommended";
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    out[io::trim(t.substr(0, eq))] = io::trim(t.substr(eq + 1));
  }
  return out;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters{
      {"preset", [&] { c.preset = parse_preset(v); }},
      {"dataset.path", [&] { c.dataset_path = v; }},
      {"columns.sex", [&] { c.columns.sex = v; }},
      {"columns.age", [&] { c.columns.age = v; }},
      {"columns.job", [&] { c.columns.job = v; }},
      {"columns.housing", [&] { c.columns.housing = v; }},
      {"columns.credit_amount", [&] { c.columns.credit_amount = v; }},
      {"preprocess.job_threshold", [&] { c.preprocess.job_threshold = static_cast<int>(parse_u64(key, v)); }},
      {"preprocess.ownership_label", [&] { c.preprocess.ownership_label = v; }},
      {"preprocess.standardize_age", [&] { c.preprocess.standardize_age = parse_bool(key, v); }},
      {"split.train_count", [&] { c.split.train_count = parse_u64(key, v); }},
      {"split.seed", [&] { c.split.seed = parse_u64(key, v); }},
      {"model.include_credit_intercept", [&] { c.model.include_credit_intercept = parse_bool(key, v); }},
      {"model.credit_scale", [&] { c.model.credit_scale = parse_double(key, v); }},
      {"model.poisson_rate_cap", [&] { c.model.poisson_rate_cap = parse_double(key, v); }},
      {"sampler.iterations", [&] { c.sampler.iterations = parse_u64(key, v); }},
      {"sampler.burn_in", [&] { c.sampler.burn_in = parse_u64(key, v); }},
      {"sampler.thin", [&] { c.sampler.thin = parse_u64(key, v); }},
      {"sampler.delta", [&] { c.sampler.delta = parse_double(key, v); }},
      {"sampler.param_step", [&] { c.sampler.param_step = parse_double(key, v); }},
      {"sampler.adapt_during_burn_in", [&] { c.sampler.adapt_during_burn_in = parse_bool(key, v); }},
      {"sampler.target_accept", [&] { c.sampler.target_accept = parse_double(key, v); }},
      {"sampler.adapt_interval", [&] { c.sampler.adapt_interval = parse_u64(key, v); }},
      {"sampler.adapt_factor", [&] { c.sampler.adapt_factor = parse_double(key, v); }},
      {"sampler.seed", [&] { c.sampler.seed = parse_u64(key, v); }},
      {"forest.n_trees", [&] { c.forest.n_trees = parse_u64(key, v); }},
      {"forest.max_depth", [&] { c.forest.max_depth = parse_u64(key, v); }},
      {"forest.min_leaf", [&] { c.forest.min_leaf = parse_u64(key, v); }},
      {"forest.seed", [&] { c.forest.seed = parse_u64(key, v); }},
      {"fair.feature",
       [&] {
         if (v != "mean" && v != "median") throw InputError("config 'fair.feature': mean or median");
         c.feature = v == "mean" ? LatentFeature::mean : LatentFeature::median;
       }},
      {"fair.leaky", [&] { c.leaky_fair = parse_bool(key, v); }},
      {"eval.age_flip",
       [&] {
         if (v != "mirror" && v != "shift_years") {
           throw InputError("config 'eval.age_flip': mirror or shift_years");
         }
         c.age_flip.mode = v == "mirror" ? AgeFlip::Mode::mirror : AgeFlip::Mode::shift_years;
       }},
      {"eval.age_shift_years", [&] { c.age_flip.years = parse_double(key, v); }},
      {"output.dir", [&] { c.out_dir = v; }},
      {"chain.latent_export",
       [&] {
         if (v == "all") {
           c.latent_export.reset();
           return;
         }
         std::vector<std::size_t> indices;
         if (v != "none") {
           for (const auto& part : io::split_csv_line(v)) indices.push_back(parse_u64(key, io::trim(part)));
         }
         c.latent_export = indices;
       }},
      {"synth.n", [&] { c.synth_n = parse_u64(key, v); }},
      {"synth.seed", [&] { c.synth_seed = parse_u64(key, v); }},
      {"synth.p_male", [&] { c.synth_covariates.p_male = parse_double(key, v); }},
  };
  if (auto it = setters.find(key); it != setters.end()) {
    it->second();
    return;
  }
  if (key.rfind("preprocess.sex.", 0) == 0) {
    const auto label = io::to_lower(key.substr(std::string("preprocess.sex.").size()));
    c.preprocess.sex_coding[label] = static_cast<int>(parse_u64(key, v));
    return;
  }
  if (key.rfind("truth.", 0) == 0) {
    c.truth[param_from_name(key.substr(6))] = parse_double(key, v);
    return;
  }
  throw InputError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  model.validate();
  sampler.validate();
  forest.validate();
  if (split.train_count == 0) throw InputError("config: split.train_count must be positive");
  if (synth_n == 0) throw InputError("config: synth.n must be positive");
  if (!(synth_covariates.p_male >= 0.0 && synth_covariates.p_male <= 1.0)) {
    throw InputError("config: synth.p_male must lie in [0, 1]");
  }
  for (const auto& [label, code] : preprocess.sex_coding) {
    if (code != 0 && code != 1) throw InputError("config: sex code for '" + label + "' must be 0 or 1");
  }
}

RunConfig resolve_config(const Overrides& overrides) {
  std::map<std::string, std::string> file;
  if (overrides.config_path) {
    if (!std::filesystem::exists(*overrides.config_path)) {
      throw InputError("missing config file '" + overrides.config_path->string() + "'");
    }
    file = parse_config_text(io::read_file(*overrides.config_path));
  }
  std::string preset = "paper";
  if (auto it = file.find("preset"); it != file.end()) preset = it->second;
  if (overrides.preset) preset = *overrides.preset;

  RunConfig config = preset_config(parse_preset(preset));
  for (const auto& [key, value] : file) {
    if (key != "preset") apply_setting(config, key, value);
  }
  if (overrides.seed) {
    config.split.seed = *overrides.seed;
    config.sampler.seed = *overrides.seed;
    config.forest.seed = *overrides.seed;
    config.synth_seed = *overrides.seed;
  }
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.leaky_fair) config.leaky_fair = true;
  config.validate();
  return config;
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
  kv("preset", preset_name(c.preset));
  kv("dataset.path", c.dataset_path.generic_string());
  kv("columns.sex", c.columns.sex);
  kv("columns.age", c.columns.age);
  kv("columns.job", c.columns.job);
  kv("columns.housing", c.columns.housing);
  kv("columns.credit_amount", c.columns.credit_amount);
  for (const auto& [label, code] : c.preprocess.sex_coding) kv("preprocess.sex." + label, std::to_string(code));
  kv("preprocess.job_threshold", std::to_string(c.preprocess.job_threshold));
  kv("preprocess.ownership_label", c.preprocess.ownership_label);
  kv("preprocess.standardize_age", fmt(c.preprocess.standardize_age));
  kv("split.train_count", std::to_string(c.split.train_count));
  kv("split.seed", std::to_string(c.split.seed));
  kv("model.include_credit_intercept", fmt(c.model.include_credit_intercept));
  kv("model.credit_scale", fmt(c.model.credit_scale));
  kv("model.poisson_rate_cap", fmt(c.model.poisson_rate_cap));
  kv("sampler.iterations", std::to_string(c.sampler.iterations));
  kv("sampler.burn_in", std::to_string(c.sampler.burn_in));
  kv("sampler.thin", std::to_string(c.sampler.thin));
  kv("sampler.delta", fmt(c.sampler.delta));
  kv("sampler.param_step", fmt(c.sampler.param_step));
  kv("sampler.adapt_during_burn_in", fmt(c.sampler.adapt_during_burn_in));
  kv("sampler.target_accept", fmt(c.sampler.target_accept));
  kv("sampler.adapt_interval", std::to_string(c.sampler.adapt_interval));
  kv("sampler.adapt_factor", fmt(c.sampler.adapt_factor));
  kv("sampler.seed", std::to_string(c.sampler.seed));
  kv("forest.n_trees", std::to_string(c.forest.n_trees));
  kv("forest.max_depth", std::to_string(c.forest.max_depth));
  kv("forest.min_leaf", std::to_string(c.forest.min_leaf));
  kv("forest.seed", std::to_string(c.forest.seed));
  kv("fair.feature", c.feature == LatentFeature::mean ? "mean" : "median");
  kv("fair.leaky", fmt(c.leaky_fair));
  kv("eval.age_flip", c.age_flip.mode == AgeFlip::Mode::mirror ? "mirror" : "shift_years");
  kv("eval.age_shift_years", fmt(c.age_flip.years));
  if (c.latent_export) {
    std::string list;
    for (auto i : *c.latent_export) list += (list.empty() ? "" : ",") + std::to_string(i);
    kv("chain.latent_export", list.empty() ? "none" : list);
  } else {
    kv("chain.latent_export", "all");
  }
  kv("synth.n", std::to_string(c.synth_n));
  kv("synth.seed", std::to_string(c.synth_seed));
  kv("synth.p_male", fmt(c.synth_covariates.p_male));
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto p = static_cast<Param>(i);
    kv("truth." + std::string(param_name(p)), fmt(c.truth[p]));
  }
  return out.str();
}

std::string config_hash(const RunConfig& config) {
  return io::hex64(io::fnv1a64(canonical_text(config)));
}

std::string header_comment(const RunConfig& config) {
  return "config_hash=" + config_hash(config) + " preset=" + preset_name(config.preset);
}

}  // namespace faircredit::cli
