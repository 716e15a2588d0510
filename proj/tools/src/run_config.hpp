#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faircredit/dataset.hpp"
#include "faircredit/eval.hpp"
#include "faircredit/predictors.hpp"
#include "faircredit/probmodel.hpp"
#include "faircredit/sampler.hpp"

namespace faircredit::cli {

enum class Preset { paper, recommended };

/// Everything a command needs, resolved from preset, config file and flags.
struct RunConfig {
  Preset preset = Preset::paper;
  std::filesystem::path dataset_path = "data/german_credit_data.csv";
  ColumnMap columns;
  PreprocessConfig preprocess;
  SplitSpec split;
  ModelConfig model;
  SamplerConfig sampler;
  ForestConfig forest;
  LatentFeature feature = LatentFeature::mean;
  AgeFlip age_flip;
  bool leaky_fair = false;
  std::filesystem::path out_dir = "out";
  /// Observations whose latent draws go to latents.csv; nullopt means all.
  std::optional<std::vector<std::size_t>> latent_export =
      std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::size_t synth_n = 800;
  std::uint64_t synth_seed = 1;
  CovariateSpec synth_covariates;
  ModelParams truth;

  void validate() const;
};

/// Paper preset: Eq.-literal credit term, 5000 iterations. Recommended
/// preset: credit intercept, credit in thousands, longer thinned schedule.
RunConfig preset_config(Preset preset);
Preset parse_preset(const std::string& name);
std::string preset_name(Preset preset);

/// Flat `key = value` file; `#` starts a comment line.
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies one key. Throws InputError for unknown keys and bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

struct Overrides {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;  // split, sampler, forest and synth seeds
  std::optional<std::filesystem::path> out_dir;
  bool leaky_fair = false;
};

/// Preset (flag, then file `preset` key, then "paper"), then file keys, then flags.
RunConfig resolve_config(const Overrides& overrides);

/// Canonical `key = value` dump of every setting except the output directory.
std::string canonical_text(const RunConfig& config);
/// FNV-1a of canonical_text, 16 hex digits.
std::string config_hash(const RunConfig& config);
/// "config_hash=<hash> preset=<name>", written as the first line of every output file.
std::string header_comment(const RunConfig& config);

}  // namespace faircredit::cli
