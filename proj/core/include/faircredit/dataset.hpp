#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace faircredit {

struct ModelParams;
struct ModelConfig;

/// One row of the source table, before any coding.
struct RawRecord {
  std::string sex;
  int age = 0;  // years
  int job = 0;  // ordinal code, 0 = unskilled non-resident
  std::string housing;
  std::int64_t credit_amount = 0;
};

/// Header names for the required columns. Matching is case-insensitive and
/// ignores surrounding whitespace.
struct ColumnMap {
  std::string sex = "sex";
  std::string age = "age";
  std::string job = "job";
  std::string housing = "housing";
  std::string credit_amount = "credit amount";
};

struct LoadResult {
  std::vector<RawRecord> records;
  /// Data rows dropped because a required cell was empty.
  std::size_t skipped_rows = 0;
};

/// Reads a comma-separated table with a header row. Rows with an empty
/// required cell are skipped and counted; every other problem throws
/// InputError naming the row (1-based data row index) and column.
LoadResult load_csv(const std::filesystem::path& path, const ColumnMap& columns = {});

/// Coded model input for one person.
struct Observation {
  int sex = 0;           // 0/1 under PreprocessConfig::sex_coding
  double age_std = 0.0;  // z-scored age (raw years in raw-age mode)
  int job = 0;           // 1 iff job code >= threshold
  int house = 0;         // 1 iff housing == ownership label
  std::int64_t credit = 0;

  bool operator==(const Observation&) const = default;
};

/// Age standardization recorded from the fitting set. When disabled (raw-age
/// mode, or synthetic data generated on the model scale) the transform is
/// the identity.
struct Standardization {
  double age_mean = 0.0;
  double age_sd = 1.0;
  bool enabled = false;

  double apply(double raw_age) const { return enabled ? (raw_age - age_mean) / age_sd : raw_age; }
  double invert(double age_std) const { return enabled ? age_std * age_sd + age_mean : age_std; }

  bool operator==(const Standardization&) const = default;
};

struct Dataset {
  std::vector<Observation> observations;
  Standardization standardization;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
  const Observation& operator[](std::size_t i) const { return observations[i]; }

  bool operator==(const Dataset&) const = default;
};

struct PreprocessConfig {
  /// Lower-cased label -> code.
  std::map<std::string, int> sex_coding{{"female", 0}, {"male", 1}};
  int job_threshold = 1;
  std::string ownership_label = "own";
  bool standardize_age = true;
};

/// Codes categorical fields and standardizes age by the set's own mean and
/// sample standard deviation. Throws InputError on unknown sex labels, zero
/// age variance, or out-of-range raw values.
Dataset preprocess(const std::vector<RawRecord>& records, const PreprocessConfig& config = {});

struct SplitSpec {
  std::size_t train_count = 800;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;  // positions in the input dataset
  std::vector<std::size_t> test_indices;
};

/// Seeded random partition. The training set is re-standardized by its own
/// age statistics; the test set reuses the training statistics. Datasets
/// with disabled standardization keep their age values unchanged.
SplitResult split(const Dataset& data, const SplitSpec& spec);

/// Marginals for forward simulation. Age is drawn directly on the
/// standardized scale.
struct CovariateSpec {
  double p_male = 0.69;
  double age_mean = 0.0;
  double age_sd = 1.0;
};

struct SyntheticData {
  Dataset data;
  std::vector<double> true_latents;
};

/// Forward-samples the generative model: C ~ N(0,1), sex and age from the
/// covariate spec, then job, house and credit from their likelihoods.
/// Credit is the Poisson count multiplied back by the credit scale, so it
/// may be zero. Throws RateOverflowError if a Poisson rate exceeds the cap.
SyntheticData generate_synthetic(const ModelParams& params, const ModelConfig& model_config,
                                 std::size_t n, std::uint64_t seed,
                                 const CovariateSpec& covariates = {});

/// Dataset CSV: `sex,age_std,job,house,credit`, preceded by `#` comment
/// lines. The standardization is stored in a `# standardization` comment so
/// the file can be re-split later.
std::string dataset_to_csv(const Dataset& data, const std::string& header_comment = {});
Dataset dataset_from_csv(const std::filesystem::path& path);

}  // namespace faircredit
