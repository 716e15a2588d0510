#include "faircredit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "faircredit/error.hpp"
#include "faircredit/io.hpp"
#include "faircredit/probmodel.hpp"
#include "faircredit/random.hpp"

namespace faircredit {
namespace {

constexpr std::uint64_t kSplitStream = 0x5b11'7000ULL;
constexpr int kMinAge = 18;
constexpr int kMaxAge = 120;

std::string cell_error(std::size_t row, const std::string& column, const std::string& what) {
  return "row " + std::to_string(row) + ", column '" + column + "': " + what;
}

std::int64_t parse_integer(const std::string& cell, std::size_t row, const std::string& column) {
  std::int64_t value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InputError(cell_error(row, column, "cannot parse '" + cell + "' as an integer"));
  }
  return value;
}

double parse_real(const std::string& cell, std::size_t line, const std::string& column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw InputError(cell_error(line, column, "cannot parse '" + cell + "' as a number"));
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InputError("missing file '" + path.string() + "'");
  }
  std::istringstream in(io::read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank(const std::string& line) { return io::trim(line).empty(); }

Dataset restandardized(const Dataset& source, const std::vector<std::size_t>& indices,
                       const Standardization& from, const Standardization& to) {
  Dataset out;
  out.standardization = to;
  out.observations.reserve(indices.size());
  for (auto i : indices) {
    Observation obs = source.observations[i];
    obs.age_std = to.apply(from.invert(obs.age_std));
    out.observations.push_back(obs);
  }
  return out;
}

}  // namespace

LoadResult load_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  const auto lines = read_lines(path);
  auto it = std::find_if_not(lines.begin(), lines.end(), blank);
  if (it == lines.end()) throw InputError("empty table: '" + path.string() + "' has no header");

  const auto header = io::split_csv_line(*it);
  auto find_column = [&](const std::string& wanted) {
    const auto key = io::to_lower(io::trim(wanted));
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (io::to_lower(io::trim(header[j])) == key) return j;
    }
    throw InputError("missing required column '" + wanted + "' in '" + path.string() + "'");
  };
  const std::size_t sex_col = find_column(columns.sex);
  const std::size_t age_col = find_column(columns.age);
  const std::size_t job_col = find_column(columns.job);
  const std::size_t housing_col = find_column(columns.housing);
  const std::size_t credit_col = find_column(columns.credit_amount);

  LoadResult result;
  std::size_t row = 0;
  for (++it; it != lines.end(); ++it) {
    if (blank(*it)) continue;
    ++row;
    auto fields = io::split_csv_line(*it);
    fields.resize(std::max(fields.size(), header.size()));
    for (auto& f : fields) f = io::trim(f);

    const std::size_t required[] = {sex_col, age_col, job_col, housing_col, credit_col};
    if (std::any_of(std::begin(required), std::end(required),
                    [&](std::size_t j) { return fields[j].empty(); })) {
      ++result.skipped_rows;
      continue;
    }

    RawRecord rec;
    rec.sex = fields[sex_col];
    rec.housing = fields[housing_col];
    const auto age = parse_integer(fields[age_col], row, columns.age);
    if (age < kMinAge || age > kMaxAge) {
      throw InputError(cell_error(row, columns.age, "age " + std::to_string(age) +
                                                        " outside [18, 120]"));
    }
    rec.age = static_cast<int>(age);
    const auto job = parse_integer(fields[job_col], row, columns.job);
    if (job < 0) throw InputError(cell_error(row, columns.job, "negative job code"));
    rec.job = static_cast<int>(job);
    rec.credit_amount = parse_integer(fields[credit_col], row, columns.credit_amount);
    if (rec.credit_amount < 1) {
      throw InputError(cell_error(row, columns.credit_amount, "credit amount must be >= 1"));
    }
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty()) throw InputError("empty table: '" + path.string() + "' has no data rows");
  return result;
}

Dataset preprocess(const std::vector<RawRecord>& records, const PreprocessConfig& config) {
  if (records.empty()) throw InputError("preprocess: no records");
  const auto own = io::to_lower(io::trim(config.ownership_label));

  Dataset out;
  out.observations.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const auto sex_key = io::to_lower(io::trim(rec.sex));
    const auto sex = config.sex_coding.find(sex_key);
    if (sex == config.sex_coding.end()) {
      throw InputError("record " + std::to_string(i + 1) + ": unknown sex label '" + rec.sex + "'");
    }
    if (sex->second != 0 && sex->second != 1) {
      throw InputError("sex coding for '" + sex_key + "' must be 0 or 1");
    }
    if (rec.credit_amount < 1) {
      throw InputError("record " + std::to_string(i + 1) + ": credit amount must be >= 1");
    }
    Observation obs;
    obs.sex = sex->second;
    obs.age_std = rec.age;
    obs.job = rec.job >= config.job_threshold ? 1 : 0;
    obs.house = io::to_lower(io::trim(rec.housing)) == own ? 1 : 0;
    obs.credit = rec.credit_amount;
    out.observations.push_back(obs);
  }

  if (config.standardize_age) {
    const double n = static_cast<double>(records.size());
    double mean = 0.0;
    for (const auto& obs : out.observations) mean += obs.age_std;
    mean /= n;
    double ss = 0.0;
    for (const auto& obs : out.observations) ss += (obs.age_std - mean) * (obs.age_std - mean);
    const double sd = records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (!(sd > 0.0)) throw InputError("zero age variance: cannot standardize age");
    out.standardization = {mean, sd, true};
    for (auto& obs : out.observations) obs.age_std = out.standardization.apply(obs.age_std);
  }
  return out;
}

SplitResult split(const Dataset& data, const SplitSpec& spec) {
  if (spec.train_count == 0 || spec.train_count >= data.size()) {
    throw InputError("split: train_count " + std::to_string(spec.train_count) +
                     " must lie strictly between 0 and the dataset size " +
                     std::to_string(data.size()));
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = RandomStream::derive(spec.seed, kSplitStream);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  SplitResult result;
  result.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
  result.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.train_count), order.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.test_indices.begin(), result.test_indices.end());

  const auto& source = data.standardization;
  if (!source.enabled) {
    result.train = restandardized(data, result.train_indices, source, source);
    result.test = restandardized(data, result.test_indices, source, source);
    return result;
  }

  const double n = static_cast<double>(result.train_indices.size());
  double mean = 0.0;
  for (auto i : result.train_indices) mean += source.invert(data[i].age_std);
  mean /= n;
  double ss = 0.0;
  for (auto i : result.train_indices) {
    const double d = source.invert(data[i].age_std) - mean;
    ss += d * d;
  }
  const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (!(sd > 0.0)) throw InputError("split: zero age variance in the training set");
  const Standardization train_std{mean, sd, true};
  result.train = restandardized(data, result.train_indices, source, train_std);
  result.test = restandardized(data, result.test_indices, source, train_std);
  return result;
}

SyntheticData generate_synthetic(const ModelParams& params, const ModelConfig& model_config,
                                 std::size_t n, std::uint64_t seed,
                                 const CovariateSpec& covariates) {
  if (n == 0) throw std::invalid_argument("generate_synthetic: n must be >= 1");
  model_config.validate();
  auto rng = RandomStream::derive(seed, 0);

  SyntheticData out;
  out.data.observations.reserve(n);
  out.true_latents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = rng.normal();
    Observation obs;
    obs.sex = rng.uniform() < covariates.p_male ? 1 : 0;
    obs.age_std = covariates.age_mean + covariates.age_sd * rng.normal();
    obs.job = rng.uniform() < sigmoid(job_predictor(params, c, obs)) ? 1 : 0;
    obs.house = rng.uniform() < sigmoid(house_predictor(params, c, obs)) ? 1 : 0;

    const double eta = credit_predictor(params, c, obs, model_config);
    const double rate = std::exp(eta);
    if (!(rate <= model_config.poisson_rate_cap)) {
      throw RateOverflowError(eta, model_config.poisson_rate_cap);
    }
    std::int64_t count = 0;
    if (rate > 0.0) count = std::poisson_distribution<std::int64_t>(rate)(rng.engine());
    obs.credit = std::llround(static_cast<double>(count) * model_config.credit_scale);

    out.data.observations.push_back(obs);
    out.true_latents.push_back(c);
  }
  return out;
}

std::string dataset_to_csv(const Dataset& data, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  const auto& s = data.standardization;
  out << "# standardization enabled=" << (s.enabled ? 1 : 0)
      << " age_mean=" << io::format_exact(s.age_mean) << " age_sd=" << io::format_exact(s.age_sd)
      << '\n';
  out << "sex,age_std,job,house,credit\n";
  for (const auto& obs : data.observations) {
    out << obs.sex << ',' << io::format_exact(obs.age_std) << ',' << obs.job << ',' << obs.house
        << ',' << obs.credit << '\n';
  }
  return out.str();
}

Dataset dataset_from_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  Dataset data;
  bool have_header = false;
  std::size_t line_no = 0;
  for (const auto& raw : lines) {
    ++line_no;
    const auto line = io::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream ss(line.substr(1));
      std::string tag;
      ss >> tag;
      if (tag != "standardization") continue;
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const double value = parse_real(kv.substr(eq + 1), line_no, key);
        if (key == "enabled") data.standardization.enabled = value != 0.0;
        if (key == "age_mean") data.standardization.age_mean = value;
        if (key == "age_sd") data.standardization.age_sd = value;
      }
      continue;
    }
    const auto fields = io::split_csv_line(line);
    if (!have_header) {
      const std::vector<std::string> expected{"sex", "age_std", "job", "house", "credit"};
      if (fields != expected) {
        throw InputError("'" + path.string() + "': expected header sex,age_std,job,house,credit");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 5) {
      throw InputError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": expected 5 fields");
    }
    Observation obs;
    obs.sex = static_cast<int>(parse_integer(fields[0], line_no, "sex"));
    obs.age_std = parse_real(fields[1], line_no, "age_std");
    obs.job = static_cast<int>(parse_integer(fields[2], line_no, "job"));
    obs.house = static_cast<int>(parse_integer(fields[3], line_no, "house"));
    obs.credit = parse_integer(fields[4], line_no, "credit");
    const auto binary = [](int v) { return v == 0 || v == 1; };
    if (!binary(obs.sex) || !binary(obs.job) || !binary(obs.house) || obs.credit < 0) {
      throw InputError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": sex/job/house must be 0 or 1 and credit non-negative");
    }
    data.observations.push_back(obs);
  }
  if (data.empty()) throw InputError("empty table: '" + path.string() + "' has no observations");
  if (data.standardization.enabled && !(data.standardization.age_sd > 0.0)) {
    throw InputError("'" + path.string() + "': standardization age_sd must be positive");
  }
  return data;
}

}  // namespace faircredit
