#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faircredit/sampler.hpp"

namespace faircredit {

/// Normalized autocorrelation for lags 0..max_lag, with the biased
/// (divide-by-n) autocovariance. Throws std::invalid_argument for series
/// shorter than 2, max_lag >= length, or zero variance.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);

/// Normal scores of the average ranks, (r - 3/8) / (n + 1/4).
std::vector<double> rank_normalize(std::span<const double> series);

/// Effective sample size of the series as given: n / (1 + 2 sum rho_k),
/// truncated by Geyer's initial positive sequence, clamped to (0, n].
double ess_raw(std::span<const double> series);

/// ESS of the rank-normalized series. Needs at least 8 non-constant values.
double ess_bulk(std::span<const double> series);

/// Minimum ESS of the indicator series 1{x <= q05} and 1{x <= q95}.
double ess_tail(std::span<const double> series);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::span<const double> series, double prob);

/// Sample standard deviation, denominator n - 1.
double sample_sd(std::span<const double> series);

struct SummaryRow {
  std::string name;
  double std = 0.0;
  double q05 = 0.0;
  double median = 0.0;
  double q95 = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
  /// Set when the ESS estimators rejected the series (e.g. constant draws);
  /// `error` then holds the reason and the ESS fields are NaN.
  bool degenerate = false;
  std::string error;
};

/// One row per column, in table order.
std::vector<SummaryRow> summarize(const ChainTable& table);

/// One row per active parameter, then one per selected latent (`c_<i>`).
std::vector<SummaryRow> summarize(const Chain& chain,
                                  const std::vector<std::size_t>& latent_subset = {});

/// `name,std,q05,median,q95,ess_bulk,ess_tail` with 6 significant digits.
std::string summary_to_csv(const std::vector<SummaryRow>& rows,
                           const std::string& header_comment = {});

/// Aligned text table with the column labels std, 5%, median, 95%,
/// ess_bulk, ess_tail.
std::string summary_to_table(const std::vector<SummaryRow>& rows);

/// Active parameters followed by the selected latents as named series.
ChainTable chain_table(const Chain& chain, const std::vector<std::size_t>& latent_subset = {});

inline constexpr std::size_t kPlotMaxLag = 100;
inline constexpr std::size_t kHistogramBins = 40;

struct Histogram {
  std::vector<double> left_edges;
  std::vector<std::size_t> counts;
  double width = 0.0;
};

/// `bins` equal-width bins spanning [min, max]; the maximum falls in the last
/// bin. A constant series puts every value in the first bin with width 0.
Histogram histogram(std::span<const double> series, std::size_t bins = kHistogramBins);

/// Writes trace_<name>.csv, acf_<name>.csv and hist_<name>.csv for every
/// column and returns the written paths. Constant series get no acf file.
std::vector<std::filesystem::path> export_plot_data(const ChainTable& table,
                                                    const std::filesystem::path& out_dir,
                                                    const std::string& header_comment = {});

}  // namespace faircredit
