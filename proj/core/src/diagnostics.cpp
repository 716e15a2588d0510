#include "faircredit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "faircredit/io.hpp"
#include "stats.hpp"

namespace faircredit {
namespace {

struct Centered {
  std::vector<double> dev;
  double c0 = 0.0;  // biased variance
};

Centered center(std::span<const double> series) {
  Centered out;
  const double m = detail::mean(series);
  out.dev.reserve(series.size());
  for (double x : series) out.dev.push_back(x - m);
  for (double d : out.dev) out.c0 += d * d;
  out.c0 /= static_cast<double>(series.size());
  return out;
}

double lag_autocorrelation(const Centered& s, std::size_t lag) {
  if (lag == 0) return 1.0;
  const std::size_t n = s.dev.size();
  double acc = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) acc += s.dev[t] * s.dev[t + lag];
  return acc / static_cast<double>(n) / s.c0;
}

bool is_constant(std::span<const double> series) {
  return std::all_of(series.begin(), series.end(), [&](double x) { return x == series.front(); });
}

void require_ess_input(std::span<const double> series, const char* who) {
  if (series.size() < 8) throw std::invalid_argument(std::string(who) + ": need at least 8 draws");
  if (is_constant(series)) throw std::invalid_argument(std::string(who) + ": constant series");
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
  if (series.size() < 2) throw std::invalid_argument("autocorrelation: need at least 2 values");
  if (max_lag >= series.size()) throw std::invalid_argument("autocorrelation: max_lag too large");
  const auto centered = center(series);
  if (!(centered.c0 > 0.0)) throw std::invalid_argument("autocorrelation: zero variance");
  std::vector<double> rho(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = lag_autocorrelation(centered, k);
  return rho;
}

std::vector<double> rank_normalize(std::span<const double> series) {
  const std::size_t n = series.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series[a] < series[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && series[order[j + 1]] == series[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = average;
    i = j + 1;
  }
  const boost::math::normal_distribution<double> standard;
  std::vector<double> z(n);
  const double denom = static_cast<double>(n) + 0.25;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = boost::math::quantile(standard, (ranks[i] - 0.375) / denom);
  }
  return z;
}

double ess_raw(std::span<const double> series) {
  if (series.size() < 2) throw std::invalid_argument("ess: need at least 2 values");
  const auto centered = center(series);
  if (!(centered.c0 > 0.0)) throw std::invalid_argument("ess: zero variance");
  const std::size_t n = series.size();

  // tau = -1 + 2 * sum_t (rho[2t] + rho[2t+1]), stopping before the first
  // negative pair.
  double tau = -1.0;
  for (std::size_t t = 0; 2 * t + 1 < n; ++t) {
    const double pair = lag_autocorrelation(centered, 2 * t) + lag_autocorrelation(centered, 2 * t + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  if (!(tau > 0.0)) return nd;
  return std::min(nd / tau, nd);
}

double ess_bulk(std::span<const double> series) {
  require_ess_input(series, "ess_bulk");
  return ess_raw(rank_normalize(series));
}

double ess_tail(std::span<const double> series) {
  require_ess_input(series, "ess_tail");
  const double q05 = detail::quantile7(series, 0.05);
  const double q95 = detail::quantile7(series, 0.95);
  std::vector<double> lower(series.size());
  std::vector<double> upper(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    lower[i] = series[i] <= q05 ? 1.0 : 0.0;
    upper[i] = series[i] <= q95 ? 1.0 : 0.0;
  }
  if (is_constant(lower) || is_constant(upper)) {
    throw std::invalid_argument("ess_tail: degenerate tail indicator");
  }
  return std::min(ess_raw(rank_normalize(lower)), ess_raw(rank_normalize(upper)));
}

double quantile(std::span<const double> series, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile: prob outside [0, 1]");
  return detail::quantile7(series, prob);
}

double sample_sd(std::span<const double> series) { return detail::sample_sd(series); }

std::vector<SummaryRow> summarize(const ChainTable& table) {
  if (table.rows() == 0) throw std::invalid_argument("summarize: empty chain");
  std::vector<SummaryRow> rows;
  rows.reserve(table.names.size());
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    const auto& series = table.columns[j];
    SummaryRow row;
    row.name = table.names[j];
    row.std = detail::sample_sd(series);
    row.q05 = detail::quantile7(series, 0.05);
    row.median = detail::quantile7(series, 0.5);
    row.q95 = detail::quantile7(series, 0.95);
    try {
      row.ess_bulk = ess_bulk(series);
      row.ess_tail = ess_tail(series);
    } catch (const std::invalid_argument& e) {
      row.degenerate = true;
      row.error = e.what();
      row.ess_bulk = NAN;
      row.ess_tail = NAN;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ChainTable chain_table(const Chain& chain, const std::vector<std::size_t>& latent_subset) {
  ChainTable table;
  for (auto p : active_params(chain.model_config)) {
    table.names.emplace_back(param_name(p));
    table.columns.push_back(chain.param_series(p));
  }
  for (auto i : latent_subset) {
    if (i >= chain.latent_draws.size()) throw std::out_of_range("chain_table: latent index out of range");
    table.names.push_back("c_" + std::to_string(i));
    table.columns.push_back(chain.latent_draws[i]);
  }
  return table;
}

std::vector<SummaryRow> summarize(const Chain& chain, const std::vector<std::size_t>& latent_subset) {
  return summarize(chain_table(chain, latent_subset));
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "name,std,q05,median,q95,ess_bulk,ess_tail\n";
  for (const auto& r : rows) {
    out << r.name;
    for (double v : {r.std, r.q05, r.median, r.q95, r.ess_bulk, r.ess_tail}) {
      out << ',' << io::format_sig(v, 6);
    }
    out << '\n';
  }
  return out.str();
}

std::string summary_to_table(const std::vector<SummaryRow>& rows) {
  std::size_t name_width = 4;
  for (const auto& r : rows) name_width = std::max(name_width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "" << std::right;
  for (const char* label : {"std", "5%", "median", "95%", "ess_bulk", "ess_tail"}) {
    out << std::setw(10) << label;
  }
  out << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.name << std::right;
    for (double v : {r.std, r.q05, r.median, r.q95, r.ess_bulk, r.ess_tail}) {
      out << std::setw(10) << v;
    }
    if (r.degenerate) out << "  (" << r.error << ")";
    out << '\n';
  }
  return out.str();
}

Histogram histogram(std::span<const double> series, std::size_t bins) {
  if (series.empty() || bins == 0) throw std::invalid_argument("histogram: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Histogram h;
  h.width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  h.left_edges.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) h.left_edges[b] = lo + h.width * static_cast<double>(b);
  for (double x : series) {
    std::size_t b = 0;
    if (h.width > 0.0) {
      b = std::min(bins - 1, static_cast<std::size_t>(std::floor((x - lo) / h.width)));
    }
    ++h.counts[b];
  }
  return h;
}

std::vector<std::filesystem::path> export_plot_data(const ChainTable& table,
                                                    const std::filesystem::path& out_dir,
                                                    const std::string& header_comment) {
  if (table.rows() == 0) throw std::invalid_argument("export_plot_data: empty chain");
  std::filesystem::create_directories(out_dir);
  const std::string comment = header_comment.empty() ? "" : "# " + header_comment + "\n";
  std::vector<std::filesystem::path> written;
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    const auto& name = table.names[j];
    const auto& series = table.columns[j];

    std::ostringstream trace;
    trace << comment << "draw,value\n";
    for (std::size_t d = 0; d < series.size(); ++d) trace << d << ',' << io::format_exact(series[d]) << '\n';
    written.push_back(out_dir / ("trace_" + name + ".csv"));
    io::write_file_atomic(written.back(), trace.str());

    if (series.size() >= 2 && !is_constant(series)) {
      const auto rho = autocorrelation(series, std::min(kPlotMaxLag, series.size() - 1));
      std::ostringstream acf;
      acf << comment << "lag,rho\n";
      for (std::size_t k = 0; k < rho.size(); ++k) acf << k << ',' << io::format_exact(rho[k]) << '\n';
      written.push_back(out_dir / ("acf_" + name + ".csv"));
      io::write_file_atomic(written.back(), acf.str());
    }

    const auto h = histogram(series);
    std::ostringstream hist;
    hist << comment << "left_edge,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      hist << io::format_exact(h.left_edges[b]) << ',' << h.counts[b] << '\n';
    }
    written.push_back(out_dir / ("hist_" + name + ".csv"));
    io::write_file_atomic(written.back(), hist.str());
  }
  return written;
}

}  // namespace faircredit
