#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "faircredit/diagnostics.hpp"
#include "faircredit/error.hpp"
#include "faircredit/io.hpp"

namespace faircredit::cli {
namespace fs = std::filesystem;

namespace {

std::string commented(const RunConfig& config, const std::string& body) {
  return "# " + header_comment(config) + "\n" + body;
}

void write(const fs::path& path, const std::string& content, std::vector<fs::path>* written = nullptr) {
  fs::create_directories(path.parent_path());
  io::write_file_atomic(path, content);
  if (written) written->push_back(path);
}

Dataset load_dataset(const RunConfig& config, std::size_t* skipped = nullptr) {
  const auto loaded = load_csv(config.dataset_path, config.columns);
  if (skipped) *skipped = loaded.skipped_rows;
  return preprocess(loaded.records, config.preprocess);
}

template <typename Key>
std::string count_table(const std::string& column, const std::map<Key, std::size_t>& counts) {
  std::ostringstream out;
  out << column << ",count\n";
  for (const auto& [k, n] : counts) out << k << ',' << n << '\n';
  return out.str();
}

std::string histogram_csv(const std::vector<double>& values) {
  const auto h = histogram(values, kHistogramBins);
  std::ostringstream out;
  out << "left,right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << io::format_sig(h.left_edges[b], 8) << ',' << io::format_sig(h.left_edges[b] + h.width, 8)
        << ',' << h.counts[b] << '\n';
  }
  return out.str();
}

void dump_abort(const RunConfig& config, const SamplerAbort& e) {
  std::ostringstream out;
  out << "error = " << e.what() << '\n'
      << "failed_steps = " << e.failed_steps() << '\n'
      << "total_steps = " << e.total_steps() << '\n'
      << canonical_text(config);
  write(config.out_dir / "chain" / "abort.txt", commented(config, out.str()));
}

FairFit run_fair(const RunConfig& config, const Dataset& train) {
  try {
    return fit_fair(train, config.model, config.sampler, config.forest, config.feature);
  } catch (const SamplerAbort& e) {
    dump_abort(config, e);
    throw;
  }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "full") return ModelKind::full;
  if (name == "unaware") return ModelKind::unaware;
  if (name == "fair") return ModelKind::fair;
  throw InputError("unknown model '" + name + "' (expected full, unaware or fair)");
}

IngestSummary cmd_ingest(const RunConfig& config, std::ostream& log) {
  const auto loaded = load_csv(config.dataset_path, config.columns);
  const Dataset data = preprocess(loaded.records, config.preprocess);
  IngestSummary summary{data.size(), loaded.skipped_rows, {}};

  const fs::path dir = config.out_dir / "ingest";
  write(dir / "dataset.csv", dataset_to_csv(data, header_comment(config)), &summary.written);

  std::map<std::string, std::size_t> sex, housing;
  std::map<int, std::size_t> job;
  std::vector<double> age, credit;
  for (const auto& r : loaded.records) {
    ++sex[io::to_lower(r.sex)];
    ++housing[io::to_lower(r.housing)];
    ++job[r.job];
    age.push_back(r.age);
    credit.push_back(static_cast<double>(r.credit_amount));
  }
  write(dir / "dist_sex.csv", commented(config, count_table("sex", sex)), &summary.written);
  write(dir / "dist_job.csv", commented(config, count_table("job", job)), &summary.written);
  write(dir / "dist_housing.csv", commented(config, count_table("housing", housing)), &summary.written);
  write(dir / "dist_age.csv", commented(config, histogram_csv(age)), &summary.written);
  write(dir / "dist_credit_amount.csv", commented(config, histogram_csv(credit)), &summary.written);
  write(dir / "covariance.csv", covariance_to_csv(covariance_matrix(data, false), header_comment(config)),
        &summary.written);
  write(dir / "correlation.csv", covariance_to_csv(covariance_matrix(data, true), header_comment(config)),
        &summary.written);

  log << "records: " << summary.records << " (skipped " << summary.skipped_rows << " incomplete rows)\n";
  if (data.standardization.enabled) {
    log << "age mean " << io::format_sig(data.standardization.age_mean, 6) << ", sd "
        << io::format_sig(data.standardization.age_sd, 6) << '\n';
  }
  log << "wrote " << summary.written.size() << " files to " << dir.string() << '\n';
  return summary;
}

void cmd_fit(const RunConfig& config, ModelKind kind, std::ostream& log) {
  const auto parts = split(load_dataset(config), config.split);
  const fs::path models = config.out_dir / "models";
  const std::string head = "# " + header_comment(config) + "\n";

  if (kind != ModelKind::fair) {
    const bool full = kind == ModelKind::full;
    const auto model = full ? fit_full(parts.train) : fit_unaware(parts.train);
    const auto path = models / (full ? "full.txt" : "unaware.txt");
    write(path, head + linear_model_to_text(model));
    log << (full ? "full" : "unaware") << " model: intercept " << io::format_sig(model.intercept, 6);
    for (std::size_t k = 0; k < model.feature_names.size(); ++k) {
      log << ", " << model.feature_names[k] << ' ' << io::format_sig(model.coefficients[k], 6);
    }
    log << "\nwrote " << path.string() << '\n';
    return;
  }

  const auto fit = run_fair(config, parts.train);
  save_fair_model(fit.model, models / "fair", header_comment(config));
  const fs::path chain_dir = config.out_dir / "chain";
  const std::vector<std::size_t> subset = config.latent_export.value_or(std::vector<std::size_t>{});
  std::vector<std::size_t> in_range;
  for (auto i : subset) {
    if (i < parts.train.size()) in_range.push_back(i);
  }
  write(chain_dir / "params.csv", params_chain_to_csv(fit.chain, header_comment(config)));
  if (!config.latent_export || !in_range.empty()) {
    write(chain_dir / "latents.csv", latents_chain_to_csv(fit.chain, in_range, header_comment(config)));
  }
  const auto rows = summarize(chain_table(fit.chain));
  write(chain_dir / "summary.csv", summary_to_csv(rows, header_comment(config)));

  log << summary_to_table(rows);
  log << "stored draws: " << fit.chain.draw_count() << ", latent acceptance "
      << io::format_sig(fit.chain.accept_rate_latents, 3) << ", failed steps " << fit.chain.failed_steps
      << '\n';
  log << "wrote " << (models / "fair").string() << " and " << chain_dir.string() << '\n';
}

void cmd_diagnose(const RunConfig& config, const fs::path& chain, std::ostream& log) {
  if (!fs::exists(chain)) throw InputError("missing chain file '" + chain.string() + "'");
  const auto table = read_chain_csv(chain);
  const auto rows = summarize(table);
  // Outputs keep the hash of the run that produced the chain when it is recorded.
  std::string header = header_comment(config);
  {
    std::istringstream in(io::read_file(chain));
    std::string first;
    std::getline(in, first);
    if (first.rfind("# config_hash=", 0) == 0) header = io::trim(first.substr(2));
  }
  const fs::path dir = config.out_dir / "diagnostics";
  write(dir / "summary.csv", summary_to_csv(rows, header));
  const auto plots = export_plot_data(table, dir / "plots", header);
  log << summary_to_table(rows);
  for (const auto& r : rows) {
    if (r.degenerate) log << "warning: " << r.name << ": " << r.error << '\n';
  }
  log << "wrote summary and " << plots.size() << " plot files to " << dir.string() << '\n';
}

void cmd_compare(const RunConfig& config, std::ostream& log) {
  const auto parts = split(load_dataset(config), config.split);
  CompareConfig cc{config.model, config.sampler, config.forest, config.feature, config.age_flip,
                   config.leaky_fair};
  Comparison result = [&] {
    try {
      return compare_models(parts.train, parts.test, cc, config.split.seed);
    } catch (const SamplerAbort& e) {
      dump_abort(config, e);
      throw;
    }
  }();
  const fs::path dir = config.out_dir / "compare";
  write(dir / "report.csv", report_to_csv(result.report, header_comment(config)));
  const auto table = report_to_table(result.report);
  write(dir / "report.txt", commented(config, table));
  log << table << "wrote " << dir.string() << '\n';
}

SynthSummary cmd_synth(const RunConfig& config, std::ostream& log) {
  const auto synth =
      generate_synthetic(config.truth, config.model, config.synth_n, config.synth_seed, config.synth_covariates);
  Chain chain = [&] {
    try {
      return run_chain(synth.data, config.model, config.sampler);
    } catch (const SamplerAbort& e) {
      dump_abort(config, e);
      throw;
    }
  }();
  orient_latent_axis(chain);

  const auto medians = chain.median_params();
  const auto means = chain.latent_means();
  SynthSummary summary;
  std::ostringstream csv;
  csv << "param,truth,median,abs_error\n";
  for (Param p : active_params(config.model)) {
    const double err = std::abs(medians[p] - config.truth[p]);
    summary.params.push_back(p);
    summary.abs_errors.push_back(err);
    csv << param_name(p) << ',' << io::format_exact(config.truth[p]) << ',' << io::format_exact(medians[p])
        << ',' << io::format_exact(err) << '\n';
  }

  // Pearson correlation of the inferred latent means with the generating values.
  const auto& truth = synth.true_latents;
  const double n = static_cast<double>(truth.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    mx += means[i];
    my += truth[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sxy += (means[i] - mx) * (truth[i] - my);
    sxx += (means[i] - mx) * (means[i] - mx);
    syy += (truth[i] - my) * (truth[i] - my);
  }
  summary.latent_correlation = sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;

  const fs::path dir = config.out_dir / "synth";
  write(dir / "synthetic.csv", dataset_to_csv(synth.data, header_comment(config)));
  write(dir / "recovery.csv", "# " + header_comment(config) + "\n# latent_correlation=" +
                                  io::format_exact(summary.latent_correlation) + "\n" + csv.str());

  log << "param        truth    median   abs_error\n";
  for (std::size_t k = 0; k < summary.params.size(); ++k) {
    const Param p = summary.params[k];
    char line[96];
    std::snprintf(line, sizeof line, "%-10s %8.3f %9.3f %10.3f\n", std::string(param_name(p)).c_str(),
                  config.truth[p], medians[p], summary.abs_errors[k]);
    log << line;
  }
  log << "latent correlation: " << io::format_sig(summary.latent_correlation, 4) << '\n'
      << "wrote " << dir.string() << '\n';
  return summary;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactually fair credit-amount prediction with a latent reliability model"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config_path, preset, out_dir, model_name, chain_path;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Key-value config file");
    sub->add_option("--preset", preset, "paper or recommended")->check(CLI::IsMember({"paper", "recommended"}));
    sub->add_option("--seed", seed, "Overrides every seed in the config");
    sub->add_option("--out", out_dir, "Output directory");
  };

  auto* ingest = app.add_subcommand("ingest", "Load and preprocess the dataset, write distributions");
  auto* fit = app.add_subcommand("fit", "Fit one model on the training split");
  auto* diagnose = app.add_subcommand("diagnose", "Summarize a chain file and export plot data");
  auto* compare = app.add_subcommand("compare", "Fit all three models and write the comparison report");
  auto* synth = app.add_subcommand("synth", "Parameter recovery on synthetic data");
  for (auto* sub : {ingest, fit, diagnose, compare, synth}) add_common(sub);
  fit->add_option("--model", model_name, "full, unaware or fair")
      ->required()
      ->check(CLI::IsMember({"full", "unaware", "fair"}));
  diagnose->add_option("--chain", chain_path, "params.csv or latents.csv from fit")->required();
  compare->add_flag("--leaky-fair", overrides.leaky_fair,
                    "Also score the fair model with credit-conditioned test latents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << msg.str();
    return 2;
  }

  auto* active = app.get_subcommands().front();
  if (!config_path.empty()) overrides.config_path = config_path;
  if (!preset.empty()) overrides.preset = preset;
  if (active->count("--seed") > 0) overrides.seed = seed;
  if (!out_dir.empty()) overrides.out_dir = out_dir;

  try {
    const RunConfig config = resolve_config(overrides);
    if (active == ingest) {
      cmd_ingest(config, out);
    } else if (active == fit) {
      cmd_fit(config, parse_model_kind(model_name), out);
    } else if (active == diagnose) {
      cmd_diagnose(config, chain_path, out);
    } else if (active == compare) {
      cmd_compare(config, out);
    } else {
      cmd_synth(config, out);
    }
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const RankDeficientError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace faircredit::cli
