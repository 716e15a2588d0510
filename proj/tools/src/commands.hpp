#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace faircredit::cli {

struct IngestSummary {
  std::size_t records = 0;
  std::size_t skipped_rows = 0;
  std::vector<std::filesystem::path> written;
};

enum class ModelKind { full, unaware, fair };
ModelKind parse_model_kind(const std::string& name);

struct SynthSummary {
  std::vector<Param> params;
  std::vector<double> abs_errors;
  double latent_correlation = 0.0;
};

IngestSummary cmd_ingest(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, ModelKind kind, std::ostream& log);
/// `chain` is a params.csv (or latents.csv) written by `fit`.
void cmd_diagnose(const RunConfig& config, const std::filesystem::path& chain, std::ostream& log);
void cmd_compare(const RunConfig& config, std::ostream& log);
SynthSummary cmd_synth(const RunConfig& config, std::ostream& log);

/// Parses arguments, dispatches, and maps exceptions to exit codes:
/// 0 success, 1 internal error, 2 input or configuration error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace faircredit::cli
