#include "faircredit/error.hpp"

#include "faircredit/io.hpp"

namespace faircredit {

RateOverflowError::RateOverflowError(double linear_predictor, double cap)
    : std::runtime_error("Poisson rate exceeds cap " + io::format_sig(cap, 6) +
                         " (linear predictor " + io::format_sig(linear_predictor, 10) + ")"),
      linear_predictor_(linear_predictor) {}

RankDeficientError::RankDeficientError(std::string column)
    : std::runtime_error("design matrix is rank deficient: column '" + column +
                         "' is linearly dependent on earlier columns"),
      column_(std::move(column)) {}

SamplerAbort::SamplerAbort(std::size_t failed_steps, std::size_t total_steps,
                           double last_bad_predictor)
    : std::runtime_error("sampler aborted: " + std::to_string(failed_steps) + " of " +
                         std::to_string(total_steps) +
                         " steps failed to evaluate the likelihood (last offending linear "
                         "predictor " +
                         io::format_sig(last_bad_predictor, 10) + ")"),
      failed_(failed_steps),
      total_(total_steps) {}

}  // namespace faircredit
