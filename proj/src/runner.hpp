#pragma once

#include <string>

#include "config.hpp"
#include "io.hpp"

namespace stfm {

// In-memory fit result backing the fit workflow and the C API fit handle.
struct FitResult {
  Dataset dataset;
  DesignSet design;
  std::vector<ChainSamples> chains;
  std::string config_digest, dataset_digest;
  bool any_failed = false;
};

FitResult run_fit(const FitConfig& cfg, const std::string& config_digest);

// Executes one subcommand workflow; every artifact lands under out_dir and
// carries the digest of `config`. Throws stfm::Error on failure; a failed fit
// leaves partial chains plus a FAILED marker in the run directory.
void run_command(const std::string& command, const json& config, const std::string& out_dir);

// Convergence verdict for a set of chains (R-hat per tracked scalar at the
// given threshold, plus the multivariate PSRF when computable).
json convergence_report(const std::vector<ChainSamples>& chains, double threshold = 1.1);

}  // namespace stfm
