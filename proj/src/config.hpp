#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "sampler.hpp"
#include "selection.hpp"
#include "simulate.hpp"

namespace stfm {

using json = nlohmann::json;

// Ingestion options for the dataset CSV reader.
struct IngestOptions {
  bool month_names = false;  // map Oct..Mar -> 1..6 in the time column
  double jitter = 0.0;       // deterministic coordinate jitter for duplicate stations
};

struct FitConfig {
  std::string dataset_path;
  double kappa = 0.2;
  BasisCounts basis;
  double domain_margin = 0.1;
  PriorConfig priors;
  McmcConfig mcmc;
  std::uint64_t seed = 1;
  int threads = 0;
  DistanceMetric metric = DistanceMetric::euclidean_degrees;
  IngestOptions ingest;
};

struct SimulateConfig {
  SimConfig sim;
  std::uint64_t seed = 1;
};

struct SelectConfig {
  std::string dataset_path;
  GridSelectConfig grid;
  DistanceMetric metric = DistanceMetric::euclidean_degrees;
  IngestOptions ingest;
};

struct PredictConfig {
  std::string run_dir;       // fit output directory (chains + config)
  std::string dataset_path;  // dataset the fit used
  PredictionTarget target;   // block in the config is 1-based
  double level = 0.95;
  std::uint64_t seed = 1;
  IngestOptions ingest;
};

enum class StudyName { prior_sensitivity, size_sensitivity, kappa_recovery, prediction };

struct StudyConfig {
  StudyName study = StudyName::prior_sensitivity;
  SimConfig sim;
  PriorConfig priors;          // base priors (size/kappa/prediction studies)
  std::vector<NamedPrior> prior_grid;  // prior-sensitivity study
  McmcConfig mcmc;
  int replicates = 10;
  std::uint64_t seed = 1;
  int threads = 0;
  std::vector<double> kappa_grid;         // kappa-recovery study
  std::vector<int> n_grid, tau_grid;      // size study
  std::vector<std::vector<int>> j_grid;   // size study
  double level = 0.95;                    // prediction study
};

// Defaults shared by configs and tests: Table-style inverse-gamma priors and
// the diffuse Gamma range priors.
PriorConfig default_priors();
McmcConfig desk_mcmc_defaults();

// Parsers; throw config/parse errors with the offending key in the message.
FitConfig parse_fit_config(const json& j);
SimulateConfig parse_simulate_config(const json& j);
SelectConfig parse_select_config(const json& j);
PredictConfig parse_predict_config(const json& j);
StudyConfig parse_study_config(const json& j);

PriorConfig parse_priors(const json& j);
McmcConfig parse_mcmc(const json& j);
SimConfig parse_sim(const json& j);

json load_json_file(const std::string& path);

// Stable FNV-1a digest of the canonical (sorted-key) JSON dump.
std::string config_digest(const json& j);

}  // namespace stfm
