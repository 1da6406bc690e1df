// Command-line front end; links the stfm C API only.

#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stfm.h"

namespace {

using nlohmann::json;

const char* error_name(int code) {
  switch (code) {
    case STFM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case STFM_ERR_DOMAIN: return "domain";
    case STFM_ERR_CONFIG: return "config";
    case STFM_ERR_IO: return "io";
    case STFM_ERR_PARSE: return "parse";
    case STFM_ERR_NUMERIC: return "numeric";
    case STFM_ERR_INSUFFICIENT_DATA: return "insufficient_data";
    default: return "internal";
  }
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return json::parse(text);
}

int run(const std::string& command, json config, const CommonArgs& args) {
  if (args.seed >= 0) config["seed"] = static_cast<unsigned long long>(args.seed);
  if (args.threads > 0) config["threads"] = args.threads;
  char errmsg[1024] = {0};
  int rc = stfm_run(command.c_str(), config.dump().c_str(), args.out_dir.c_str(), errmsg,
                    sizeof errmsg);
  if (rc != STFM_OK) {
    json err;
    err["error"] = {{"code", rc}, {"name", error_name(rc)}, {"message", errmsg}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return rc;
  }
  std::printf("%s: outputs written to %s\n", command.c_str(), args.out_dir.c_str());
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", args.config_path, "JSON configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--threads", args.threads,
                  "worker threads (default: logical cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stfm — Bayesian spatio-temporal functional model with block structure and "
               "repeated measures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(stfm_version()));

  CommonArgs sim_args, fit_args, sel_args, diag_args, pred_args, study_args;

  auto* sim = app.add_subcommand(
      "simulate", "Generate a synthetic dataset (dataset.csv + truth.json)");
  add_common(sim, sim_args, false);

  auto* fit = app.add_subcommand(
      "fit", "Run the Gibbs sampler on a dataset (chain CSVs, summary, convergence verdict)");
  add_common(fit, fit_args);

  auto* sel = app.add_subcommand(
      "select", "Grid search over kappa and basis counts ranked by LPML and DIC7");
  add_common(sel, sel_args);

  auto* diag = app.add_subcommand("diagnose",
                                  "Summaries and convergence diagnostics from chain CSVs");
  std::vector<std::string> chain_paths;
  add_common(diag, diag_args, false);
  diag->add_option("chains", chain_paths, "chain CSV files (alternative to the config)");

  auto* pred = app.add_subcommand(
      "predict", "Posterior predictive intervals for a target location/block");
  add_common(pred, pred_args);

  auto* study = app.add_subcommand(
      "study", "Run a simulation study (prior_sensitivity | size_sensitivity | kappa_recovery | "
               "prediction)");
  std::string study_name;
  add_common(study, study_args, false);
  study->add_option("--name", study_name,
                    "study name (overrides the config's 'study' entry)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run("simulate", load_config(sim_args.config_path), sim_args);
    if (fit->parsed()) return run("fit", load_config(fit_args.config_path), fit_args);
    if (sel->parsed()) return run("select", load_config(sel_args.config_path), sel_args);
    if (diag->parsed()) {
      json config = load_config(diag_args.config_path);
      if (!chain_paths.empty()) config["chains"] = chain_paths;
      return run("diagnose", config, diag_args);
    }
    if (pred->parsed()) return run("predict", load_config(pred_args.config_path), pred_args);
    if (study->parsed()) {
      json config = load_config(study_args.config_path);
      if (!study_name.empty()) config["study"] = study_name;
      return run("study", config, study_args);
    }
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"code", STFM_ERR_PARSE}, {"name", "parse"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return STFM_ERR_PARSE;
  }
  return 0;
}
