#include "stfm.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "errors.hpp"
#include "io.hpp"
#include "runner.hpp"

using namespace stfm;

struct stfm_dataset {
  Dataset ds;
};

struct stfm_fit_result {
  FitResult res;
};

namespace {

void set_errmsg(char* errmsg, int errmsg_len, const std::string& msg) {
  if (!errmsg || errmsg_len <= 0) return;
  std::size_t n = std::min(msg.size(), static_cast<std::size_t>(errmsg_len - 1));
  std::memcpy(errmsg, msg.data(), n);
  errmsg[n] = '\0';
}

template <typename Fn>
int guarded(char* errmsg, int errmsg_len, Fn&& fn) {
  try {
    fn();
    return STFM_OK;
  } catch (const Error& e) {
    set_errmsg(errmsg, errmsg_len, e.what());
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    set_errmsg(errmsg, errmsg_len, "out of memory");
    return STFM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_errmsg(errmsg, errmsg_len, e.what());
    return STFM_ERR_INTERNAL;
  }
}

json parse_json_text(const char* text, const char* what) {
  if (!text) fail(ErrorCode::invalid_argument, std::string(what) + ": null JSON text");
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::parse, std::string(what) + ": invalid JSON: " + e.what());
  }
}

}  // namespace

extern "C" {

const char* stfm_version(void) { return "0.1.0"; }

int stfm_run(const char* command, const char* config_json, const char* out_dir, char* errmsg,
             int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!command || !out_dir) fail(ErrorCode::invalid_argument, "stfm_run: null argument");
    run_command(command, parse_json_text(config_json, "stfm_run"), out_dir);
  });
}

int stfm_dataset_read_csv(const char* path, stfm_dataset** out, char* errmsg, int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!path || !out) fail(ErrorCode::invalid_argument, "stfm_dataset_read_csv: null argument");
    auto handle = std::make_unique<stfm_dataset>();
    handle->ds = read_dataset_csv(path);
    *out = handle.release();
  });
}

int stfm_dataset_simulate(const char* sim_config_json, stfm_dataset** out, char* errmsg,
                          int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!out) fail(ErrorCode::invalid_argument, "stfm_dataset_simulate: null output");
    SimulateConfig cfg = parse_simulate_config(parse_json_text(sim_config_json, "simulate"));
    RngStream rng(cfg.seed, 0);
    auto handle = std::make_unique<stfm_dataset>();
    handle->ds = generate_dataset(cfg.sim, rng).first;
    *out = handle.release();
  });
}

int stfm_dataset_write_csv(const stfm_dataset* ds, const char* path, char* errmsg,
                           int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!ds || !path) fail(ErrorCode::invalid_argument, "stfm_dataset_write_csv: null argument");
    write_dataset_csv(ds->ds, path);
  });
}

int stfm_dataset_dims(const stfm_dataset* ds, int* n_blocks, int* n_stations, int* n_times,
                      long long* n_obs) {
  if (!ds) return STFM_ERR_INVALID_ARGUMENT;
  if (n_blocks) *n_blocks = ds->ds.blocks();
  if (n_stations) *n_stations = ds->ds.n();
  if (n_times) *n_times = ds->ds.tau();
  if (n_obs) *n_obs = static_cast<long long>(ds->ds.y.size());
  return STFM_OK;
}

void stfm_dataset_free(stfm_dataset* ds) { delete ds; }

int stfm_fit(const stfm_dataset* ds, const char* fit_config_json, stfm_fit_result** out,
             char* errmsg, int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!ds || !out) fail(ErrorCode::invalid_argument, "stfm_fit: null argument");
    json config = parse_json_text(fit_config_json, "stfm_fit");
    config["dataset"] = "<handle>";  // satisfies the schema; the handle supplies the data
    FitConfig cfg = parse_fit_config(config);
    auto handle = std::make_unique<stfm_fit_result>();
    FitResult& res = handle->res;
    res.config_digest = config_digest(config);
    res.dataset = ds->ds;
    res.dataset_digest = dataset_digest(res.dataset);
    res.design = build_design(res.dataset.lats(), res.dataset.lons(), res.dataset.times,
                              res.dataset.block_reps, cfg.basis.k_mu, cfg.basis.k_zeta,
                              cfg.basis.k_gamma, cfg.domain_margin);
    res.chains = run_chains(res.dataset, res.design, cfg.priors, cfg.mcmc, cfg.kappa, cfg.seed, 0,
                            cfg.threads);
    for (auto& c : res.chains) {
      c.config_digest = res.config_digest;
      c.dataset_digest = res.dataset_digest;
    }
    *out = handle.release();
  });
}

int stfm_fit_result_n_chains(const stfm_fit_result* fit, int* out) {
  if (!fit || !out) return STFM_ERR_INVALID_ARGUMENT;
  *out = static_cast<int>(fit->res.chains.size());
  return STFM_OK;
}

int stfm_fit_result_write(const stfm_fit_result* fit, const char* out_dir, char* errmsg,
                          int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!fit || !out_dir) fail(ErrorCode::invalid_argument, "stfm_fit_result_write: null argument");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::io, std::string("cannot create directory: ") + out_dir);
    for (std::size_t c = 0; c < fit->res.chains.size(); ++c) {
      std::string base = std::string(out_dir) + "/chain_" + std::to_string(c + 1);
      write_chain(fit->res.chains[c], base + ".csv", base + ".meta.json");
    }
  });
}

int stfm_fit_result_lpml(const stfm_fit_result* fit, double* out, char* errmsg, int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!fit || !out) fail(ErrorCode::invalid_argument, "stfm_fit_result_lpml: null argument");
    *out = lpml(fit->res.chains, fit->res.dataset, fit->res.design);
  });
}

int stfm_fit_result_dic7(const stfm_fit_result* fit, double* out, char* errmsg, int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!fit || !out) fail(ErrorCode::invalid_argument, "stfm_fit_result_dic7: null argument");
    *out = dic7(fit->res.chains, fit->res.dataset, fit->res.design);
  });
}

int stfm_predict(const stfm_fit_result* fit, const char* target_json, double level,
                 unsigned long long seed, const char* out_csv_path, char* errmsg, int errmsg_len) {
  return guarded(errmsg, errmsg_len, [&] {
    if (!fit || !out_csv_path) fail(ErrorCode::invalid_argument, "stfm_predict: null argument");
    json t = parse_json_text(target_json, "stfm_predict");
    PredictionTarget target;
    int block = t.value("block", 1);
    if (block < 1) fail(ErrorCode::invalid_argument, "stfm_predict: target.block is 1-based");
    target.block = block - 1;
    target.lat = t.at("lat").get<double>();
    target.lon = t.at("lon").get<double>();
    target.times = t.contains("times") ? t.at("times").get<std::vector<double>>()
                                       : fit->res.dataset.times;
    target.mode = t.value("mode", "new_rep_existing_block") == "new_location"
                      ? PredictMode::new_location
                      : PredictMode::new_rep_existing_block;
    RngStream rng(seed, 0);
    PredictiveDraws pred = posterior_predictive(fit->res.chains, fit->res.design, target, level,
                                                rng);
    write_prediction_csv(target.times, pred, out_csv_path, fit->res.config_digest);
  });
}

void stfm_fit_result_free(stfm_fit_result* fit) { delete fit; }

}  // extern "C"
