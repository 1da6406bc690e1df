#include "runner.hpp"

#include <filesystem>
#include <sstream>

#include "errors.hpp"

namespace stfm {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::string& digest, const std::vector<std::string>& outputs,
                    const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config_digest"] = digest;
  m["outputs"] = outputs;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text_file(join(out_dir, "manifest.json"), m.dump(2) + "\n");
  write_text_file(join(out_dir, "config.json"), config.dump(2) + "\n");
}

json state_to_json(const ParamState& st) {
  json j;
  j["omega2"] = st.omega2;
  j["phi"] = st.phi;
  j["varphi"] = st.varphi;
  j["kappa"] = st.kappa;
  j["sigma2_theta"] = std::vector<double>(st.sigma2_theta.begin(), st.sigma2_theta.end());
  j["sigma2_vartheta"] = std::vector<double>(st.sigma2_vartheta.begin(), st.sigma2_vartheta.end());
  j["beta"] = std::vector<double>(st.beta.begin(), st.beta.end());
  json theta = json::array(), vartheta = json::array();
  for (const auto& t : st.theta) theta.push_back(std::vector<double>(t.begin(), t.end()));
  for (const auto& t : st.vartheta) vartheta.push_back(std::vector<double>(t.begin(), t.end()));
  j["theta"] = theta;
  j["vartheta"] = vartheta;
  return j;
}

}  // namespace

json convergence_report(const std::vector<ChainSamples>& chains, double threshold) {
  json out;
  out["threshold"] = threshold;
  if (chains.empty() || chains[0].draws.empty()) {
    out["converged"] = nullptr;
    out["note"] = "no stored draws";
    return out;
  }
  const int blocks = chains[0].blocks;
  auto names = chain_scalar_names(blocks);
  if (chains.size() < 2) {
    out["converged"] = nullptr;
    out["note"] = "need at least 2 chains for the Gelman-Rubin statistic";
    return out;
  }
  std::size_t min_len = chains[0].draws.size();
  for (const auto& c : chains) min_len = std::min(min_len, c.draws.size());
  if (min_len < 10) {
    out["converged"] = nullptr;
    out["note"] = "too few draws per chain";
    return out;
  }
  std::vector<Matrix> mats;
  for (const auto& c : chains) mats.push_back(chain_scalar_matrix(c).topRows(min_len));
  bool ok = true;
  json rhat;
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<std::vector<double>> per_chain;
    for (const auto& m : mats) {
      std::vector<double> col(m.rows());
      for (long t = 0; t < m.rows(); ++t) col[t] = m(t, k);
      per_chain.push_back(std::move(col));
    }
    double r = gelman_rubin(per_chain);
    rhat[names[k]] = r;
    if (!(r < threshold)) ok = false;
  }
  out["rhat"] = rhat;
  try {
    out["multivariate_psrf"] = multivariate_psrf(mats);
  } catch (const std::exception&) {
    out["multivariate_psrf"] = nullptr;
  }
  out["converged"] = ok;
  return out;
}

FitResult run_fit(const FitConfig& cfg, const std::string& config_digest) {
  FitResult res;
  res.config_digest = config_digest;
  res.dataset = read_dataset_csv(cfg.dataset_path, cfg.ingest);
  res.dataset.metric = cfg.metric;
  res.dataset_digest = dataset_digest(res.dataset);
  res.design = build_design(res.dataset.lats(), res.dataset.lons(), res.dataset.times,
                            res.dataset.block_reps, cfg.basis.k_mu, cfg.basis.k_zeta,
                            cfg.basis.k_gamma, cfg.domain_margin);
  res.chains = run_chains(res.dataset, res.design, cfg.priors, cfg.mcmc, cfg.kappa, cfg.seed, 0,
                          cfg.threads);
  for (auto& c : res.chains) {
    c.config_digest = config_digest;
    c.dataset_digest = res.dataset_digest;
    if (c.failed) res.any_failed = true;
  }
  return res;
}

namespace {

std::vector<std::string> write_fit_outputs(const FitResult& res, const std::string& out_dir) {
  std::vector<std::string> outputs;
  for (std::size_t c = 0; c < res.chains.size(); ++c) {
    std::string csv = "chain_" + std::to_string(c + 1) + ".csv";
    std::string meta = "chain_" + std::to_string(c + 1) + ".meta.json";
    write_chain(res.chains[c], join(out_dir, csv), join(out_dir, meta));
    outputs.push_back(csv);
    outputs.push_back(meta);
  }
  // summary over every stored column, pooling chains
  bool have_draws = true;
  for (const auto& c : res.chains)
    if (c.draws.empty()) have_draws = false;
  if (have_draws && !res.chains.empty()) {
    const auto& first = res.chains[0];
    const int blocks = first.blocks;
    auto names = chain_column_names(first.k_mu, first.k_zeta, first.k_gamma, blocks);
    std::size_t min_len = first.draws.size();
    for (const auto& c : res.chains) min_len = std::min(min_len, c.draws.size());
    std::vector<Matrix> mats;
    for (const auto& c : res.chains) {
      Matrix m(static_cast<long>(min_len), static_cast<long>(names.size()));
      for (std::size_t t = 0; t < min_len; ++t) {
        const ParamState& st = c.draws[t];
        long k = 0;
        for (long b = 0; b < st.beta.size(); ++b) m(t, k++) = st.beta[b];
        for (const auto& th : st.theta)
          for (long b = 0; b < th.size(); ++b) m(t, k++) = th[b];
        for (const auto& vt : st.vartheta)
          for (long b = 0; b < vt.size(); ++b) m(t, k++) = vt[b];
        for (long b = 0; b < st.sigma2_theta.size(); ++b) m(t, k++) = st.sigma2_theta[b];
        for (long b = 0; b < st.sigma2_vartheta.size(); ++b) m(t, k++) = st.sigma2_vartheta[b];
        m(t, k++) = st.omega2;
        m(t, k++) = st.phi;
        m(t, k++) = st.varphi;
      }
      mats.push_back(std::move(m));
    }
    write_summary_csv(summarize(names, mats), join(out_dir, "summary.csv"), res.config_digest);
    outputs.push_back("summary.csv");
  }
  json verdict = convergence_report(res.chains);
  verdict["config_digest"] = res.config_digest;
  write_text_file(join(out_dir, "convergence.json"), verdict.dump(2) + "\n");
  outputs.push_back("convergence.json");
  return outputs;
}

void cmd_simulate(const json& config, const std::string& out_dir, const std::string& digest) {
  SimulateConfig cfg = parse_simulate_config(config);
  RngStream rng(cfg.seed, 0);
  auto [ds, truth] = generate_dataset(cfg.sim, rng);
  write_dataset_csv(ds, join(out_dir, "dataset.csv"));
  json truth_json = state_to_json(truth);
  truth_json["config_digest"] = digest;
  write_text_file(join(out_dir, "truth.json"), truth_json.dump(2) + "\n");
  write_manifest(out_dir, "simulate", config, digest,
                 {"dataset.csv", "truth.json"},
                 {{"dataset_digest", dataset_digest(ds)}});
}

void cmd_fit(const json& config, const std::string& out_dir, const std::string& digest) {
  FitConfig cfg = parse_fit_config(config);
  cfg.mcmc.keep_partial_on_divergence = true;
  FitResult res = run_fit(cfg, digest);
  auto outputs = write_fit_outputs(res, out_dir);
  json extra;
  extra["dataset_digest"] = res.dataset_digest;
  bool have_draws = !res.any_failed;
  for (const auto& c : res.chains)
    if (c.draws.empty()) have_draws = false;
  if (have_draws) {
    Matrix rep_ll = per_rep_loglik_matrix(res.chains, res.dataset, res.design);
    extra["lpml"] = lpml_from_matrix(rep_ll);
    extra["dic7"] = dic7_from_matrix(rep_ll);
  }
  write_manifest(out_dir, "fit", config, digest, outputs, extra);
  if (res.any_failed) {
    std::string detail;
    for (const auto& c : res.chains)
      if (c.failed) detail += c.fail_error + "\n";
    write_text_file(join(out_dir, "FAILED"), detail);
    fail(ErrorCode::numeric, "fit: one or more chains diverged (partial chains preserved): " +
                                 detail);
  }
}

void cmd_select(const json& config, const std::string& out_dir, const std::string& digest) {
  SelectConfig cfg = parse_select_config(config);
  Dataset ds = read_dataset_csv(cfg.dataset_path, cfg.ingest);
  ds.metric = cfg.metric;
  SelectionReport report = grid_select(ds, cfg.grid);
  write_selection_csv(report, join(out_dir, "selection.csv"), digest);
  json extra;
  extra["dataset_digest"] = dataset_digest(ds);
  if (report.best_lpml) {
    extra["best_lpml"] = {{"kappa", report.best_lpml->kappa},
                          {"k_mu", report.best_lpml->basis.k_mu},
                          {"k_zeta", report.best_lpml->basis.k_zeta},
                          {"k_gamma", report.best_lpml->basis.k_gamma},
                          {"lpml", report.best_lpml->lpml}};
    extra["best_dic7"] = {{"kappa", report.best_dic7->kappa},
                          {"k_mu", report.best_dic7->basis.k_mu},
                          {"k_zeta", report.best_dic7->basis.k_zeta},
                          {"k_gamma", report.best_dic7->basis.k_gamma},
                          {"dic7", report.best_dic7->dic7}};
  }
  write_manifest(out_dir, "select", config, digest, {"selection.csv"}, extra);
}

void cmd_diagnose(const json& config, const std::string& out_dir, const std::string& digest) {
  if (!config.contains("chains") || !config.at("chains").is_array() ||
      config.at("chains").empty())
    fail(ErrorCode::config, "diagnose: config needs a 'chains' array of CSV paths");
  std::vector<ChainSamples> chains;
  std::string run_digest;
  for (const auto& p : config.at("chains")) {
    std::string csv = p.get<std::string>();
    std::string meta = csv;
    auto pos = meta.rfind(".csv");
    if (pos != std::string::npos) meta = meta.substr(0, pos);
    meta += ".meta.json";
    ChainSamples c = read_chain(csv, meta);
    if (run_digest.empty()) run_digest = c.config_digest;
    if (c.config_digest != run_digest)
      fail(ErrorCode::config, "diagnose: chains come from different run configurations");
    chains.push_back(std::move(c));
  }
  const auto& first = chains[0];
  if (first.draws.empty()) fail(ErrorCode::insufficient_data, "diagnose: chains have no draws");
  const int blocks = first.blocks;
  std::size_t min_len = first.draws.size();
  for (const auto& c : chains) min_len = std::min(min_len, c.draws.size());
  std::vector<Matrix> mats;
  for (const auto& c : chains) mats.push_back(chain_scalar_matrix(c).topRows(min_len));
  write_summary_csv(summarize(chain_scalar_names(blocks), mats), join(out_dir, "summary.csv"),
                    digest);
  json verdict = convergence_report(chains);
  verdict["config_digest"] = digest;
  write_text_file(join(out_dir, "convergence.json"), verdict.dump(2) + "\n");
  write_manifest(out_dir, "diagnose", config, digest, {"summary.csv", "convergence.json"});
}

void cmd_predict(const json& config, const std::string& out_dir, const std::string& digest) {
  PredictConfig cfg = parse_predict_config(config);
  json fit_config = load_json_file(join(cfg.run_dir, "config.json"));
  FitConfig fit = parse_fit_config(fit_config);
  Dataset ds = read_dataset_csv(cfg.dataset_path, cfg.ingest);
  ds.metric = fit.metric;
  std::string ds_digest = dataset_digest(ds);

  std::vector<ChainSamples> chains;
  for (int c = 1;; ++c) {
    std::string csv = join(cfg.run_dir, "chain_" + std::to_string(c) + ".csv");
    if (!fs::exists(csv)) break;
    chains.push_back(read_chain(csv, join(cfg.run_dir, "chain_" + std::to_string(c) + ".meta.json")));
  }
  if (chains.empty()) fail(ErrorCode::io, "predict: no chain CSVs under " + cfg.run_dir);
  for (const auto& c : chains)
    if (!c.dataset_digest.empty() && c.dataset_digest != ds_digest)
      fail(ErrorCode::config, "predict: dataset does not match the one the chains were fit on");

  DesignSet d = build_design(ds.lats(), ds.lons(), ds.times, ds.block_reps, fit.basis.k_mu,
                             fit.basis.k_zeta, fit.basis.k_gamma, fit.domain_margin);
  PredictionTarget target = cfg.target;
  if (target.times.empty()) target.times = ds.times;
  RngStream rng(cfg.seed, 0);
  PredictiveDraws pred = posterior_predictive(chains, d, target, cfg.level, rng);
  write_prediction_csv(target.times, pred, join(out_dir, "prediction.csv"), digest);
  write_manifest(out_dir, "predict", config, digest, {"prediction.csv"});
}

void write_recovery_study(const RecoveryStudyReport& report, const std::string& out_dir,
                          const std::string& digest, std::vector<std::string>& outputs) {
  std::ostringstream rep;
  rep << "#config_digest=" << digest << '\n';
  rep << "setting,replicate,param,truth,median,q025,q975,covered,converged,failed\n";
  for (const auto& [setting, r] : report.replicates) {
    if (r.failed) {
      rep << setting << ',' << r.replicate << ",,,,,,," << 0 << ',' << 1 << '\n';
      continue;
    }
    for (const auto& p : r.params)
      rep << setting << ',' << r.replicate << ',' << p.param << ',' << format_double(p.truth)
          << ',' << format_double(p.median) << ',' << format_double(p.lo) << ','
          << format_double(p.hi) << ',' << (p.covered ? 1 : 0) << ',' << (r.converged ? 1 : 0)
          << ',' << 0 << '\n';
  }
  write_text_file(out_dir + "/replicates.csv", rep.str());
  outputs.push_back("replicates.csv");

  std::ostringstream agg;
  agg << "#config_digest=" << digest << '\n';
  agg << "setting,param,truth,coverage,median_iqr,n_used,converged\n";
  for (const auto& row : report.aggregate)
    agg << row.setting << ',' << row.param << ',' << format_double(row.truth) << ','
        << format_double(row.coverage) << ',' << format_double(row.median_iqr) << ',' << row.n_used
        << ',' << (row.converged ? 1 : 0) << '\n';
  write_text_file(out_dir + "/coverage.csv", agg.str());
  outputs.push_back("coverage.csv");
}

std::string recovery_markdown(const std::string& title, const RecoveryStudyReport& report) {
  std::ostringstream md;
  md << "# " << title << "\n\n";
  md << "| setting | parameter | truth | coverage | median IQR | replicates |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const auto& row : report.aggregate)
    md << "| " << row.setting << " | " << row.param << " | " << format_double(row.truth) << " | "
       << format_double(row.coverage) << " | " << format_double(row.median_iqr) << " | "
       << row.n_used << (row.converged ? "" : " (convergence flagged)") << " |\n";
  return md.str();
}

void cmd_study(const json& config, const std::string& out_dir, const std::string& digest) {
  StudyConfig cfg = parse_study_config(config);
  std::vector<std::string> outputs;
  std::string md;
  switch (cfg.study) {
    case StudyName::prior_sensitivity: {
      std::vector<NamedPrior> grid = cfg.prior_grid;
      if (grid.empty()) {
        NamedPrior ig{"inverse_gamma(0.01,0.01)", cfg.priors};
        NamedPrior sc{"scaled_inv_chisq(0.01,0.01)", cfg.priors};
        for (auto& p : sc.priors.sigma2_theta) p.family = VariancePriorFamily::scaled_inv_chisq;
        for (auto& p : sc.priors.sigma2_vartheta) p.family = VariancePriorFamily::scaled_inv_chisq;
        sc.priors.omega2.family = VariancePriorFamily::scaled_inv_chisq;
        grid = {ig, sc};
      }
      auto report = run_prior_sensitivity(cfg.sim, grid, cfg.mcmc, cfg.replicates, cfg.seed,
                                          cfg.threads);
      write_recovery_study(report, out_dir, digest, outputs);
      md = recovery_markdown("Prior sensitivity study", report);
      break;
    }
    case StudyName::size_sensitivity: {
      auto report = run_size_sensitivity(cfg.sim, cfg.n_grid, cfg.tau_grid, cfg.j_grid, cfg.priors,
                                         cfg.mcmc, cfg.replicates, cfg.seed, cfg.threads);
      write_recovery_study(report, out_dir, digest, outputs);
      md = recovery_markdown("Size sensitivity study", report);
      break;
    }
    case StudyName::kappa_recovery: {
      std::vector<double> grid = cfg.kappa_grid.empty() ? std::vector<double>{0.2, 2.0}
                                                        : cfg.kappa_grid;
      auto report =
          run_kappa_recovery(cfg.sim, grid, cfg.priors, cfg.mcmc, cfg.replicates, cfg.seed,
                             cfg.threads);
      std::ostringstream rows;
      rows << "#config_digest=" << digest << '\n';
      rows << "true_kappa,replicate,chosen_lpml,chosen_dic7,correct_lpml,correct_dic7,failed\n";
      for (const auto& r : report.rows)
        rows << format_double(r.true_kappa) << ',' << r.replicate << ','
             << (r.failed ? "" : format_double(r.chosen_lpml)) << ','
             << (r.failed ? "" : format_double(r.chosen_dic7)) << ',' << (r.correct_lpml ? 1 : 0)
             << ',' << (r.correct_dic7 ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
      write_text_file(out_dir + "/selections.csv", rows.str());
      outputs.push_back("selections.csv");
      std::ostringstream acc;
      acc << "#config_digest=" << digest << '\n';
      acc << "true_kappa,accuracy_lpml,accuracy_dic7,n_used\n";
      for (const auto& a : report.accuracy)
        acc << format_double(a.true_kappa) << ',' << format_double(a.acc_lpml) << ','
            << format_double(a.acc_dic7) << ',' << a.n_used << '\n';
      write_text_file(out_dir + "/accuracy.csv", acc.str());
      outputs.push_back("accuracy.csv");
      std::ostringstream mds;
      mds << "# Kappa recovery study\n\n| true kappa | LPML accuracy | DIC7 accuracy | replicates |\n|---|---|---|---|\n";
      for (const auto& a : report.accuracy)
        mds << "| " << format_double(a.true_kappa) << " | " << format_double(a.acc_lpml) << " | "
            << format_double(a.acc_dic7) << " | " << a.n_used << " |\n";
      md = mds.str();
      break;
    }
    case StudyName::prediction: {
      auto report = run_prediction_study(cfg.sim, cfg.priors, cfg.mcmc, cfg.replicates, cfg.seed,
                                         cfg.threads, cfg.level);
      std::ostringstream rows;
      rows << "#config_digest=" << digest << '\n';
      rows << "replicate,block,time,truth,mean,lo,hi,covered\n";
      for (const auto& r : report.rows)
        rows << r.replicate << ',' << r.block + 1 << ',' << format_double(r.time) << ','
             << format_double(r.truth) << ',' << format_double(r.mean) << ','
             << format_double(r.lo) << ',' << format_double(r.hi) << ',' << (r.covered ? 1 : 0)
             << '\n';
      write_text_file(out_dir + "/predictions.csv", rows.str());
      outputs.push_back("predictions.csv");
      std::ostringstream cov;
      cov << "#config_digest=" << digest << '\n';
      cov << "block,coverage\n";
      for (std::size_t i = 0; i < report.per_block_coverage.size(); ++i)
        cov << i + 1 << ',' << format_double(report.per_block_coverage[i]) << '\n';
      cov << "overall," << format_double(report.overall_coverage) << '\n';
      write_text_file(out_dir + "/coverage.csv", cov.str());
      outputs.push_back("coverage.csv");
      std::ostringstream mds;
      mds << "# Predictive coverage study\n\nOverall " << format_double(100 * cfg.level)
          << "% interval coverage: " << format_double(report.overall_coverage) << " over "
          << report.rows.size() << " held-out points (" << report.n_failed
          << " failed replicates).\n";
      md = mds.str();
      break;
    }
  }
  write_text_file(out_dir + "/summary.md", md + "\nconfig digest: `" + digest + "`\n");
  outputs.push_back("summary.md");
  write_manifest(out_dir, "study", config, digest, outputs);
}

}  // namespace

void run_command(const std::string& command, const json& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::string digest = config_digest(config);
  if (command == "simulate")
    cmd_simulate(config, out_dir, digest);
  else if (command == "fit")
    cmd_fit(config, out_dir, digest);
  else if (command == "select")
    cmd_select(config, out_dir, digest);
  else if (command == "diagnose")
    cmd_diagnose(config, out_dir, digest);
  else if (command == "predict")
    cmd_predict(config, out_dir, digest);
  else if (command == "study")
    cmd_study(config, out_dir, digest);
  else
    fail(ErrorCode::invalid_argument, "unknown command: " + command);
}

}  // namespace stfm
