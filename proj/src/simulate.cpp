#include "simulate.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "diagnostics.hpp"
#include "errors.hpp"
#include "util.hpp"

namespace stfm {

namespace {
// Stream-id layout: each replicate owns a 2^20 block; generation, chains and
// prediction noise get fixed offsets inside it.
constexpr std::uint64_t kStreamsPerReplicate = 1 << 20;
constexpr std::uint64_t kGenStream = 0;
constexpr std::uint64_t kChainStream = 16;
constexpr std::uint64_t kPredictStream = 8;
constexpr std::uint64_t kNestedStream = 4096;
}  // namespace

void SimConfig::validate() const {
  if (n < 2 || tau < 1) fail(ErrorCode::config, "sim: need n >= 2 and tau >= 1");
  if (block_reps.empty()) fail(ErrorCode::config, "sim: no blocks");
  for (int j : block_reps)
    if (j <= 0) fail(ErrorCode::config, "sim: nonpositive repetition count");
  if (sigma2_theta.size() != block_reps.size() || sigma2_vartheta.size() != block_reps.size())
    fail(ErrorCode::config, "sim: variance lists must have one entry per block");
  for (double v : sigma2_theta)
    if (!(v > 0.0)) fail(ErrorCode::config, "sim: sigma2_theta must be positive");
  for (double v : sigma2_vartheta)
    if (!(v > 0.0)) fail(ErrorCode::config, "sim: sigma2_vartheta must be positive");
  if (!(omega2 > 0.0) || !(phi > 0.0) || !(varphi > 0.0) || !(kappa > 0.0))
    fail(ErrorCode::config, "sim: variance and range parameters must be positive");
  if (!(lat_max > lat_min) || !(lon_max > lon_min))
    fail(ErrorCode::config, "sim: degenerate coordinate rectangle");
  if (k_mu < 4 || k_zeta < 4 || k_gamma < 4)
    fail(ErrorCode::config, "sim: basis counts must be >= 4");
}

std::vector<double> SimConfig::time_grid() const {
  if (!times.empty()) return times;
  std::vector<double> t(tau);
  for (int s = 0; s < tau; ++s) t[s] = s + 1.0;
  return t;
}

std::pair<Dataset, ParamState> generate_dataset(const SimConfig& cfg, RngStream& rng) {
  cfg.validate();
  const int blocks = static_cast<int>(cfg.block_reps.size());

  Dataset ds;
  ds.block_reps = cfg.block_reps;
  ds.times = cfg.time_grid();
  ds.stations.resize(cfg.n);
  const bool explicit_coords = !cfg.lats.empty();
  if (explicit_coords &&
      (cfg.lats.size() != static_cast<std::size_t>(cfg.n) || cfg.lons.size() != cfg.lats.size()))
    fail(ErrorCode::config, "sim: explicit coordinate lists must have length n");
  for (int r = 0; r < cfg.n; ++r) {
    char id[16];
    std::snprintf(id, sizeof id, "st%03d", r + 1);
    if (explicit_coords)
      ds.stations[r] = {id, cfg.lats[r], cfg.lons[r]};
    else
      ds.stations[r] = {id, cfg.lat_min + rng.uniform() * (cfg.lat_max - cfg.lat_min),
                        cfg.lon_min + rng.uniform() * (cfg.lon_max - cfg.lon_min)};
  }

  DesignSet d = build_design(ds.lats(), ds.lons(), ds.times, ds.block_reps, cfg.k_mu, cfg.k_zeta,
                             cfg.k_gamma, cfg.domain_margin);

  ParamState truth = zero_state(d, cfg.kappa);
  truth.omega2 = cfg.omega2;
  truth.phi = cfg.phi;
  truth.varphi = cfg.varphi;
  for (int i = 0; i < blocks; ++i) {
    truth.sigma2_theta[i] = cfg.sigma2_theta[i];
    truth.sigma2_vartheta[i] = cfg.sigma2_vartheta[i];
  }
  for (long k = 0; k < truth.beta.size(); ++k) truth.beta[k] = cfg.beta_scale * rng.normal();
  for (int i = 0; i < blocks; ++i) {
    for (long k = 0; k < truth.theta[i].size(); ++k)
      truth.theta[i][k] = std::sqrt(cfg.sigma2_theta[i]) * rng.normal();
    for (long k = 0; k < truth.vartheta[i].size(); ++k)
      truth.vartheta[i][k] = std::sqrt(cfg.sigma2_vartheta[i]) * rng.normal();
  }

  ds.metric = cfg.metric;
  KroneckerCov cov = build_error_cov(ds.lats(), ds.lons(), ds.times, cfg.omega2,
                                     {cfg.kappa, cfg.phi}, {cfg.varphi}, cfg.metric);
  const long m = static_cast<long>(cfg.n) * cfg.tau;
  ds.y.resize(static_cast<long>(ds.total_reps()) * m);
  const double omega = std::sqrt(cfg.omega2);
  long off = 0;
  for (int i = 0; i < blocks; ++i) {
    Vector mean_i = block_mean(d, truth, i);
    for (int j = 0; j < cfg.block_reps[i]; ++j, off += m) {
      // vec(L_t Z L_s^T) has kernel covariance S ⊗ T in the row layout
      Matrix z(cfg.tau, cfg.n);
      for (long k = 0; k < z.size(); ++k) z.data()[k] = rng.normal();
      Matrix e = cov.chol_t().triangularView<Eigen::Lower>() * z *
                 cov.chol_s().triangularView<Eigen::Lower>().transpose();
      ds.y.segment(off, m) = mean_i + omega * Eigen::Map<const Vector>(e.data(), m);
    }
  }
  ds.validate();
  return {std::move(ds), std::move(truth)};
}

namespace {

std::vector<std::string> tracked_names(int blocks) {
  std::vector<std::string> names;
  names.push_back("omega2");
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_theta_" + std::to_string(i + 1));
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_vartheta_" + std::to_string(i + 1));
  names.push_back("phi");
  names.push_back("varphi");
  return names;
}

double tracked_truth(const ParamState& truth, int blocks, int idx) {
  if (idx == 0) return truth.omega2;
  if (idx <= blocks) return truth.sigma2_theta[idx - 1];
  if (idx <= 2 * blocks) return truth.sigma2_vartheta[idx - blocks - 1];
  return idx == 2 * blocks + 1 ? truth.phi : truth.varphi;
}

double tracked_value(const ParamState& st, int blocks, int idx) {
  if (idx == 0) return st.omega2;
  if (idx <= blocks) return st.sigma2_theta[idx - 1];
  if (idx <= 2 * blocks) return st.sigma2_vartheta[idx - blocks - 1];
  return idx == 2 * blocks + 1 ? st.phi : st.varphi;
}

Matrix tracked_matrix(const ChainSamples& chain, int blocks) {
  const int p = 2 * blocks + 3;
  Matrix out(static_cast<long>(chain.draws.size()), p);
  for (std::size_t t = 0; t < chain.draws.size(); ++t)
    for (int k = 0; k < p; ++k) out(static_cast<long>(t), k) = tracked_value(chain.draws[t], blocks, k);
  return out;
}

}  // namespace

std::vector<ReplicateResult> replicate_recovery(const SimConfig& sim, const PriorConfig& priors,
                                                const McmcConfig& mcmc, int replicates,
                                                std::uint64_t seed, int threads) {
  sim.validate();
  std::vector<ReplicateResult> results(replicates);
  const int blocks = static_cast<int>(sim.block_reps.size());
  parallel_for(replicates, threads, [&](int r) {
    ReplicateResult& res = results[r];
    res.replicate = r;
    try {
      std::uint64_t base = static_cast<std::uint64_t>(r) * kStreamsPerReplicate;
      RngStream gen(seed, base + kGenStream);
      auto [ds, truth] = generate_dataset(sim, gen);
      DesignSet d = build_design(ds.lats(), ds.lons(), ds.times, ds.block_reps, sim.k_mu,
                                 sim.k_zeta, sim.k_gamma, sim.domain_margin);
      auto chains = run_chains(ds, d, priors, mcmc, sim.kappa, seed, base + kChainStream, 1);

      std::vector<Matrix> mats;
      for (const auto& c : chains) mats.push_back(tracked_matrix(c, blocks));
      auto names = tracked_names(blocks);
      auto summary = summarize(names, mats);
      for (std::size_t k = 0; k < names.size(); ++k) {
        ScalarRecovery sr;
        sr.param = names[k];
        sr.truth = tracked_truth(truth, blocks, static_cast<int>(k));
        sr.median = summary[k].median;
        sr.lo = summary[k].q025;
        sr.hi = summary[k].q975;
        sr.covered = (sr.truth >= sr.lo && sr.truth <= sr.hi);
        res.params.push_back(sr);
        if (chains.size() >= 2 && std::isfinite(summary[k].rhat) && summary[k].rhat > 1.2)
          res.converged = false;
      }
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
    }
  });
  return results;
}

namespace {

void aggregate_setting(RecoveryStudyReport& report, const std::string& setting,
                       const std::vector<ReplicateResult>& results) {
  for (const auto& r : results) report.replicates.emplace_back(setting, r);
  if (results.empty()) return;
  std::size_t n_params = 0;
  for (const auto& r : results)
    if (!r.failed) n_params = r.params.size();
  for (std::size_t k = 0; k < n_params; ++k) {
    CoverageRow row;
    row.setting = setting;
    std::vector<double> medians;
    int covered = 0, used = 0, converged = 0;
    for (const auto& r : results) {
      if (r.failed) continue;
      row.param = r.params[k].param;
      row.truth = r.params[k].truth;
      medians.push_back(r.params[k].median);
      covered += r.params[k].covered ? 1 : 0;
      converged += r.converged ? 1 : 0;
      ++used;
    }
    if (used == 0) continue;
    row.coverage = static_cast<double>(covered) / used;
    row.n_used = used;
    row.median_iqr = quantile(medians, 0.75) - quantile(medians, 0.25);
    row.converged = converged * 2 >= used;
    report.aggregate.push_back(row);
  }
}

}  // namespace

RecoveryStudyReport run_prior_sensitivity(const SimConfig& sim,
                                          const std::vector<NamedPrior>& prior_grid,
                                          const McmcConfig& mcmc, int replicates,
                                          std::uint64_t seed, int threads) {
  if (prior_grid.empty()) fail(ErrorCode::config, "prior sensitivity: empty prior grid");
  RecoveryStudyReport report;
  for (const auto& np : prior_grid) {
    auto results = replicate_recovery(sim, np.priors, mcmc, replicates, seed, threads);
    aggregate_setting(report, np.label, results);
  }
  return report;
}

RecoveryStudyReport run_size_sensitivity(const SimConfig& sim, const std::vector<int>& n_grid,
                                         const std::vector<int>& tau_grid,
                                         const std::vector<std::vector<int>>& j_grid,
                                         const PriorConfig& priors, const McmcConfig& mcmc,
                                         int replicates, std::uint64_t seed, int threads) {
  RecoveryStudyReport report;
  auto run_cell = [&](const std::string& label, const SimConfig& cell_sim) {
    auto results = replicate_recovery(cell_sim, priors, mcmc, replicates, seed, threads);
    aggregate_setting(report, label, results);
  };
  for (int n : n_grid.empty() ? std::vector<int>{sim.n} : n_grid)
    for (int tau : tau_grid.empty() ? std::vector<int>{sim.tau} : tau_grid) {
      SimConfig cell = sim;
      cell.n = n;
      cell.tau = tau;
      cell.times.clear();
      run_cell("n=" + std::to_string(n) + ",tau=" + std::to_string(tau), cell);
    }
  for (const auto& reps : j_grid) {
    SimConfig cell = sim;
    if (reps.size() != sim.block_reps.size())
      fail(ErrorCode::config, "size sensitivity: J grid entry has wrong block count");
    cell.block_reps = reps;
    std::string label = "J=(";
    for (std::size_t i = 0; i < reps.size(); ++i)
      label += std::to_string(reps[i]) + (i + 1 < reps.size() ? "," : ")");
    run_cell(label, cell);
  }
  return report;
}

KappaRecoveryReport run_kappa_recovery(const SimConfig& sim, const std::vector<double>& kappa_grid,
                                       const PriorConfig& priors, const McmcConfig& mcmc,
                                       int replicates, std::uint64_t seed, int threads) {
  if (kappa_grid.empty()) fail(ErrorCode::config, "kappa recovery: empty grid");
  KappaRecoveryReport report;
  const int total = static_cast<int>(kappa_grid.size()) * replicates;
  std::vector<KappaRecoveryRow> rows(total);
  parallel_for(total, threads, [&](int idx) {
    const int ki = idx / replicates, r = idx % replicates;
    KappaRecoveryRow& row = rows[idx];
    row.true_kappa = kappa_grid[ki];
    row.replicate = r;
    try {
      std::uint64_t base = static_cast<std::uint64_t>(idx) * kStreamsPerReplicate;
      SimConfig cell = sim;
      cell.kappa = kappa_grid[ki];
      RngStream gen(seed, base + kGenStream);
      auto [ds, truth] = generate_dataset(cell, gen);

      GridSelectConfig gcfg;
      gcfg.kappa_grid = kappa_grid;
      gcfg.basis_grid = {{sim.k_mu, sim.k_zeta, sim.k_gamma}};
      gcfg.priors = priors;
      gcfg.mcmc = mcmc;
      gcfg.domain_margin = sim.domain_margin;
      gcfg.seed = seed;
      gcfg.base_stream = base + kNestedStream;
      gcfg.threads = 1;
      auto sel = grid_select(ds, gcfg);
      if (!sel.best_lpml || !sel.best_dic7)
        fail(ErrorCode::numeric, "kappa recovery: all grid cells failed");
      row.chosen_lpml = sel.best_lpml->kappa;
      row.chosen_dic7 = sel.best_dic7->kappa;
      row.correct_lpml = (row.chosen_lpml == row.true_kappa);
      row.correct_dic7 = (row.chosen_dic7 == row.true_kappa);
    } catch (const std::exception&) {
      row.failed = true;
    }
  });
  report.rows = rows;
  for (std::size_t ki = 0; ki < kappa_grid.size(); ++ki) {
    KappaRecoveryReport::Accuracy acc;
    acc.true_kappa = kappa_grid[ki];
    int used = 0, ok_l = 0, ok_d = 0;
    for (int r = 0; r < replicates; ++r) {
      const auto& row = rows[ki * replicates + r];
      if (row.failed) continue;
      ++used;
      ok_l += row.correct_lpml ? 1 : 0;
      ok_d += row.correct_dic7 ? 1 : 0;
    }
    acc.n_used = used;
    acc.acc_lpml = used > 0 ? static_cast<double>(ok_l) / used : 0.0;
    acc.acc_dic7 = used > 0 ? static_cast<double>(ok_d) / used : 0.0;
    report.accuracy.push_back(acc);
  }
  return report;
}

HoldoutSplit split_holdout(const Dataset& full, int holdout_location) {
  if (holdout_location < 0 || holdout_location >= full.n())
    fail(ErrorCode::invalid_argument, "split_holdout: location index out of range");
  for (int j : full.block_reps)
    if (j < 2) fail(ErrorCode::config, "split_holdout: every block needs at least 2 repetitions");

  HoldoutSplit out;
  out.holdout_location = holdout_location;
  Dataset& tr = out.train;
  tr.metric = full.metric;
  tr.times = full.times;
  tr.block_reps.resize(full.blocks());
  for (int i = 0; i < full.blocks(); ++i) tr.block_reps[i] = full.block_reps[i] - 1;
  for (int r = 0; r < full.n(); ++r)
    if (r != holdout_location) tr.stations.push_back(full.stations[r]);

  const int tau = full.tau();
  tr.y.resize(static_cast<long>(tr.total_reps()) * tr.rows_per_rep());
  long pos = 0;
  for (int i = 0; i < full.blocks(); ++i) {
    for (int j = 0; j + 1 < full.block_reps[i]; ++j) {
      long off = full.rep_offset(i, j);
      for (int r = 0; r < full.n(); ++r) {
        if (r == holdout_location) continue;
        tr.y.segment(pos, tau) = full.y.segment(off + static_cast<long>(r) * tau, tau);
        pos += tau;
      }
    }
    long last = full.rep_offset(i, full.block_reps[i] - 1);
    out.holdout_values.push_back(
        full.y.segment(last + static_cast<long>(holdout_location) * tau, tau));
  }
  tr.validate();
  return out;
}

PredictionStudyReport run_prediction_study(const SimConfig& sim, const PriorConfig& priors,
                                           const McmcConfig& mcmc, int replicates,
                                           std::uint64_t seed, int threads, double level) {
  sim.validate();
  PredictionStudyReport report;
  std::vector<std::vector<PredictionStudyRow>> all_rows(replicates);
  std::vector<int> failed(replicates, 0);
  parallel_for(replicates, threads, [&](int r) {
    try {
      std::uint64_t base = static_cast<std::uint64_t>(r) * kStreamsPerReplicate;
      RngStream gen(seed, base + kGenStream);
      auto [full, truth] = generate_dataset(sim, gen);
      int holdout = static_cast<int>(gen.uniform() * full.n()) % full.n();
      auto split = split_holdout(full, holdout);

      DesignSet d = build_design(split.train.lats(), split.train.lons(), split.train.times,
                                 split.train.block_reps, sim.k_mu, sim.k_zeta, sim.k_gamma,
                                 sim.domain_margin);
      auto chains =
          run_chains(split.train, d, priors, mcmc, sim.kappa, seed, base + kChainStream, 1);

      RngStream noise(seed, base + kPredictStream);
      const Station& st = full.stations[holdout];
      for (int i = 0; i < full.blocks(); ++i) {
        PredictionTarget target{i, st.lat, st.lon, full.times,
                                PredictMode::new_rep_existing_block};
        auto pred = posterior_predictive(chains, d, target, level, noise);
        for (int s = 0; s < full.tau(); ++s) {
          PredictionStudyRow row;
          row.replicate = r;
          row.block = i;
          row.time = full.times[s];
          row.truth = split.holdout_values[i][s];
          row.mean = pred.mean[s];
          row.lo = pred.interval[s].first;
          row.hi = pred.interval[s].second;
          row.covered = (row.truth >= row.lo && row.truth <= row.hi);
          all_rows[r].push_back(row);
        }
      }
    } catch (const std::exception&) {
      failed[r] = 1;
    }
  });

  const int blocks = static_cast<int>(sim.block_reps.size());
  std::vector<long> block_hits(blocks, 0), block_total(blocks, 0);
  long hits = 0, total = 0;
  for (int r = 0; r < replicates; ++r) {
    report.n_failed += failed[r];
    for (const auto& row : all_rows[r]) {
      report.rows.push_back(row);
      ++total;
      ++block_total[row.block];
      if (row.covered) {
        ++hits;
        ++block_hits[row.block];
      }
    }
  }
  report.overall_coverage = total > 0 ? static_cast<double>(hits) / total : 0.0;
  for (int i = 0; i < blocks; ++i)
    report.per_block_coverage.push_back(
        block_total[i] > 0 ? static_cast<double>(block_hits[i]) / block_total[i] : 0.0);
  return report;
}

}  // namespace stfm
