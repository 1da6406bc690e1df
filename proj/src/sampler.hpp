#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace stfm {

enum class CovPath { kronecker, dense };
enum class RangeParam { phi, varphi };

struct McmcConfig {
  long n_iter = 150000;
  long burn_in = 120000;
  int thin = 100;
  int n_chains = 2;
  double mh_step_phi = 0.5;     // log-scale proposal SD
  double mh_step_varphi = 0.5;
  bool adapt = true;            // Robbins-Monro toward 0.35 during burn-in
  CovPath path = CovPath::kronecker;
  std::vector<ParamState> init;  // explicit per-chain starts; cycled if shorter
  // Divergence normally throws; workflows set this to keep partial draws and
  // mark the chain failed instead.
  bool keep_partial_on_divergence = false;

  void validate() const;
};

// Table-10 style dispersed start for chain index c (even/odd pattern).
ParamState default_init(const DesignSet& d, double kappa, int chain_index);

struct ChainSamples {
  std::vector<ParamState> draws;  // post burn-in, thinned
  std::vector<double> logliks;    // conditional loglik per stored draw
  bool failed = false;            // divergence with keep_partial_on_divergence
  std::string fail_error;
  double accept_phi = 0.0;        // post burn-in acceptance rates
  double accept_varphi = 0.0;
  double step_phi = 0.0, step_varphi = 0.0;  // final proposal SDs
  long n_iter = 0, burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0, stream = 0;
  double kappa = 0.5;
  int k_mu = 0, k_zeta = 0, k_gamma = 0, blocks = 0;
  std::string dataset_digest, config_digest;
};

// Gibbs sampler with Metropolis-Hastings range updates. All conditionals are
// derived from the conjugate forms with the omega^2-free correlation kernel;
// the Kronecker path exploits M = space ⊗ time (and the P/N analogues), the
// dense path realizes every kernel operation through a Cholesky of S ⊗ T.
class FitEngine {
 public:
  FitEngine(const Dataset& ds, const DesignSet& d, const PriorConfig& priors,
            CovPath path = CovPath::kronecker);
  ~FitEngine();
  FitEngine(const FitEngine&) = delete;
  FitEngine& operator=(const FitEngine&) = delete;

  // Rebuilds the covariance context iff the state's (kappa, phi, varphi)
  // changed; every update syncs internally, so direct calls are safe.
  void sync_cov(const ParamState& st);

  Vector update_beta(ParamState& st, RngStream& rng);
  Vector update_theta_block(ParamState& st, int block, RngStream& rng);
  Vector update_vartheta_block(ParamState& st, int block, RngStream& rng);
  double update_sigma2_theta(ParamState& st, int block, RngStream& rng);
  double update_sigma2_vartheta(ParamState& st, int block, RngStream& rng);
  double update_omega2(ParamState& st, RngStream& rng);

  // Log-scale Gaussian random walk on phi or varphi. Returns the (possibly
  // unchanged) value and whether the proposal was accepted; alpha_out gets the
  // acceptance probability, io_loglik carries the conditional log-likelihood
  // across consecutive MH steps when nothing else moved.
  std::pair<double, bool> mh_update_range(ParamState& st, RangeParam which, double step,
                                          RngStream& rng, double* alpha_out = nullptr,
                                          double* io_loglik = nullptr);

  // Conditional log-likelihood using the engine's covariance context.
  double loglik(const ParamState& st);

  // One full systematic scan.
  void sweep(ParamState& st, RngStream& rng, double step_phi, double step_varphi,
             double* alpha_phi, double* alpha_varphi, bool* acc_phi, bool* acc_varphi);

  const Dataset& dataset() const { return ds_; }
  const DesignSet& design() const { return d_; }

 private:
  struct Ctx;
  Ctx build_ctx(double kappa, double phi, double varphi) const;
  double loglik_with(Ctx& ctx, const ParamState& st) const;

  const Dataset& ds_;
  const DesignSet& d_;
  PriorConfig priors_;
  CovPath path_;
  Vector beta_prior_mean_;
  Matrix m_mat_, p_mat_, n_mat_;  // materialized designs (dense path only)
  std::unique_ptr<Ctx> ctx_;
};

ChainSamples run_chain(const Dataset& ds, const DesignSet& d, const PriorConfig& priors,
                       const McmcConfig& cfg, double kappa, std::uint64_t seed,
                       std::uint64_t stream, int chain_index = 0);

// All chains of cfg, stream = base_stream + chain index, at most `threads`
// running concurrently.
std::vector<ChainSamples> run_chains(const Dataset& ds, const DesignSet& d,
                                     const PriorConfig& priors, const McmcConfig& cfg,
                                     double kappa, std::uint64_t seed,
                                     std::uint64_t base_stream, int threads = 0);

}  // namespace stfm
