#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "linalg.hpp"
#include "splines.hpp"

namespace stfm {

struct Station {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

// Complete block/rep/location/time grid of responses, ordered
// (block, rep, location, time) with time fastest.
struct Dataset {
  std::vector<int> block_reps;    // J_i
  std::vector<Station> stations;  // n
  std::vector<double> times;      // tau, ascending
  Vector y;                       // (sum J_i) * n * tau
  // how station distances enter the Matern kernel; not persisted in the CSV
  DistanceMetric metric = DistanceMetric::euclidean_degrees;

  int blocks() const { return static_cast<int>(block_reps.size()); }
  int n() const { return static_cast<int>(stations.size()); }
  int tau() const { return static_cast<int>(times.size()); }
  long rows_per_rep() const { return static_cast<long>(n()) * tau(); }
  int total_reps() const;
  long rep_offset(int block, int rep) const;
  std::vector<double> lats() const;
  std::vector<double> lons() const;

  void validate() const;
};

// One point in parameter space.
struct ParamState {
  Vector beta;                   // K_mu^3
  std::vector<Vector> theta;     // I x K_zeta^2
  std::vector<Vector> vartheta;  // I x K_gamma
  Vector sigma2_theta;           // I
  Vector sigma2_vartheta;        // I
  double omega2 = 1.0;
  double phi = 1.0;
  double varphi = 1.0;
  double kappa = 0.5;  // fixed per fit, carried for bookkeeping

  bool all_finite() const;
};

ParamState zero_state(const DesignSet& d, double kappa);

enum class VariancePriorFamily { inverse_gamma, scaled_inv_chisq };

struct VariancePrior {
  VariancePriorFamily family = VariancePriorFamily::inverse_gamma;
  // (a, b) for InverseGamma, (v, s2) for ScaledInvChiSq
  double p1 = 0.01;
  double p2 = 0.01;
};

struct GammaPrior {
  double shape = 1.0;
  double scale = 1.0;  // mean = shape * scale
};

// Hyperparameters for every prior family of the full-conditional table.
struct PriorConfig {
  Vector beta_mean;        // m_beta; empty means zero vector
  double beta_var = 1e3;   // sigma^2_beta
  std::vector<VariancePrior> sigma2_theta;     // size I (or 1, broadcast)
  std::vector<VariancePrior> sigma2_vartheta;  // size I (or 1, broadcast)
  VariancePrior omega2;
  GammaPrior phi_prior{1.0, 1000.0};
  GammaPrior varphi_prior{1.0, 100.0};

  const VariancePrior& theta_prior(int block) const;
  const VariancePrior& vartheta_prior(int block) const;
  Vector beta_mean_vec(long dim) const;
  void validate(int blocks) const;
};

// Mean surface M beta + P Theta^(i) + N vartheta^(i) for one block, length n*tau.
Vector block_mean(const DesignSet& d, const ParamState& st, int block);

// y - X beta - Q Theta - R vartheta over the whole stacked response.
Vector residual(const Dataset& ds, const DesignSet& d, const ParamState& st);
// Slice for one (block, rep).
Vector residual_rep(const Dataset& ds, const DesignSet& d, const ParamState& st, int block,
                    int rep);

// Sum over (i, j) of log N(y_ij | mean_i, omega^2 S ⊗ T).
double conditional_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st);

// Same sum with a prebuilt covariance (sampler hot path).
double conditional_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st,
                          const KroneckerCov& cov);

// Per-(i,j) log-density vector, ordered like the rep stacking.
Vector per_rep_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st);

// Marginal covariance of the model between observation indices
// (block, rep, location, time); the three-term sum with indicator structure.
double marginal_cov(const DesignSet& d, const Dataset& ds, const ParamState& st,
                    std::array<int, 4> a, std::array<int, 4> b);

}  // namespace stfm
