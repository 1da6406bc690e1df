#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sampler.hpp"

namespace stfm {

// CPO unit: one predictive ordinate per repeated-measure vector (the
// likelihood factorization) or per scalar observation.
enum class CpoUnit { per_rep, per_scalar };

// Per-draw, per-(block, rep) conditional log-densities: rows = stored draws
// over all chains, columns = repeated measures in stacking order.
Matrix per_rep_loglik_matrix(const std::vector<ChainSamples>& chains, const Dataset& ds,
                             const DesignSet& d);

// Per-draw, per-observation marginal log-densities (unit error correlations
// leave each scalar with variance omega2).
Matrix per_scalar_loglik_matrix(const std::vector<ChainSamples>& chains, const Dataset& ds,
                                const DesignSet& d);

// Log pseudo-marginal likelihood: sum over units of log CPO, with CPO the
// harmonic mean of per-draw densities, evaluated in log space.
double lpml(const std::vector<ChainSamples>& chains, const Dataset& ds, const DesignSet& d,
            CpoUnit unit = CpoUnit::per_rep);

// DIC7 = -4 E_post[log f(y | xi, Theta, vartheta)] + 2 log f(y | plug-in),
// plug-in = stored draw with maximal conditional log-likelihood.
double dic7(const std::vector<ChainSamples>& chains, const Dataset& ds, const DesignSet& d);

double lpml_from_matrix(const Matrix& rep_loglik);
double dic7_from_matrix(const Matrix& rep_loglik);

struct BasisCounts {
  int k_mu = 5, k_zeta = 4, k_gamma = 5;
};

struct SelectionCell {
  double kappa = 0.0;
  BasisCounts basis;
  double lpml = 0.0, dic7 = 0.0;
  int rank_lpml = 0, rank_dic7 = 0;
  bool failed = false;
  std::string error;
};

struct SelectionReport {
  std::vector<SelectionCell> cells;  // including failed cells (unranked)
  std::optional<SelectionCell> best_lpml, best_dic7;
};

struct GridSelectConfig {
  std::vector<double> kappa_grid;
  std::vector<BasisCounts> basis_grid;
  PriorConfig priors;
  McmcConfig mcmc;          // shared (typically reduced) fit budget per cell
  double domain_margin = 0.1;
  CpoUnit cpo = CpoUnit::per_rep;
  std::uint64_t seed = 1;
  std::uint64_t base_stream = 0;  // stream offset, keeps nested runs disjoint
  int threads = 0;
};

// One independent fit per (kappa, basis) cell; cells that fail are recorded
// and excluded from the ranking.
SelectionReport grid_select(const Dataset& ds, const GridSelectConfig& cfg);

}  // namespace stfm
