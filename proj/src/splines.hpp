#pragma once

#include <span>
#include <vector>

#include "linalg.hpp"

namespace stfm {

// Clamped cubic B-spline knot vector: 4-fold boundary knots, K-4 equally
// spaced interior knots, K+4 knots total.
struct KnotVector {
  double domain_min = 0.0;
  double domain_max = 1.0;
  int num_bases = 4;  // K
  std::vector<double> knots;
};

KnotVector make_knots(double domain_min, double domain_max, int num_bases);

// Basis values at one point: length-K row, at most 4 nonzeros, sums to 1.
Vector eval_basis_row(const KnotVector& kv, double x);

// rows x K matrix of basis values over a point sequence.
Matrix eval_basis(const KnotVector& kv, std::span<const double> points);

// Mean design M, (n*tau) x K^3. Row (r, s) with time fastest (row = r*tau + s)
// is B_lat[r,.] ⊗ B_lon[r,.] ⊗ B_time[s,.].
Matrix build_mean_design(std::span<const double> lats, std::span<const double> lons,
                         std::span<const double> times, int k_mu);

// Spatial design P, (n*tau) x K^2; the spatial tensor row of each location is
// repeated for all tau times.
Matrix build_spatial_design(std::span<const double> lats, std::span<const double> lons,
                            std::span<const double> times, int k_zeta);

// Temporal design N, (n*tau) x K; the tau x K time block repeated n times.
Matrix build_temporal_design(int n, std::span<const double> times, int k_gamma);

struct Assembled {
  Matrix x;  // vertical stack of 1_{J_i} ⊗ M
  Matrix q;  // block-diagonal of 1_{J_i} ⊗ P
  Matrix r;  // block-diagonal of 1_{J_i} ⊗ N
};

Assembled assemble_full(const Matrix& m, const Matrix& p, const Matrix& n,
                        std::span<const int> block_reps);

// Factorized design set shared by the sampler, prediction and likelihood code.
//
// Row-ordering contract: within one repeated measure, rows are indexed
// (location r, time s) with time fastest (row = r*tau + s); repeated measures
// are stacked in (block, rep) order. Under that ordering,
//   M = space_mu ⊗ time_mu,   P = space_zeta ⊗ 1_{tau x 1},   N = 1_{n x 1} ⊗ time_gamma,
// with space_* the row-wise tensor products over (lat, lon).
struct DesignSet {
  KnotVector kv_lat_mu, kv_lon_mu, kv_time_mu;
  KnotVector kv_lat_zeta, kv_lon_zeta;
  KnotVector kv_time_gamma;

  Matrix space_mu;    // n x K_mu^2
  Matrix time_mu;     // tau x K_mu
  Matrix space_zeta;  // n x K_zeta^2
  Matrix time_gamma;  // tau x K_gamma

  int n = 0, tau = 0;
  int k_mu = 0, k_zeta = 0, k_gamma = 0;
  std::vector<int> block_reps;

  long rows_per_rep() const { return static_cast<long>(n) * tau; }
  int blocks() const { return static_cast<int>(block_reps.size()); }
  int total_reps() const;
  long beta_dim() const { return static_cast<long>(k_mu) * k_mu * k_mu; }
  long theta_dim() const { return static_cast<long>(k_zeta) * k_zeta; }
  long vartheta_dim() const { return k_gamma; }

  // Materialized per-rep designs (small instances, tests, dense path).
  Matrix m() const;
  Matrix p() const;
  Matrix nmat() const;

  // Mean-surface contributions without materializing M/P/N.
  Vector mean_mu(const Vector& beta) const;            // length n*tau
  Vector zeta_at_locations(const Vector& theta) const; // length n
  Vector gamma_at_times(const Vector& vartheta) const; // length tau
};

DesignSet build_design(std::span<const double> lats, std::span<const double> lons,
                       std::span<const double> times, std::span<const int> block_reps,
                       int k_mu, int k_zeta, int k_gamma, double domain_margin = 0.0);

}  // namespace stfm
