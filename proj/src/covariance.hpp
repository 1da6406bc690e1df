#pragma once

#include <span>
#include <utility>

#include "linalg.hpp"

namespace stfm {

struct MaternParams {
  double kappa = 0.5;  // smoothness, fixed per fit
  double phi = 1.0;    // spatial range
};

struct TemporalParams {
  double varphi = 1.0;  // temporal decay rate
};

enum class DistanceMetric { euclidean_degrees, haversine_km };

// Modified Bessel function of the second kind K_kappa(x), x > 0.
double bessel_k(double kappa, double x);

// Matern correlation {2^{k-1} Gamma(k)}^{-1} (d/phi)^k K_k(d/phi); 1 at d = 0.
double matern_corr(double d, const MaternParams& p);

// exp(-dt / varphi); 1 at dt = 0.
double temporal_corr(double dt, const TemporalParams& p);

double pair_distance(double lat1, double lon1, double lat2, double lon2,
                     DistanceMetric metric = DistanceMetric::euclidean_degrees);

// Separable error covariance omega^2 * (S ⊗ T) held in factored form. S and T
// are unit-diagonal correlation matrices with cached Cholesky factors; the
// Kronecker product is never materialized for solves (dense() is restricted to
// small instances).
class KroneckerCov {
 public:
  KroneckerCov(Matrix s, Matrix t, double omega2);

  int n() const { return static_cast<int>(s_.rows()); }
  int tau() const { return static_cast<int>(t_.rows()); }
  double omega2() const { return omega2_; }
  const Matrix& s() const { return s_; }
  const Matrix& t() const { return t_; }
  const Matrix& chol_s() const { return chol_s_; }  // lower
  const Matrix& chol_t() const { return chol_t_; }

  // Full-covariance operations (include omega^2).
  Vector solve(const Vector& v) const;
  double logdet() const;

  // Kernel-only operations on S ⊗ T.
  Vector kernel_solve(const Vector& v) const;
  double kernel_quad(const Vector& v) const;  // v^T (S⊗T)^{-1} v
  double kernel_logdet() const;

  // omega^2 * (S ⊗ T), materialized; refused above the threshold.
  Matrix dense(long max_rows = 4096) const;

 private:
  Matrix s_, t_;
  Matrix chol_s_, chol_t_;
  double omega2_;
  double logdet_s_ = 0.0, logdet_t_ = 0.0;
};

// Cholesky with an escalating diagonal jitter ladder (1e-10..1e-6 of the mean
// diagonal); throws a numeric error with condition diagnostics past the ladder.
Matrix robust_cholesky(const Matrix& a, const char* what);

Matrix matern_corr_matrix(std::span<const double> lats, std::span<const double> lons,
                          const MaternParams& p,
                          DistanceMetric metric = DistanceMetric::euclidean_degrees);
Matrix temporal_corr_matrix(std::span<const double> times, const TemporalParams& p);

KroneckerCov build_error_cov(std::span<const double> lats, std::span<const double> lons,
                             std::span<const double> times, double omega2,
                             const MaternParams& mp, const TemporalParams& tp,
                             DistanceMetric metric = DistanceMetric::euclidean_degrees);

}  // namespace stfm
