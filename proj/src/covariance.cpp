#include "covariance.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace stfm {

double bessel_k(double kappa, double x) {
  if (!(x > 0.0)) fail(ErrorCode::domain, "bessel_k: x must be positive");
  return std::cyl_bessel_k(std::abs(kappa), x);  // K_{-v} = K_v
}

double matern_corr(double d, const MaternParams& p) {
  if (!(p.kappa > 0.0) || !(p.phi > 0.0))
    fail(ErrorCode::invalid_argument, "matern_corr: kappa and phi must be positive");
  if (d < 0.0) fail(ErrorCode::domain, "matern_corr: negative distance");
  double x = d / p.phi;
  if (x < 1e-12) return 1.0;  // limit at zero distance
  if (x > 500.0) return 0.0;  // K_k(x) underflows; avoids inf * 0
  double v = std::pow(x, p.kappa) * bessel_k(p.kappa, x) /
             (std::pow(2.0, p.kappa - 1.0) * std::tgamma(p.kappa));
  return std::min(v, 1.0);
}

double temporal_corr(double dt, const TemporalParams& p) {
  if (!(p.varphi > 0.0)) fail(ErrorCode::invalid_argument, "temporal_corr: varphi must be positive");
  if (dt < 0.0) fail(ErrorCode::domain, "temporal_corr: negative time lag");
  return std::exp(-dt / p.varphi);
}

double pair_distance(double lat1, double lon1, double lat2, double lon2, DistanceMetric metric) {
  if (metric == DistanceMetric::euclidean_degrees)
    return std::hypot(lat1 - lat2, lon1 - lon2);
  // haversine, kilometers
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDeg = M_PI / 180.0;
  double dlat = (lat2 - lat1) * kDeg, dlon = (lon2 - lon1) * kDeg;
  double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Matrix robust_cholesky(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  double mean_diag = a.diagonal().mean();
  for (double jitter = 1e-10; jitter <= 1e-6 + 1e-18; jitter *= 10.0) {
    Matrix aj = a;
    aj.diagonal().array() += jitter * mean_diag;
    llt.compute(aj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  std::ostringstream msg;
  msg << what << ": matrix not positive definite after jitter ladder (dim " << a.rows()
      << ", diag range [" << a.diagonal().minCoeff() << ", " << a.diagonal().maxCoeff() << "])";
  fail(ErrorCode::numeric, msg.str());
}

KroneckerCov::KroneckerCov(Matrix s, Matrix t, double omega2)
    : s_(std::move(s)), t_(std::move(t)), omega2_(omega2) {
  if (!(omega2_ > 0.0)) fail(ErrorCode::invalid_argument, "KroneckerCov: omega2 must be positive");
  if (s_.rows() != s_.cols() || t_.rows() != t_.cols())
    fail(ErrorCode::invalid_argument, "KroneckerCov: S and T must be square");
  chol_s_ = robust_cholesky(s_, "spatial correlation");
  chol_t_ = robust_cholesky(t_, "temporal correlation");
  logdet_s_ = 2.0 * chol_s_.diagonal().array().log().sum();
  logdet_t_ = 2.0 * chol_t_.diagonal().array().log().sum();
}

// Layout: v[r*tau + s] maps to V(s, r) with V tau x n column-major, and
// (S ⊗ T)^{-1} v = vec(T^{-1} V S^{-1}).
Vector KroneckerCov::kernel_solve(const Vector& v) const {
  const int nn = n(), tt = tau();
  if (v.size() != static_cast<long>(nn) * tt)
    fail(ErrorCode::invalid_argument, "kron_solve: length mismatch");
  Eigen::Map<const Matrix> vm(v.data(), tt, nn);
  Matrix a = vm;
  chol_t_.triangularView<Eigen::Lower>().solveInPlace(a);
  chol_t_.transpose().triangularView<Eigen::Upper>().solveInPlace(a);
  Matrix b = a.transpose();  // n x tau
  chol_s_.triangularView<Eigen::Lower>().solveInPlace(b);
  chol_s_.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
  Matrix out = b.transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

double KroneckerCov::kernel_quad(const Vector& v) const {
  const int nn = n(), tt = tau();
  if (v.size() != static_cast<long>(nn) * tt)
    fail(ErrorCode::invalid_argument, "kron_quad: length mismatch");
  // || (L_s ⊗ L_t)^{-1} v ||^2
  Eigen::Map<const Matrix> vm(v.data(), tt, nn);
  Matrix a = vm;
  chol_t_.triangularView<Eigen::Lower>().solveInPlace(a);
  Matrix b = a.transpose();
  chol_s_.triangularView<Eigen::Lower>().solveInPlace(b);
  return b.squaredNorm();
}

double KroneckerCov::kernel_logdet() const {
  return tau() * logdet_s_ + n() * logdet_t_;
}

Vector KroneckerCov::solve(const Vector& v) const { return kernel_solve(v) / omega2_; }

double KroneckerCov::logdet() const {
  return static_cast<double>(n()) * tau() * std::log(omega2_) + kernel_logdet();
}

Matrix KroneckerCov::dense(long max_rows) const {
  long dim = static_cast<long>(n()) * tau();
  if (dim > max_rows)
    fail(ErrorCode::invalid_argument, "KroneckerCov::dense: instance above materialization threshold");
  return omega2_ * kron(s_, t_);
}

Matrix matern_corr_matrix(std::span<const double> lats, std::span<const double> lons,
                          const MaternParams& p, DistanceMetric metric) {
  const int n = static_cast<int>(lats.size());
  Matrix s(n, n);
  for (int r = 0; r < n; ++r) {
    s(r, r) = 1.0;
    for (int q = r + 1; q < n; ++q) {
      double d = pair_distance(lats[r], lons[r], lats[q], lons[q], metric);
      s(r, q) = s(q, r) = matern_corr(d, p);
    }
  }
  return s;
}

Matrix temporal_corr_matrix(std::span<const double> times, const TemporalParams& p) {
  const int tau = static_cast<int>(times.size());
  Matrix t(tau, tau);
  for (int a = 0; a < tau; ++a) {
    t(a, a) = 1.0;
    for (int b = a + 1; b < tau; ++b)
      t(a, b) = t(b, a) = temporal_corr(std::abs(times[a] - times[b]), p);
  }
  return t;
}

KroneckerCov build_error_cov(std::span<const double> lats, std::span<const double> lons,
                             std::span<const double> times, double omega2,
                             const MaternParams& mp, const TemporalParams& tp,
                             DistanceMetric metric) {
  if (lats.size() != lons.size() || lats.empty())
    fail(ErrorCode::invalid_argument, "build_error_cov: empty or mismatched coordinates");
  if (times.empty()) fail(ErrorCode::invalid_argument, "build_error_cov: empty time sequence");
  return KroneckerCov(matern_corr_matrix(lats, lons, mp, metric),
                      temporal_corr_matrix(times, tp), omega2);
}

}  // namespace stfm
