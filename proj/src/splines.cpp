#include "splines.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace stfm {

namespace {
constexpr int kDegree = 3;
constexpr int kOrder = 4;
}  // namespace

KnotVector make_knots(double domain_min, double domain_max, int num_bases) {
  if (num_bases < 4) fail(ErrorCode::invalid_argument, "make_knots: need at least 4 bases (cubic)");
  if (!(domain_max > domain_min)) fail(ErrorCode::domain, "make_knots: degenerate domain");
  KnotVector kv;
  kv.domain_min = domain_min;
  kv.domain_max = domain_max;
  kv.num_bases = num_bases;
  kv.knots.resize(num_bases + kOrder);
  for (int i = 0; i < kOrder; ++i) kv.knots[i] = domain_min;
  int interior = num_bases - kOrder;
  for (int j = 1; j <= interior; ++j)
    kv.knots[kDegree + j] = domain_min + (domain_max - domain_min) * j / (interior + 1);
  for (int i = 0; i < kOrder; ++i) kv.knots[num_bases + i] = domain_max;
  return kv;
}

Vector eval_basis_row(const KnotVector& kv, double x) {
  if (x < kv.domain_min || x > kv.domain_max)
    fail(ErrorCode::domain, "eval_basis: point outside basis domain");
  const auto& t = kv.knots;
  const int k = kv.num_bases;
  // knot span: largest i in [degree, k-1] with t[i] <= x < t[i+1]
  int span;
  if (x >= kv.domain_max) {
    span = k - 1;
  } else {
    span = static_cast<int>(std::upper_bound(t.begin() + kDegree, t.begin() + k, x) -
                            t.begin()) -
           1;
  }
  // Cox-de Boor triangular recursion for the 4 nonzero values N_{span-3..span}
  double vals[kOrder], left[kOrder], right[kOrder];
  vals[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double denom = right[r + 1] + left[j - r];
      double tmp = vals[r] / denom;
      vals[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[j] = saved;
  }
  Vector row = Vector::Zero(k);
  for (int j = 0; j <= kDegree; ++j) row[span - kDegree + j] = vals[j];
  return row;
}

Matrix eval_basis(const KnotVector& kv, std::span<const double> points) {
  Matrix out(static_cast<Eigen::Index>(points.size()), kv.num_bases);
  for (std::size_t i = 0; i < points.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = eval_basis_row(kv, points[i]);
  return out;
}

namespace {

// Basis domain over observed values; a single point gets a unit-scale pad so
// the knot vector stays nondegenerate.
std::pair<double, double> basis_domain(double lo, double hi, double margin) {
  if (hi - lo < 1e-12) {
    double pad = std::max(0.5, std::abs(lo) * 1e-6);
    return {lo - pad, hi + pad};
  }
  double span = hi - lo;
  return {lo - margin * span, hi + margin * span};
}

// Row-tensor spatial basis over (lat, lon), n x K^2.
Matrix space_basis(std::span<const double> lats, std::span<const double> lons, int k,
                   double margin) {
  if (lats.size() != lons.size() || lats.empty())
    fail(ErrorCode::invalid_argument, "space_basis: empty or mismatched coordinates");
  auto [lat_lo, lat_hi] = std::minmax_element(lats.begin(), lats.end());
  auto [lon_lo, lon_hi] = std::minmax_element(lons.begin(), lons.end());
  auto [la0, la1] = basis_domain(*lat_lo, *lat_hi, margin);
  auto [lo0, lo1] = basis_domain(*lon_lo, *lon_hi, margin);
  KnotVector kv_lat = make_knots(la0, la1, k);
  KnotVector kv_lon = make_knots(lo0, lo1, k);
  return row_kron(eval_basis(kv_lat, lats), eval_basis(kv_lon, lons));
}

KnotVector time_knots(std::span<const double> times, int k, double margin) {
  if (times.empty()) fail(ErrorCode::invalid_argument, "time basis: empty time sequence");
  auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  auto [t0, t1] = basis_domain(*lo, *hi, margin);
  return make_knots(t0, t1, k);
}

}  // namespace

Matrix build_mean_design(std::span<const double> lats, std::span<const double> lons,
                         std::span<const double> times, int k_mu) {
  Matrix space = space_basis(lats, lons, k_mu, 0.0);
  Matrix time = eval_basis(time_knots(times, k_mu, 0.0), times);
  return kron(space, time);
}

Matrix build_spatial_design(std::span<const double> lats, std::span<const double> lons,
                            std::span<const double> times, int k_zeta) {
  Matrix space = space_basis(lats, lons, k_zeta, 0.0);
  return kron(space, Matrix::Ones(static_cast<Eigen::Index>(times.size()), 1));
}

Matrix build_temporal_design(int n, std::span<const double> times, int k_gamma) {
  if (n < 1) fail(ErrorCode::invalid_argument, "build_temporal_design: n must be positive");
  Matrix time = eval_basis(time_knots(times, k_gamma, 0.0), times);
  return kron(Matrix::Ones(n, 1), time);
}

Assembled assemble_full(const Matrix& m, const Matrix& p, const Matrix& n,
                        std::span<const int> block_reps) {
  if (block_reps.empty()) fail(ErrorCode::config, "assemble_full: empty block list");
  for (int j : block_reps)
    if (j <= 0) fail(ErrorCode::config, "assemble_full: nonpositive repetition count");
  long rows = m.rows();
  long total = 0;
  for (int j : block_reps) total += j;
  const long nb = static_cast<long>(block_reps.size());

  Assembled out;
  out.x.resize(total * rows, m.cols());
  out.q = Matrix::Zero(total * rows, nb * p.cols());
  out.r = Matrix::Zero(total * rows, nb * n.cols());
  long row0 = 0;
  for (long i = 0; i < nb; ++i) {
    for (int j = 0; j < block_reps[i]; ++j) {
      out.x.middleRows(row0, rows) = m;
      out.q.block(row0, i * p.cols(), rows, p.cols()) = p;
      out.r.block(row0, i * n.cols(), rows, n.cols()) = n;
      row0 += rows;
    }
  }
  return out;
}

int DesignSet::total_reps() const {
  int t = 0;
  for (int j : block_reps) t += j;
  return t;
}

Matrix DesignSet::m() const { return kron(space_mu, time_mu); }

Matrix DesignSet::p() const { return kron(space_zeta, Matrix::Ones(tau, 1)); }

Matrix DesignSet::nmat() const { return kron(Matrix::Ones(n, 1), time_gamma); }

Vector DesignSet::mean_mu(const Vector& beta) const {
  // M beta = vec(time_mu * B * space_mu^T) with B the K_mu x K_mu^2 reshape of beta
  Eigen::Map<const Matrix> b(beta.data(), k_mu, static_cast<Eigen::Index>(k_mu) * k_mu);
  Matrix out = time_mu * b * space_mu.transpose();  // tau x n
  return Eigen::Map<const Vector>(out.data(), out.size());
}

Vector DesignSet::zeta_at_locations(const Vector& theta) const { return space_zeta * theta; }

Vector DesignSet::gamma_at_times(const Vector& vartheta) const { return time_gamma * vartheta; }

DesignSet build_design(std::span<const double> lats, std::span<const double> lons,
                       std::span<const double> times, std::span<const int> block_reps,
                       int k_mu, int k_zeta, int k_gamma, double domain_margin) {
  if (lats.size() != lons.size() || lats.empty())
    fail(ErrorCode::invalid_argument, "build_design: empty or mismatched coordinates");
  if (times.empty()) fail(ErrorCode::invalid_argument, "build_design: empty time sequence");
  if (block_reps.empty()) fail(ErrorCode::config, "build_design: empty block list");
  if (domain_margin < 0.0) fail(ErrorCode::config, "build_design: negative domain margin");

  DesignSet d;
  d.n = static_cast<int>(lats.size());
  d.tau = static_cast<int>(times.size());
  d.k_mu = k_mu;
  d.k_zeta = k_zeta;
  d.k_gamma = k_gamma;
  d.block_reps.assign(block_reps.begin(), block_reps.end());

  auto [lat_lo, lat_hi] = std::minmax_element(lats.begin(), lats.end());
  auto [lon_lo, lon_hi] = std::minmax_element(lons.begin(), lons.end());
  double span_lat = *lat_hi - *lat_lo, span_lon = *lon_hi - *lon_lo;
  double pad_lat = span_lat < 1e-12 ? std::max(0.5, std::abs(*lat_lo) * 1e-6)
                                    : domain_margin * span_lat;
  double pad_lon = span_lon < 1e-12 ? std::max(0.5, std::abs(*lon_lo) * 1e-6)
                                    : domain_margin * span_lon;
  double lat0 = *lat_lo - pad_lat, lat1 = *lat_hi + pad_lat;
  double lon0 = *lon_lo - pad_lon, lon1 = *lon_hi + pad_lon;

  d.kv_lat_mu = make_knots(lat0, lat1, k_mu);
  d.kv_lon_mu = make_knots(lon0, lon1, k_mu);
  d.kv_time_mu = time_knots(times, k_mu, domain_margin);
  d.kv_lat_zeta = make_knots(lat0, lat1, k_zeta);
  d.kv_lon_zeta = make_knots(lon0, lon1, k_zeta);
  d.kv_time_gamma = time_knots(times, k_gamma, domain_margin);

  d.space_mu = row_kron(eval_basis(d.kv_lat_mu, lats), eval_basis(d.kv_lon_mu, lons));
  d.time_mu = eval_basis(d.kv_time_mu, times);
  d.space_zeta = row_kron(eval_basis(d.kv_lat_zeta, lats), eval_basis(d.kv_lon_zeta, lons));
  d.time_gamma = eval_basis(d.kv_time_gamma, times);
  return d;
}

}  // namespace stfm
