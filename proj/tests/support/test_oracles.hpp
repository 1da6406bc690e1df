// Independent reference implementations used as test oracles. Everything here
// is deliberately written the slow, obvious way and stays independent of the
// library code paths it checks.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---- special functions ----------------------------------------------------

// Regularized lower incomplete gamma P(a, x); series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction for Q(a, x)
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

inline double gamma_cdf(double x, double shape, double scale) {
  return x <= 0.0 ? 0.0 : gamma_p(shape, x / scale);
}

inline double inverse_gamma_cdf(double x, double a, double b) {
  return x <= 0.0 ? 0.0 : gamma_q(a, b / x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---- hypothesis-test helpers ----------------------------------------------

// One-sample Kolmogorov-Smirnov p-value against a given CDF.
inline double ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j)
    sum += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

// Chi-square goodness-of-fit p-value from observed counts and expected probabilities.
inline double chi2_gof_pvalue(const std::vector<long>& observed,
                              const std::vector<double>& expected_prob) {
  long total = 0;
  for (long o : observed) total += o;
  double chi2 = 0.0;
  int df = -1;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    double e = expected_prob[k] * static_cast<double>(total);
    if (e < 1e-12) continue;
    chi2 += (observed[k] - e) * (observed[k] - e) / e;
    ++df;
  }
  if (df < 1) return 1.0;
  return gamma_q(0.5 * df, 0.5 * chi2);
}

// ---- spline / design oracles ----------------------------------------------

// Cubic Bernstein polynomials on [lo, hi]: the K = 4 clamped B-spline basis.
inline Vector bernstein_row(double x, double lo, double hi) {
  double u = (x - lo) / (hi - lo);
  Vector row(4);
  row << (1 - u) * (1 - u) * (1 - u), 3 * u * (1 - u) * (1 - u), 3 * u * u * (1 - u), u * u * u;
  return row;
}

// Triple-loop mean design from univariate basis matrices.
inline Matrix mean_design_loop(const Matrix& b_lat, const Matrix& b_lon, const Matrix& b_time) {
  const long n = b_lat.rows(), tau = b_time.rows();
  const long k1 = b_lat.cols(), k2 = b_lon.cols(), k3 = b_time.cols();
  Matrix m(n * tau, k1 * k2 * k3);
  for (long r = 0; r < n; ++r)
    for (long s = 0; s < tau; ++s)
      for (long a = 0; a < k1; ++a)
        for (long b = 0; b < k2; ++b)
          for (long d = 0; d < k3; ++d)
            m(r * tau + s, (a * k2 + b) * k3 + d) = b_lat(r, a) * b_lon(r, b) * b_time(s, d);
  return m;
}

inline Matrix spatial_design_loop(const Matrix& b_lat, const Matrix& b_lon, long tau) {
  const long n = b_lat.rows(), k1 = b_lat.cols(), k2 = b_lon.cols();
  Matrix p(n * tau, k1 * k2);
  for (long r = 0; r < n; ++r)
    for (long s = 0; s < tau; ++s)
      for (long f = 0; f < k1; ++f)
        for (long g = 0; g < k2; ++g) p(r * tau + s, f * k2 + g) = b_lat(r, f) * b_lon(r, g);
  return p;
}

// Dense Kronecker product by explicit loops.
inline Matrix kron_loop(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      for (long k = 0; k < b.rows(); ++k)
        for (long l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

// Dense multivariate-normal log density.
inline double mvn_logpdf_dense(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("oracle mvn: not PD");
  Matrix l = llt.matrixL();
  Vector u = l.triangularView<Eigen::Lower>().solve(x - mean);
  double logdet = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * M_PI) + logdet + u.squaredNorm());
}

}  // namespace oracle
