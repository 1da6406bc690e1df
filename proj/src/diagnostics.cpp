#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace stfm {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_unbiased(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) fail(ErrorCode::insufficient_data, "gelman_rubin: need at least 2 chains");
  const std::size_t len = chains[0].size();
  if (len < 10) fail(ErrorCode::insufficient_data, "gelman_rubin: need at least 10 draws");
  for (const auto& c : chains)
    if (c.size() != len) fail(ErrorCode::invalid_argument, "gelman_rubin: unequal chain lengths");

  std::vector<double> means(m);
  double w = 0.0;
  for (int j = 0; j < m; ++j) {
    means[j] = mean_of(chains[j]);
    w += var_unbiased(chains[j], means[j]);
  }
  w /= m;
  double grand = mean_of(means);
  double b = 0.0;  // = B / len = var of chain means
  for (int j = 0; j < m; ++j) b += (means[j] - grand) * (means[j] - grand);
  b /= (m - 1);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 + b * static_cast<double>(len) / (static_cast<double>(len - 1) * w));
}

double multivariate_psrf(const std::vector<Matrix>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) fail(ErrorCode::insufficient_data, "multivariate_psrf: need at least 2 chains");
  const long len = chains[0].rows(), p = chains[0].cols();
  if (len < 10) fail(ErrorCode::insufficient_data, "multivariate_psrf: need at least 10 draws");

  Matrix w = Matrix::Zero(p, p), b = Matrix::Zero(p, p);
  Matrix chain_means(m, p);
  for (int j = 0; j < m; ++j) {
    Vector mu = chains[j].colwise().mean();
    chain_means.row(j) = mu;
    Matrix centered = chains[j].rowwise() - mu.transpose();
    w += centered.transpose() * centered / static_cast<double>(len - 1);
  }
  w /= m;
  Vector grand = chain_means.colwise().mean();
  Matrix cm = chain_means.rowwise() - grand.transpose();
  b = cm.transpose() * cm * static_cast<double>(len) / static_cast<double>(m - 1);

  // largest eigenvalue of W^{-1} B / len via the symmetric pencil
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(b / static_cast<double>(len), w);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::numeric, "multivariate_psrf: eigen solve failed");
  double lambda = es.eigenvalues().maxCoeff();
  return std::sqrt(static_cast<double>(len - 1) / len + (1.0 + 1.0 / m) * lambda);
}

double autocorr(const std::vector<double>& series, int lag) {
  const long n = static_cast<long>(series.size());
  if (lag < 0 || lag >= n) fail(ErrorCode::invalid_argument, "autocorr: lag out of range");
  double mu = mean_of(series);
  double c0 = 0.0, ck = 0.0;
  for (long t = 0; t < n; ++t) c0 += (series[t] - mu) * (series[t] - mu);
  for (long t = 0; t + lag < n; ++t) ck += (series[t] - mu) * (series[t + lag] - mu);
  if (c0 <= 0.0) return lag == 0 ? 1.0 : 0.0;
  return ck / c0;
}

double ess(const std::vector<double>& series) {
  const long n = static_cast<long>(series.size());
  if (n < 4) return static_cast<double>(n);
  double mu = mean_of(series);
  double c0 = 0.0;
  for (double x : series) c0 += (x - mu) * (x - mu);
  if (c0 <= 0.0) return static_cast<double>(n);

  auto rho = [&](long lag) {
    double ck = 0.0;
    for (long t = 0; t + lag < n; ++t) ck += (series[t] - mu) * (series[t + lag] - mu);
    return ck / c0;
  };
  // Geyer initial positive sequence over pair sums rho(2k) + rho(2k+1)
  double sum = 0.0;
  for (long k = 1; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k - 1) + rho(2 * k);
    if (pair <= 0.0) break;
    sum += pair;
  }
  double tau_int = 1.0 + 2.0 * sum;
  return std::clamp(static_cast<double>(n) / tau_int, 1.0, static_cast<double>(n));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) fail(ErrorCode::insufficient_data, "quantile: empty sample");
  if (p < 0.0 || p > 1.0) fail(ErrorCode::invalid_argument, "quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const long n = static_cast<long>(values.size());
  double h = (n - 1) * p;
  long lo = static_cast<long>(std::floor(h));
  long hi = std::min(lo + 1, n - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

std::vector<ParameterSummary> summarize(const std::vector<std::string>& names,
                                        const std::vector<Matrix>& chains) {
  if (chains.empty()) fail(ErrorCode::insufficient_data, "summarize: no chains");
  const long p = chains[0].cols();
  if (static_cast<long>(names.size()) != p)
    fail(ErrorCode::invalid_argument, "summarize: name/column mismatch");
  const bool multi = chains.size() >= 2;

  std::vector<ParameterSummary> out(p);
  for (long k = 0; k < p; ++k) {
    std::vector<double> pooled;
    std::vector<std::vector<double>> per_chain;
    double ess_sum = 0.0;
    long total = 0;
    for (const auto& c : chains) {
      std::vector<double> col(c.rows());
      for (long t = 0; t < c.rows(); ++t) col[t] = c(t, k);
      ess_sum += ess(col);
      total += c.rows();
      pooled.insert(pooled.end(), col.begin(), col.end());
      per_chain.push_back(std::move(col));
    }
    ParameterSummary& s = out[k];
    s.name = names[k];
    s.mean = mean_of(pooled);
    s.sd = pooled.size() > 1 ? std::sqrt(var_unbiased(pooled, s.mean)) : 0.0;
    s.median = quantile(pooled, 0.5);
    s.q025 = quantile(pooled, 0.025);
    s.q975 = quantile(pooled, 0.975);
    s.ess = std::min(ess_sum, static_cast<double>(total));
    s.rhat = multi ? gelman_rubin(per_chain) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double coverage(const std::vector<std::pair<double, double>>& intervals,
                const std::vector<double>& truths) {
  if (intervals.size() != truths.size() || intervals.empty())
    fail(ErrorCode::invalid_argument, "coverage: mismatched or empty inputs");
  long hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (truths[i] >= intervals[i].first && truths[i] <= intervals[i].second) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

}  // namespace stfm
