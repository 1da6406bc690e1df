#pragma once

#include <string>
#include <vector>

#include "linalg.hpp"

namespace stfm {

// Potential scale reduction factor over m >= 2 equal-length chains:
//   R = sqrt(1 + B / ((len - 1) * W))
// with W the mean unbiased within-chain variance and B = len * var(chain
// means). Identical chains give exactly 1; the statistic is always >= 1.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

// Brooks-Gelman multivariate PSRF over vector-valued draws (rows = draws per
// chain, one matrix per chain).
double multivariate_psrf(const std::vector<Matrix>& chains);

// Lag-k autocorrelation (biased normalization, lag 0 -> 1).
double autocorr(const std::vector<double>& series, int lag);

// Effective sample size via Geyer's initial-positive-sequence estimator.
double ess(const std::vector<double>& series);

// Type-7 quantile (linear interpolation of order statistics).
double quantile(std::vector<double> values, double p);

struct ParameterSummary {
  std::string name;
  double median = 0.0, mean = 0.0, sd = 0.0;
  double q025 = 0.0, q975 = 0.0;
  double rhat = 1.0;  // NaN for a single chain
  double ess = 0.0;
};

// Per-parameter summary over one or more chains of equal layout; quantiles and
// moments pool all chains, R-hat uses the per-chain split.
std::vector<ParameterSummary> summarize(const std::vector<std::string>& names,
                                        const std::vector<Matrix>& chains);

// Fraction of truths falling inside [lo, hi].
double coverage(const std::vector<std::pair<double, double>>& intervals,
                const std::vector<double>& truths);

}  // namespace stfm
