#pragma once

#include <utility>
#include <vector>

#include "sampler.hpp"

namespace stfm {

enum class PredictMode { new_rep_existing_block, new_location };

struct PredictionTarget {
  int block = 0;
  double lat = 0.0, lon = 0.0;
  std::vector<double> times;
  PredictMode mode = PredictMode::new_rep_existing_block;
};

struct PredictiveDraws {
  Matrix draws;  // q x tau*
  Vector mean;   // per time point, Monte-Carlo mean
  std::vector<std::pair<double, double>> interval;
  double level = 0.95;
};

// Empirical central interval per time point (type-7 quantiles of the draws).
std::vector<std::pair<double, double>> predictive_interval(const Matrix& draws, double level);

// Monte-Carlo mixture over stored draws: per draw h, the mean surface at the
// target plus Gaussian noise with covariance omega2_h * T(varphi_h) (a new
// repetition's error is independent of the training errors).
PredictiveDraws posterior_predictive(const std::vector<ChainSamples>& chains, const DesignSet& d,
                                     const PredictionTarget& target, double level, RngStream& rng);

}  // namespace stfm
