#include "predict.hpp"

#include <cmath>

#include "diagnostics.hpp"
#include "errors.hpp"

namespace stfm {

std::vector<std::pair<double, double>> predictive_interval(const Matrix& draws, double level) {
  if (draws.rows() == 0) fail(ErrorCode::insufficient_data, "predictive_interval: no draws");
  if (!(level > 0.0) || !(level < 1.0))
    fail(ErrorCode::invalid_argument, "predictive_interval: level must lie in (0,1)");
  std::vector<std::pair<double, double>> out(draws.cols());
  std::vector<double> col(draws.rows());
  for (long k = 0; k < draws.cols(); ++k) {
    for (long h = 0; h < draws.rows(); ++h) col[h] = draws(h, k);
    out[k] = {quantile(col, 0.5 * (1.0 - level)), quantile(col, 1.0 - 0.5 * (1.0 - level))};
  }
  return out;
}

PredictiveDraws posterior_predictive(const std::vector<ChainSamples>& chains, const DesignSet& d,
                                     const PredictionTarget& target, double level,
                                     RngStream& rng) {
  long q = 0;
  for (const auto& c : chains) q += static_cast<long>(c.draws.size());
  if (q == 0) fail(ErrorCode::insufficient_data, "posterior_predictive: empty chain");
  if (target.block < 0 || target.block >= d.blocks())
    fail(ErrorCode::invalid_argument, "posterior_predictive: block index out of range");
  if (target.times.empty())
    fail(ErrorCode::invalid_argument, "posterior_predictive: no target times");

  // basis rows at the target; throws a domain error outside the basis domain
  Vector b_lat_mu = eval_basis_row(d.kv_lat_mu, target.lat);
  Vector b_lon_mu = eval_basis_row(d.kv_lon_mu, target.lon);
  Vector b_lat_z = eval_basis_row(d.kv_lat_zeta, target.lat);
  Vector b_lon_z = eval_basis_row(d.kv_lon_zeta, target.lon);
  Matrix b_time_mu = eval_basis(d.kv_time_mu, target.times);      // tau* x K_mu
  Matrix b_time_g = eval_basis(d.kv_time_gamma, target.times);    // tau* x K_gamma
  Vector b_space_mu = row_kron(Eigen::Map<const Matrix>(b_lat_mu.data(), 1, b_lat_mu.size()),
                               Eigen::Map<const Matrix>(b_lon_mu.data(), 1, b_lon_mu.size()))
                          .row(0);
  Vector b_space_z = row_kron(Eigen::Map<const Matrix>(b_lat_z.data(), 1, b_lat_z.size()),
                              Eigen::Map<const Matrix>(b_lon_z.data(), 1, b_lon_z.size()))
                         .row(0);

  const long tau_star = static_cast<long>(target.times.size());
  PredictiveDraws out;
  out.level = level;
  out.draws.resize(q, tau_star);
  long h = 0;
  for (const auto& chain : chains) {
    for (const auto& st : chain.draws) {
      // mean surface at the target
      Eigen::Map<const Matrix> bmat(st.beta.data(), d.k_mu,
                                    static_cast<Eigen::Index>(d.k_mu) * d.k_mu);
      Vector mu = b_time_mu * (bmat * b_space_mu);              // tau*
      double zeta = b_space_z.dot(st.theta[target.block]);
      Vector gamma = b_time_g * st.vartheta[target.block];      // tau*
      Vector mean_h = mu.array() + zeta + gamma.array();

      // fresh error draw, covariance omega2 * T(varphi) at the target times
      Matrix t = temporal_corr_matrix(target.times, {st.varphi});
      Matrix lt = robust_cholesky(t, "predictive temporal correlation");
      Vector z(tau_star);
      for (long k = 0; k < tau_star; ++k) z[k] = rng.normal();
      Vector noise = lt.triangularView<Eigen::Lower>() * z;
      out.draws.row(h++) = (mean_h + std::sqrt(st.omega2) * noise).transpose();
    }
  }
  out.mean = out.draws.colwise().mean();
  out.interval = predictive_interval(out.draws, level);
  return out;
}

}  // namespace stfm
