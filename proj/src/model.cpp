#include "model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace stfm {

int Dataset::total_reps() const {
  int t = 0;
  for (int j : block_reps) t += j;
  return t;
}

long Dataset::rep_offset(int block, int rep) const {
  long reps_before = 0;
  for (int i = 0; i < block; ++i) reps_before += block_reps[i];
  return (reps_before + rep) * rows_per_rep();
}

std::vector<double> Dataset::lats() const {
  std::vector<double> v(stations.size());
  for (std::size_t i = 0; i < stations.size(); ++i) v[i] = stations[i].lat;
  return v;
}

std::vector<double> Dataset::lons() const {
  std::vector<double> v(stations.size());
  for (std::size_t i = 0; i < stations.size(); ++i) v[i] = stations[i].lon;
  return v;
}

void Dataset::validate() const {
  if (block_reps.empty()) fail(ErrorCode::config, "dataset: no blocks");
  for (int j : block_reps)
    if (j <= 0) fail(ErrorCode::config, "dataset: nonpositive repetition count");
  if (stations.empty()) fail(ErrorCode::config, "dataset: no stations");
  if (times.empty()) fail(ErrorCode::config, "dataset: no time points");
  long expected = static_cast<long>(total_reps()) * rows_per_rep();
  if (y.size() != expected) {
    std::ostringstream msg;
    msg << "dataset: response length " << y.size() << " does not match blocks*reps*n*tau = "
        << expected;
    fail(ErrorCode::config, msg.str());
  }
  if (!y.allFinite()) fail(ErrorCode::config, "dataset: non-finite response values");
  std::set<std::pair<double, double>> coords;
  for (const auto& s : stations)
    if (!coords.insert({s.lat, s.lon}).second)
      fail(ErrorCode::config, "dataset: duplicate station coordinates (enable jitter at ingest)");
}

bool ParamState::all_finite() const {
  auto ok = [](const Vector& v) { return v.allFinite(); };
  if (!ok(beta) || !ok(sigma2_theta) || !ok(sigma2_vartheta)) return false;
  for (const auto& t : theta)
    if (!ok(t)) return false;
  for (const auto& t : vartheta)
    if (!ok(t)) return false;
  return std::isfinite(omega2) && std::isfinite(phi) && std::isfinite(varphi) && omega2 > 0.0 &&
         phi > 0.0 && varphi > 0.0;
}

ParamState zero_state(const DesignSet& d, double kappa) {
  ParamState st;
  st.beta = Vector::Zero(d.beta_dim());
  st.theta.assign(d.blocks(), Vector::Zero(d.theta_dim()));
  st.vartheta.assign(d.blocks(), Vector::Zero(d.vartheta_dim()));
  st.sigma2_theta = Vector::Ones(d.blocks());
  st.sigma2_vartheta = Vector::Ones(d.blocks());
  st.kappa = kappa;
  return st;
}

const VariancePrior& PriorConfig::theta_prior(int block) const {
  return sigma2_theta.size() == 1 ? sigma2_theta[0] : sigma2_theta.at(block);
}

const VariancePrior& PriorConfig::vartheta_prior(int block) const {
  return sigma2_vartheta.size() == 1 ? sigma2_vartheta[0] : sigma2_vartheta.at(block);
}

Vector PriorConfig::beta_mean_vec(long dim) const {
  if (beta_mean.size() == 0) return Vector::Zero(dim);
  if (beta_mean.size() == 1) return Vector::Constant(dim, beta_mean[0]);
  if (beta_mean.size() != dim) fail(ErrorCode::config, "prior: beta_mean length mismatch");
  return beta_mean;
}

void PriorConfig::validate(int blocks) const {
  auto check_vp = [](const VariancePrior& p, const char* what) {
    if (!(p.p1 > 0.0) || !(p.p2 > 0.0))
      fail(ErrorCode::config, std::string("prior: nonpositive hyperparameter for ") + what);
  };
  if (!(beta_var > 0.0)) fail(ErrorCode::config, "prior: beta_var must be positive");
  if (sigma2_theta.empty() || sigma2_vartheta.empty())
    fail(ErrorCode::config, "prior: missing variance priors");
  if (sigma2_theta.size() != 1 && static_cast<int>(sigma2_theta.size()) != blocks)
    fail(ErrorCode::config, "prior: sigma2_theta prior list must have size 1 or I");
  if (sigma2_vartheta.size() != 1 && static_cast<int>(sigma2_vartheta.size()) != blocks)
    fail(ErrorCode::config, "prior: sigma2_vartheta prior list must have size 1 or I");
  for (const auto& p : sigma2_theta) check_vp(p, "sigma2_theta");
  for (const auto& p : sigma2_vartheta) check_vp(p, "sigma2_vartheta");
  check_vp(omega2, "omega2");
  if (!(phi_prior.shape > 0.0) || !(phi_prior.scale > 0.0) || !(varphi_prior.shape > 0.0) ||
      !(varphi_prior.scale > 0.0))
    fail(ErrorCode::config, "prior: Gamma hyperparameters must be positive");
}

Vector block_mean(const DesignSet& d, const ParamState& st, int block) {
  Vector mu = d.mean_mu(st.beta);
  Vector zl = d.zeta_at_locations(st.theta[block]);  // n
  Vector gt = d.gamma_at_times(st.vartheta[block]);  // tau
  for (int r = 0; r < d.n; ++r) mu.segment(static_cast<long>(r) * d.tau, d.tau).array() += zl[r];
  for (int r = 0; r < d.n; ++r) mu.segment(static_cast<long>(r) * d.tau, d.tau) += gt;
  return mu;
}

Vector residual(const Dataset& ds, const DesignSet& d, const ParamState& st) {
  Vector out(ds.y.size());
  const long m = ds.rows_per_rep();
  long off = 0;
  for (int i = 0; i < ds.blocks(); ++i) {
    Vector mean_i = block_mean(d, st, i);
    for (int j = 0; j < ds.block_reps[i]; ++j, off += m)
      out.segment(off, m) = ds.y.segment(off, m) - mean_i;
  }
  return out;
}

Vector residual_rep(const Dataset& ds, const DesignSet& d, const ParamState& st, int block,
                    int rep) {
  const long m = ds.rows_per_rep();
  return ds.y.segment(ds.rep_offset(block, rep), m) - block_mean(d, st, block);
}

namespace {

void check_dims(const Dataset& ds, const DesignSet& d, const ParamState& st) {
  if (d.n != ds.n() || d.tau != ds.tau() || d.blocks() != ds.blocks())
    fail(ErrorCode::invalid_argument, "model: design/dataset dimension mismatch");
  if (st.beta.size() != d.beta_dim() || static_cast<int>(st.theta.size()) != d.blocks() ||
      static_cast<int>(st.vartheta.size()) != d.blocks())
    fail(ErrorCode::invalid_argument, "model: state/design dimension mismatch");
}

}  // namespace

double conditional_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st,
                          const KroneckerCov& cov) {
  check_dims(ds, d, st);
  const long m = ds.rows_per_rep();
  const double norm_const = static_cast<double>(m) * std::log(2.0 * M_PI);
  double ll = 0.0;
  long off = 0;
  for (int i = 0; i < ds.blocks(); ++i) {
    Vector mean_i = block_mean(d, st, i);
    for (int j = 0; j < ds.block_reps[i]; ++j, off += m) {
      Vector r = ds.y.segment(off, m) - mean_i;
      ll += -0.5 * (norm_const + cov.logdet() + cov.kernel_quad(r) / cov.omega2());
    }
  }
  return ll;
}

double conditional_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st) {
  KroneckerCov cov = build_error_cov(ds.lats(), ds.lons(), ds.times, st.omega2,
                                     {st.kappa, st.phi}, {st.varphi}, ds.metric);
  return conditional_loglik(ds, d, st, cov);
}

Vector per_rep_loglik(const Dataset& ds, const DesignSet& d, const ParamState& st) {
  check_dims(ds, d, st);
  KroneckerCov cov = build_error_cov(ds.lats(), ds.lons(), ds.times, st.omega2,
                                     {st.kappa, st.phi}, {st.varphi}, ds.metric);
  const long m = ds.rows_per_rep();
  const double base = -0.5 * (static_cast<double>(m) * std::log(2.0 * M_PI) + cov.logdet());
  Vector out(ds.total_reps());
  long off = 0, idx = 0;
  for (int i = 0; i < ds.blocks(); ++i) {
    Vector mean_i = block_mean(d, st, i);
    for (int j = 0; j < ds.block_reps[i]; ++j, off += m) {
      Vector r = ds.y.segment(off, m) - mean_i;
      out[idx++] = base - 0.5 * cov.kernel_quad(r) / cov.omega2();
    }
  }
  return out;
}

double marginal_cov(const DesignSet& d, const Dataset& ds, const ParamState& st,
                    std::array<int, 4> a, std::array<int, 4> b) {
  auto check = [&](const std::array<int, 4>& ix) {
    if (ix[0] < 0 || ix[0] >= ds.blocks() || ix[1] < 0 || ix[1] >= ds.block_reps[ix[0]] ||
        ix[2] < 0 || ix[2] >= ds.n() || ix[3] < 0 || ix[3] >= ds.tau())
      fail(ErrorCode::invalid_argument, "marginal_cov: index out of range");
  };
  check(a);
  check(b);
  if (a[0] != b[0]) return 0.0;
  const int i = a[0], r = a[2], p = b[2], s = a[3], q = b[3];
  double cov = st.sigma2_theta[i] * d.space_zeta.row(r).dot(d.space_zeta.row(p)) +
               st.sigma2_vartheta[i] * d.time_gamma.row(s).dot(d.time_gamma.row(q));
  if (a[1] == b[1]) {
    double sd = pair_distance(ds.stations[r].lat, ds.stations[r].lon, ds.stations[p].lat,
                              ds.stations[p].lon, ds.metric);
    cov += st.omega2 * matern_corr(sd, {st.kappa, st.phi}) *
           temporal_corr(std::abs(ds.times[s] - ds.times[q]), {st.varphi});
  }
  return cov;
}

}  // namespace stfm
