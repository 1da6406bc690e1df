#include "sampler.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "util.hpp"

namespace stfm {

void McmcConfig::validate() const {
  if (n_iter < 1) fail(ErrorCode::config, "mcmc: n_iter must be positive");
  if (burn_in < 0 || burn_in > n_iter)
    fail(ErrorCode::config, "mcmc: burn_in must lie in [0, n_iter]");
  if (thin < 1) fail(ErrorCode::config, "mcmc: thin must be >= 1");
  if (n_chains < 1) fail(ErrorCode::config, "mcmc: n_chains must be >= 1");
  if (!(mh_step_phi > 0.0) || !(mh_step_varphi > 0.0))
    fail(ErrorCode::config, "mcmc: MH step sizes must be positive");
}

ParamState default_init(const DesignSet& d, double kappa, int chain_index) {
  ParamState st = zero_state(d, kappa);
  if (chain_index % 2 == 0) {
    st.omega2 = 0.1;
    st.sigma2_theta.setConstant(0.01);
    st.sigma2_vartheta.setConstant(0.01);
    st.varphi = 0.1;
    st.phi = 10.0;
  } else {
    st.omega2 = 100.0;
    st.sigma2_theta.setConstant(10.0);
    st.sigma2_vartheta.setConstant(10.0);
    st.varphi = 100.0;
    st.phi = 1000.0;
  }
  return st;
}

// Covariance context for one (kappa, phi, varphi). Gram blocks are built
// lazily: MH proposals only need factors and quadratic forms.
struct FitEngine::Ctx {
  double kappa = 0.0, phi = 0.0, varphi = 0.0;
  bool dense = false;
  int n = 0, tau = 0;

  Matrix s, t;
  Matrix chol_s, chol_t;  // kron path
  Matrix chol_c;          // dense path, chol of kron(s, t)
  double logdet_kernel = 0.0;

  // mean-design gram: eigenfactors of the Kronecker pieces (kron path) or the
  // full M^T C^{-1} M (dense path)
  bool mean_ready = false;
  Matrix us, ut;
  Vector ls, lt;
  Matrix gram_m;

  bool zeta_ready = false;
  Matrix gs_zeta;  // space_zeta^T S^{-1} space_zeta
  double one_tinv_one = 0.0;
  Matrix gram_p;

  bool gamma_ready = false;
  Matrix gt_gamma;
  double one_sinv_one = 0.0;
  Matrix gram_n;

  Vector kernel_solve(const Vector& v) const {
    if (dense) {
      Vector u = chol_c.triangularView<Eigen::Lower>().solve(v);
      return chol_c.transpose().triangularView<Eigen::Upper>().solve(u);
    }
    Eigen::Map<const Matrix> vm(v.data(), tau, n);
    Matrix a = vm;
    chol_t.triangularView<Eigen::Lower>().solveInPlace(a);
    chol_t.transpose().triangularView<Eigen::Upper>().solveInPlace(a);
    Matrix b = a.transpose();
    chol_s.triangularView<Eigen::Lower>().solveInPlace(b);
    chol_s.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
    Matrix out = b.transpose();
    return Eigen::Map<const Vector>(out.data(), out.size());
  }

  double kernel_quad(const Vector& v) const {
    if (dense) return chol_c.triangularView<Eigen::Lower>().solve(v).squaredNorm();
    Eigen::Map<const Matrix> vm(v.data(), tau, n);
    Matrix a = vm;
    chol_t.triangularView<Eigen::Lower>().solveInPlace(a);
    Matrix b = a.transpose();
    chol_s.triangularView<Eigen::Lower>().solveInPlace(b);
    return b.squaredNorm();
  }

  // S^{-1} a (kron path)
  Matrix sinv(const Matrix& a) const {
    Matrix out = a;
    chol_s.triangularView<Eigen::Lower>().solveInPlace(out);
    chol_s.transpose().triangularView<Eigen::Upper>().solveInPlace(out);
    return out;
  }
  Matrix tinv(const Matrix& a) const {
    Matrix out = a;
    chol_t.triangularView<Eigen::Lower>().solveInPlace(out);
    chol_t.transpose().triangularView<Eigen::Upper>().solveInPlace(out);
    return out;
  }

  void ensure_mean_gram(const DesignSet& d, const Matrix& m_mat);
  void ensure_zeta_gram(const DesignSet& d, const Matrix& p_mat);
  void ensure_gamma_gram(const DesignSet& d, const Matrix& n_mat);
};

FitEngine::FitEngine(const Dataset& ds, const DesignSet& d, const PriorConfig& priors,
                     CovPath path)
    : ds_(ds), d_(d), priors_(priors), path_(path) {
  priors_.validate(d.blocks());
  if (d.n != ds.n() || d.tau != ds.tau() || d.blocks() != ds.blocks())
    fail(ErrorCode::invalid_argument, "sampler: design/dataset dimension mismatch");
  beta_prior_mean_ = priors_.beta_mean_vec(d.beta_dim());
  if (path_ == CovPath::dense) {
    m_mat_ = d.m();
    p_mat_ = d.p();
    n_mat_ = d.nmat();
  }
}

FitEngine::~FitEngine() = default;

FitEngine::Ctx FitEngine::build_ctx(double kappa, double phi, double varphi) const {
  Ctx ctx;
  ctx.kappa = kappa;
  ctx.phi = phi;
  ctx.varphi = varphi;
  ctx.dense = (path_ == CovPath::dense);
  ctx.n = d_.n;
  ctx.tau = d_.tau;
  ctx.s = matern_corr_matrix(ds_.lats(), ds_.lons(), {kappa, phi}, ds_.metric);
  ctx.t = temporal_corr_matrix(ds_.times, {varphi});
  if (ctx.dense) {
    ctx.chol_c = robust_cholesky(kron(ctx.s, ctx.t), "error covariance (dense)");
    ctx.logdet_kernel = 2.0 * ctx.chol_c.diagonal().array().log().sum();
  } else {
    ctx.chol_s = robust_cholesky(ctx.s, "spatial correlation");
    ctx.chol_t = robust_cholesky(ctx.t, "temporal correlation");
    ctx.logdet_kernel = ctx.tau * 2.0 * ctx.chol_s.diagonal().array().log().sum() +
                        ctx.n * 2.0 * ctx.chol_t.diagonal().array().log().sum();
  }
  return ctx;
}

void FitEngine::sync_cov(const ParamState& st) {
  if (ctx_ && ctx_->kappa == st.kappa && ctx_->phi == st.phi && ctx_->varphi == st.varphi) return;
  ctx_ = std::make_unique<Ctx>(build_ctx(st.kappa, st.phi, st.varphi));
}

namespace {

// Symmetric gram A^T K^{-1} A with explicit symmetrization.
Matrix sym_gram(const Matrix& a, const Matrix& kinv_a) {
  Matrix g = a.transpose() * kinv_a;
  return 0.5 * (g + g.transpose());
}

}  // namespace

void FitEngine::Ctx::ensure_mean_gram(const DesignSet& d, const Matrix& m_mat) {
  if (mean_ready) return;
  if (dense) {
    Matrix w = chol_c.triangularView<Eigen::Lower>().solve(m_mat);
    gram_m = Matrix::Zero(m_mat.cols(), m_mat.cols());
    gram_m.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
    gram_m.triangularView<Eigen::StrictlyUpper>() =
        gram_m.transpose().triangularView<Eigen::StrictlyUpper>();
  } else {
    Matrix gs = sym_gram(d.space_mu, sinv(d.space_mu));
    Matrix gt = sym_gram(d.time_mu, tinv(d.time_mu));
    Eigen::SelfAdjointEigenSolver<Matrix> es(gs), et(gt);
    if (es.info() != Eigen::Success || et.info() != Eigen::Success)
      fail(ErrorCode::numeric, "beta update: eigendecomposition failed");
    us = es.eigenvectors();
    ls = es.eigenvalues().cwiseMax(0.0);
    ut = et.eigenvectors();
    lt = et.eigenvalues().cwiseMax(0.0);
  }
  mean_ready = true;
}

void FitEngine::Ctx::ensure_zeta_gram(const DesignSet& d, const Matrix& p_mat) {
  if (zeta_ready) return;
  if (dense) {
    Matrix w = chol_c.triangularView<Eigen::Lower>().solve(p_mat);
    gram_p = sym_gram(p_mat, chol_c.transpose().triangularView<Eigen::Upper>().solve(w));
  } else {
    gs_zeta = sym_gram(d.space_zeta, sinv(d.space_zeta));
    one_tinv_one = tinv(Matrix::Ones(tau, 1)).sum();
  }
  zeta_ready = true;
}

void FitEngine::Ctx::ensure_gamma_gram(const DesignSet& d, const Matrix& n_mat) {
  if (gamma_ready) return;
  if (dense) {
    Matrix w = chol_c.triangularView<Eigen::Lower>().solve(n_mat);
    gram_n = sym_gram(n_mat, chol_c.transpose().triangularView<Eigen::Upper>().solve(w));
  } else {
    gt_gamma = sym_gram(d.time_gamma, tinv(d.time_gamma));
    one_sinv_one = sinv(Matrix::Ones(n, 1)).sum();
  }
  gamma_ready = true;
}

namespace {

// mean + A^{-1/2-style} draw from precision A = L L^T.
Vector draw_from_precision(const Matrix& precision, const Vector& rhs, RngStream& rng,
                           const char* what) {
  Matrix l = robust_cholesky(precision, what);
  Vector mean = l.transpose().triangularView<Eigen::Upper>().solve(
      l.triangularView<Eigen::Lower>().solve(rhs));
  Vector z(rhs.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + l.transpose().triangularView<Eigen::Upper>().solve(z);
}

Vector expand_block_effects(const DesignSet& d, const Vector& zeta_loc, const Vector& gamma_time) {
  Vector out(d.rows_per_rep());
  for (int r = 0; r < d.n; ++r)
    out.segment(static_cast<long>(r) * d.tau, d.tau) = gamma_time.array() + zeta_loc[r];
  return out;
}

}  // namespace

Vector FitEngine::update_beta(ParamState& st, RngStream& rng) {
  sync_cov(st);
  const long m = d_.rows_per_rep();
  // summed residual over all reps, without the M beta term
  Vector r_sum = Vector::Zero(m);
  long off = 0;
  for (int i = 0; i < d_.blocks(); ++i) {
    Vector eff = expand_block_effects(d_, d_.zeta_at_locations(st.theta[i]),
                                      d_.gamma_at_times(st.vartheta[i]));
    for (int j = 0; j < ds_.block_reps[i]; ++j, off += m)
      r_sum += ds_.y.segment(off, m) - eff;
  }
  const double j_tot = ds_.total_reps();
  Vector u = ctx_->kernel_solve(r_sum);
  Vector rhs;
  if (path_ == CovPath::dense)
    rhs = m_mat_.transpose() * u;
  else
    rhs = kron_mul(d_.space_mu.transpose(), d_.time_mu.transpose(), u);
  rhs /= st.omega2;
  rhs += beta_prior_mean_ / priors_.beta_var;

  ctx_->ensure_mean_gram(d_, m_mat_);
  const double c = j_tot / st.omega2;
  Vector draw;
  if (path_ == CovPath::dense) {
    Matrix precision = c * ctx_->gram_m;
    precision.diagonal().array() += 1.0 / priors_.beta_var;
    draw = draw_from_precision(precision, rhs, rng, "beta update");
  } else {
    // precision = c (Gs ⊗ Gt) + I/sigma2_beta = (Us⊗Ut) diag(c ls lt + 1/s2) (Us⊗Ut)^T
    Vector w = kron_mul(ctx_->us.transpose(), ctx_->ut.transpose(), rhs);
    const long ka = ctx_->ls.size(), kb = ctx_->lt.size();
    Vector dinv(ka * kb), dinv_sqrt(ka * kb);
    for (long a = 0; a < ka; ++a)
      for (long b = 0; b < kb; ++b) {
        double dk = c * ctx_->ls[a] * ctx_->lt[b] + 1.0 / priors_.beta_var;
        dinv[a * kb + b] = 1.0 / dk;
        dinv_sqrt[a * kb + b] = 1.0 / std::sqrt(dk);
      }
    Vector w_draw(ka * kb);
    for (long k = 0; k < ka * kb; ++k) w_draw[k] = w[k] * dinv[k] + rng.normal() * dinv_sqrt[k];
    draw = kron_mul(ctx_->us, ctx_->ut, w_draw);
  }
  st.beta = draw;
  return draw;
}

Vector FitEngine::update_theta_block(ParamState& st, int block, RngStream& rng) {
  sync_cov(st);
  const long m = d_.rows_per_rep();
  Vector mean_wo_zeta =
      d_.mean_mu(st.beta) +
      expand_block_effects(d_, Vector::Zero(d_.n), d_.gamma_at_times(st.vartheta[block]));
  Vector w = Vector::Zero(m);
  const int j_i = ds_.block_reps[block];
  for (int j = 0; j < j_i; ++j)
    w += ds_.y.segment(ds_.rep_offset(block, j), m);
  w -= j_i * mean_wo_zeta;

  Vector u = ctx_->kernel_solve(w);
  ctx_->ensure_zeta_gram(d_, p_mat_);
  Vector rhs;
  Matrix precision;
  if (path_ == CovPath::dense) {
    rhs = p_mat_.transpose() * u / st.omega2;
    precision = (j_i / st.omega2) * ctx_->gram_p;
  } else {
    Eigen::Map<const Matrix> um(u.data(), d_.tau, d_.n);
    rhs = d_.space_zeta.transpose() * um.colwise().sum().transpose() / st.omega2;
    precision = (j_i * ctx_->one_tinv_one / st.omega2) * ctx_->gs_zeta;
  }
  precision.diagonal().array() += 1.0 / st.sigma2_theta[block];
  Vector draw = draw_from_precision(precision, rhs, rng, "theta update");
  st.theta[block] = draw;
  return draw;
}

Vector FitEngine::update_vartheta_block(ParamState& st, int block, RngStream& rng) {
  sync_cov(st);
  const long m = d_.rows_per_rep();
  Vector mean_wo_gamma =
      d_.mean_mu(st.beta) +
      expand_block_effects(d_, d_.zeta_at_locations(st.theta[block]), Vector::Zero(d_.tau));
  Vector w = Vector::Zero(m);
  const int j_i = ds_.block_reps[block];
  for (int j = 0; j < j_i; ++j)
    w += ds_.y.segment(ds_.rep_offset(block, j), m);
  w -= j_i * mean_wo_gamma;

  Vector u = ctx_->kernel_solve(w);
  ctx_->ensure_gamma_gram(d_, n_mat_);
  Vector rhs;
  Matrix precision;
  if (path_ == CovPath::dense) {
    rhs = n_mat_.transpose() * u / st.omega2;
    precision = (j_i / st.omega2) * ctx_->gram_n;
  } else {
    Eigen::Map<const Matrix> um(u.data(), d_.tau, d_.n);
    rhs = d_.time_gamma.transpose() * um.rowwise().sum() / st.omega2;
    precision = (j_i * ctx_->one_sinv_one / st.omega2) * ctx_->gt_gamma;
  }
  precision.diagonal().array() += 1.0 / st.sigma2_vartheta[block];
  Vector draw = draw_from_precision(precision, rhs, rng, "vartheta update");
  st.vartheta[block] = draw;
  return draw;
}

namespace {

double draw_variance_conditional(const VariancePrior& prior, double quad, double dim,
                                 RngStream& rng) {
  if (prior.family == VariancePriorFamily::inverse_gamma)
    return rng.inverse_gamma(0.5 * dim + prior.p1, 0.5 * quad + prior.p2);
  // Scaled-Inv-ChiSq(v, s2) prior
  double v_post = dim + prior.p1;
  double s2_post = (quad + prior.p1 * prior.p2) / v_post;
  return rng.scaled_inv_chisq(v_post, s2_post);
}

}  // namespace

double FitEngine::update_sigma2_theta(ParamState& st, int block, RngStream& rng) {
  double quad = st.theta[block].squaredNorm();
  double draw = draw_variance_conditional(priors_.theta_prior(block), quad,
                                          static_cast<double>(d_.theta_dim()), rng);
  st.sigma2_theta[block] = draw;
  return draw;
}

double FitEngine::update_sigma2_vartheta(ParamState& st, int block, RngStream& rng) {
  double quad = st.vartheta[block].squaredNorm();
  double draw = draw_variance_conditional(priors_.vartheta_prior(block), quad,
                                          static_cast<double>(d_.vartheta_dim()), rng);
  st.sigma2_vartheta[block] = draw;
  return draw;
}

double FitEngine::update_omega2(ParamState& st, RngStream& rng) {
  sync_cov(st);
  const long m = d_.rows_per_rep();
  double quad = 0.0;
  long off = 0;
  for (int i = 0; i < d_.blocks(); ++i) {
    Vector mean_i = block_mean(d_, st, i);
    for (int j = 0; j < ds_.block_reps[i]; ++j, off += m)
      quad += ctx_->kernel_quad(ds_.y.segment(off, m) - mean_i);
  }
  if (!(quad >= 0.0)) fail(ErrorCode::numeric, "omega2 update: negative quadratic form");
  double n_obs = static_cast<double>(m) * ds_.total_reps();
  double draw = draw_variance_conditional(priors_.omega2, quad, n_obs, rng);
  st.omega2 = draw;
  return draw;
}

double FitEngine::loglik_with(Ctx& ctx, const ParamState& st) const {
  const long m = d_.rows_per_rep();
  const double base =
      -0.5 * (m * std::log(2.0 * M_PI) + m * std::log(st.omega2) + ctx.logdet_kernel);
  double ll = 0.0;
  long off = 0;
  for (int i = 0; i < d_.blocks(); ++i) {
    Vector mean_i = block_mean(d_, st, i);
    for (int j = 0; j < ds_.block_reps[i]; ++j, off += m)
      ll += base - 0.5 * ctx.kernel_quad(ds_.y.segment(off, m) - mean_i) / st.omega2;
  }
  return ll;
}

double FitEngine::loglik(const ParamState& st) {
  sync_cov(st);
  return loglik_with(*ctx_, st);
}

std::pair<double, bool> FitEngine::mh_update_range(ParamState& st, RangeParam which, double step,
                                                   RngStream& rng, double* alpha_out,
                                                   double* io_loglik) {
  sync_cov(st);
  const bool is_phi = (which == RangeParam::phi);
  const GammaPrior& prior = is_phi ? priors_.phi_prior : priors_.varphi_prior;
  double cur = is_phi ? st.phi : st.varphi;

  double ll_cur = (io_loglik && std::isfinite(*io_loglik)) ? *io_loglik : loglik_with(*ctx_, st);
  double lp_cur = ll_cur + logpdf_gamma(cur, prior.shape, prior.scale) + std::log(cur);

  // multiplicative form keeps a zero-step self-proposal bit-exact
  double prop = cur * std::exp(step * rng.normal());
  double lprop = std::log(prop);
  ParamState prop_st = st;
  (is_phi ? prop_st.phi : prop_st.varphi) = prop;
  Ctx prop_ctx = build_ctx(prop_st.kappa, prop_st.phi, prop_st.varphi);
  double ll_prop = loglik_with(prop_ctx, prop_st);
  double lp_prop = ll_prop + logpdf_gamma(prop, prior.shape, prior.scale) + lprop;

  double log_ratio = lp_prop - lp_cur;
  if (alpha_out) *alpha_out = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
  bool accept = std::log(1.0 - rng.uniform()) < log_ratio;
  if (accept) {
    (is_phi ? st.phi : st.varphi) = prop;
    *ctx_ = std::move(prop_ctx);
    if (io_loglik) *io_loglik = ll_prop;
    return {prop, true};
  }
  if (io_loglik) *io_loglik = ll_cur;
  return {cur, false};
}

void FitEngine::sweep(ParamState& st, RngStream& rng, double step_phi, double step_varphi,
                      double* alpha_phi, double* alpha_varphi, bool* acc_phi, bool* acc_varphi) {
  update_beta(st, rng);
  for (int i = 0; i < d_.blocks(); ++i) update_theta_block(st, i, rng);
  for (int i = 0; i < d_.blocks(); ++i) update_vartheta_block(st, i, rng);
  for (int i = 0; i < d_.blocks(); ++i) update_sigma2_theta(st, i, rng);
  for (int i = 0; i < d_.blocks(); ++i) update_sigma2_vartheta(st, i, rng);
  update_omega2(st, rng);
  double carried = std::numeric_limits<double>::quiet_NaN();
  auto [v1, a1] = mh_update_range(st, RangeParam::phi, step_phi, rng, alpha_phi, &carried);
  auto [v2, a2] = mh_update_range(st, RangeParam::varphi, step_varphi, rng, alpha_varphi, &carried);
  if (acc_phi) *acc_phi = a1;
  if (acc_varphi) *acc_varphi = a2;
}

ChainSamples run_chain(const Dataset& ds, const DesignSet& d, const PriorConfig& priors,
                       const McmcConfig& cfg, double kappa, std::uint64_t seed,
                       std::uint64_t stream, int chain_index) {
  cfg.validate();
  FitEngine engine(ds, d, priors, cfg.path);

  ParamState st;
  if (!cfg.init.empty()) {
    st = cfg.init[chain_index % cfg.init.size()];
    ParamState zeros = zero_state(d, kappa);
    if (st.beta.size() == 0) st.beta = zeros.beta;
    if (st.theta.empty()) st.theta = zeros.theta;
    if (st.vartheta.empty()) st.vartheta = zeros.vartheta;
    if (st.sigma2_theta.size() == 0) st.sigma2_theta = Vector::Ones(d.blocks());
    if (st.sigma2_vartheta.size() == 0) st.sigma2_vartheta = Vector::Ones(d.blocks());
    // length-1 scalars from configs broadcast across blocks
    if (st.sigma2_theta.size() == 1 && d.blocks() > 1)
      st.sigma2_theta = Vector::Constant(d.blocks(), st.sigma2_theta[0]);
    if (st.sigma2_vartheta.size() == 1 && d.blocks() > 1)
      st.sigma2_vartheta = Vector::Constant(d.blocks(), st.sigma2_vartheta[0]);
  } else {
    st = default_init(d, kappa, chain_index);
  }
  st.kappa = kappa;
  if (!st.all_finite()) fail(ErrorCode::config, "mcmc: invalid initial state");

  RngStream rng(seed, stream);
  ChainSamples out;
  out.n_iter = cfg.n_iter;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.seed = seed;
  out.stream = stream;
  out.kappa = kappa;
  out.k_mu = d.k_mu;
  out.k_zeta = d.k_zeta;
  out.k_gamma = d.k_gamma;
  out.blocks = d.blocks();
  out.draws.reserve((cfg.n_iter - cfg.burn_in) / cfg.thin);

  double log_step_phi = std::log(cfg.mh_step_phi);
  double log_step_varphi = std::log(cfg.mh_step_varphi);
  constexpr double kTargetAcceptance = 0.35;
  constexpr double kLogStepMin = -7.0, kLogStepMax = 2.0;
  long n_acc_phi = 0, n_acc_varphi = 0, n_post = 0;

  for (long iter = 1; iter <= cfg.n_iter; ++iter) {
    double alpha_phi = 0.0, alpha_varphi = 0.0;
    bool acc_phi = false, acc_varphi = false;
    try {
      engine.sweep(st, rng, std::exp(log_step_phi), std::exp(log_step_varphi), &alpha_phi,
                   &alpha_varphi, &acc_phi, &acc_varphi);
    } catch (const Error& e) {
      // numerical abort mid-sweep: either propagate or keep the partial chain
      if (!cfg.keep_partial_on_divergence) throw;
      std::ostringstream msg;
      msg << e.what() << " (iteration " << iter << ")";
      out.failed = true;
      out.fail_error = msg.str();
      break;
    }

    if (!st.all_finite()) {
      std::ostringstream msg;
      msg << "mcmc: chain diverged to a non-finite state at iteration " << iter;
      if (!cfg.keep_partial_on_divergence) fail(ErrorCode::numeric, msg.str());
      out.failed = true;
      out.fail_error = msg.str();
      break;
    }

    if (cfg.adapt && iter <= cfg.burn_in) {
      double gain = 1.0 / std::pow(static_cast<double>(iter), 0.6);
      log_step_phi =
          std::clamp(log_step_phi + gain * (alpha_phi - kTargetAcceptance), kLogStepMin, kLogStepMax);
      log_step_varphi = std::clamp(log_step_varphi + gain * (alpha_varphi - kTargetAcceptance),
                                   kLogStepMin, kLogStepMax);
    }
    if (iter > cfg.burn_in) {
      ++n_post;
      n_acc_phi += acc_phi ? 1 : 0;
      n_acc_varphi += acc_varphi ? 1 : 0;
      if ((iter - cfg.burn_in) % cfg.thin == 0) {
        out.draws.push_back(st);
        out.logliks.push_back(engine.loglik(st));
      }
    }
  }
  out.accept_phi = n_post > 0 ? static_cast<double>(n_acc_phi) / n_post : 0.0;
  out.accept_varphi = n_post > 0 ? static_cast<double>(n_acc_varphi) / n_post : 0.0;
  out.step_phi = std::exp(log_step_phi);
  out.step_varphi = std::exp(log_step_varphi);
  return out;
}

std::vector<ChainSamples> run_chains(const Dataset& ds, const DesignSet& d,
                                     const PriorConfig& priors, const McmcConfig& cfg,
                                     double kappa, std::uint64_t seed, std::uint64_t base_stream,
                                     int threads) {
  cfg.validate();
  std::vector<ChainSamples> chains(cfg.n_chains);
  parallel_for(cfg.n_chains, threads, [&](int c) {
    chains[c] = run_chain(ds, d, priors, cfg, kappa, seed, base_stream + c, c);
  });
  return chains;
}

}  // namespace stfm
