#include "config.hpp"

#include <fstream>

#include "errors.hpp"

namespace stfm {

namespace {

[[noreturn]] void bad_config(const std::string& what) { fail(ErrorCode::config, "config: " + what); }

double get_pos(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  double v = j.at(key).get<double>();
  if (!(v > 0.0)) bad_config(std::string(key) + " must be positive");
  return v;
}

VariancePrior parse_variance_prior(const json& j, const char* what) {
  VariancePrior p;
  if (!j.is_object()) bad_config(std::string(what) + " prior must be an object");
  std::string family = j.value("family", "inverse_gamma");
  if (family == "inverse_gamma") {
    p.family = VariancePriorFamily::inverse_gamma;
    p.p1 = j.value("a", 0.01);
    p.p2 = j.value("b", 0.01);
  } else if (family == "scaled_inv_chisq") {
    p.family = VariancePriorFamily::scaled_inv_chisq;
    p.p1 = j.value("v", 0.01);
    p.p2 = j.value("s2", 0.01);
  } else {
    bad_config(std::string(what) + ": unknown prior family '" + family + "'");
  }
  if (!(p.p1 > 0.0) || !(p.p2 > 0.0)) bad_config(std::string(what) + ": nonpositive hyperparameter");
  return p;
}

std::vector<VariancePrior> parse_variance_prior_list(const json& j, const char* what) {
  std::vector<VariancePrior> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(parse_variance_prior(e, what));
    if (out.empty()) bad_config(std::string(what) + ": empty prior list");
  } else {
    out.push_back(parse_variance_prior(j, what));
  }
  return out;
}

GammaPrior parse_gamma_prior(const json& j, const char* what) {
  GammaPrior p;
  p.shape = get_pos(j, "shape", 1.0);
  p.scale = get_pos(j, "scale", 1.0);
  (void)what;
  return p;
}

DistanceMetric parse_metric(const json& j) {
  std::string m = j.value("distance_metric", "euclidean_degrees");
  if (m == "euclidean_degrees") return DistanceMetric::euclidean_degrees;
  if (m == "haversine_km") return DistanceMetric::haversine_km;
  bad_config("distance_metric must be 'euclidean_degrees' or 'haversine_km'");
}

IngestOptions parse_ingest(const json& j) {
  IngestOptions opt;
  if (!j.is_object()) return opt;
  opt.month_names = j.value("month_names", false);
  opt.jitter = j.value("jitter", 0.0);
  if (opt.jitter < 0.0) bad_config("ingest.jitter must be nonnegative");
  return opt;
}

}  // namespace

PriorConfig default_priors() {
  PriorConfig p;
  p.beta_var = 1e3;
  p.sigma2_theta = {{VariancePriorFamily::inverse_gamma, 0.01, 0.01}};
  p.sigma2_vartheta = {{VariancePriorFamily::inverse_gamma, 0.01, 0.01}};
  p.omega2 = {VariancePriorFamily::inverse_gamma, 0.01, 0.01};
  p.phi_prior = {1.0, 1000.0};
  p.varphi_prior = {1.0, 100.0};
  return p;
}

McmcConfig desk_mcmc_defaults() {
  McmcConfig m;
  m.n_iter = 6000;
  m.burn_in = 3000;
  m.thin = 5;
  m.n_chains = 2;
  return m;
}

PriorConfig parse_priors(const json& j) {
  PriorConfig p = default_priors();
  if (j.is_null()) return p;
  if (!j.is_object()) bad_config("priors must be an object");
  if (j.contains("beta_mean")) {
    const auto& bm = j.at("beta_mean");
    if (bm.is_number()) {
      p.beta_mean = Vector::Constant(1, bm.get<double>());
    } else if (bm.is_array()) {
      p.beta_mean.resize(bm.size());
      for (std::size_t k = 0; k < bm.size(); ++k) p.beta_mean[k] = bm[k].get<double>();
    } else {
      bad_config("beta_mean must be a number or array");
    }
  }
  p.beta_var = get_pos(j, "beta_var", p.beta_var);
  if (j.contains("sigma2_theta"))
    p.sigma2_theta = parse_variance_prior_list(j.at("sigma2_theta"), "sigma2_theta");
  if (j.contains("sigma2_vartheta"))
    p.sigma2_vartheta = parse_variance_prior_list(j.at("sigma2_vartheta"), "sigma2_vartheta");
  if (j.contains("omega2")) p.omega2 = parse_variance_prior(j.at("omega2"), "omega2");
  if (j.contains("phi")) p.phi_prior = parse_gamma_prior(j.at("phi"), "phi");
  if (j.contains("varphi")) p.varphi_prior = parse_gamma_prior(j.at("varphi"), "varphi");
  return p;
}

McmcConfig parse_mcmc(const json& j) {
  McmcConfig m;
  if (j.is_null()) return m;
  if (!j.is_object()) bad_config("mcmc must be an object");
  m.n_iter = j.value("n_iter", m.n_iter);
  m.burn_in = j.value("burn_in", m.burn_in);
  m.thin = j.value("thin", m.thin);
  m.n_chains = j.value("n_chains", m.n_chains);
  m.mh_step_phi = j.value("mh_step_phi", m.mh_step_phi);
  m.mh_step_varphi = j.value("mh_step_varphi", m.mh_step_varphi);
  m.adapt = j.value("adapt", m.adapt);
  std::string path = j.value("path", "kronecker");
  if (path == "kronecker")
    m.path = CovPath::kronecker;
  else if (path == "dense")
    m.path = CovPath::dense;
  else
    bad_config("mcmc.path must be 'kronecker' or 'dense'");
  if (j.contains("init")) {
    if (!j.at("init").is_array()) bad_config("mcmc.init must be an array of scalar maps");
    for (const auto& e : j.at("init")) {
      ParamState st;
      st.omega2 = get_pos(e, "omega2", 1.0);
      st.phi = get_pos(e, "phi", 1.0);
      st.varphi = get_pos(e, "varphi", 1.0);
      double s2t = get_pos(e, "sigma2_theta", 1.0);
      double s2v = get_pos(e, "sigma2_vartheta", 1.0);
      // block counts are unknown here; stored as length-1 and broadcast later
      st.sigma2_theta = Vector::Constant(1, s2t);
      st.sigma2_vartheta = Vector::Constant(1, s2v);
      m.init.push_back(std::move(st));
    }
  }
  m.validate();
  return m;
}

SimConfig parse_sim(const json& j) {
  SimConfig s;
  if (j.is_null()) return s;
  if (!j.is_object()) bad_config("sim must be an object");
  s.n = j.value("n", s.n);
  s.tau = j.value("tau", s.tau);
  if (j.contains("block_reps")) s.block_reps = j.at("block_reps").get<std::vector<int>>();
  s.k_mu = j.value("k_mu", s.k_mu);
  s.k_zeta = j.value("k_zeta", s.k_zeta);
  s.k_gamma = j.value("k_gamma", s.k_gamma);
  s.omega2 = j.value("omega2", s.omega2);
  if (j.contains("sigma2_theta")) s.sigma2_theta = j.at("sigma2_theta").get<std::vector<double>>();
  if (j.contains("sigma2_vartheta"))
    s.sigma2_vartheta = j.at("sigma2_vartheta").get<std::vector<double>>();
  s.varphi = j.value("varphi", s.varphi);
  s.phi = j.value("phi", s.phi);
  s.kappa = j.value("kappa", s.kappa);
  s.beta_scale = j.value("beta_scale", s.beta_scale);
  if (j.contains("lat_range")) {
    s.lat_min = j.at("lat_range").at(0).get<double>();
    s.lat_max = j.at("lat_range").at(1).get<double>();
  }
  if (j.contains("lon_range")) {
    s.lon_min = j.at("lon_range").at(0).get<double>();
    s.lon_max = j.at("lon_range").at(1).get<double>();
  }
  if (j.contains("times")) s.times = j.at("times").get<std::vector<double>>();
  s.domain_margin = j.value("domain_margin", s.domain_margin);
  s.metric = parse_metric(j);
  s.validate();
  return s;
}

FitConfig parse_fit_config(const json& j) {
  FitConfig f;
  if (!j.is_object()) bad_config("fit config must be an object");
  if (!j.contains("dataset")) bad_config("fit config needs a 'dataset' path");
  f.dataset_path = j.at("dataset").get<std::string>();
  f.kappa = get_pos(j, "kappa", f.kappa);
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    f.basis.k_mu = b.value("k_mu", f.basis.k_mu);
    f.basis.k_zeta = b.value("k_zeta", f.basis.k_zeta);
    f.basis.k_gamma = b.value("k_gamma", f.basis.k_gamma);
  }
  if (f.basis.k_mu < 4 || f.basis.k_zeta < 4 || f.basis.k_gamma < 4)
    bad_config("basis counts must be >= 4");
  f.domain_margin = j.value("domain_margin", f.domain_margin);
  if (f.domain_margin < 0.0) bad_config("domain_margin must be nonnegative");
  f.priors = parse_priors(j.contains("priors") ? j.at("priors") : json());
  f.mcmc = parse_mcmc(j.contains("mcmc") ? j.at("mcmc") : json());
  f.seed = j.value("seed", f.seed);
  f.threads = j.value("threads", f.threads);
  f.metric = parse_metric(j);
  if (j.contains("ingest")) f.ingest = parse_ingest(j.at("ingest"));
  return f;
}

SimulateConfig parse_simulate_config(const json& j) {
  SimulateConfig s;
  s.sim = parse_sim(j);
  s.seed = j.value("seed", s.seed);
  return s;
}

SelectConfig parse_select_config(const json& j) {
  SelectConfig s;
  if (!j.contains("dataset")) bad_config("select config needs a 'dataset' path");
  s.dataset_path = j.at("dataset").get<std::string>();
  if (j.contains("kappa_grid"))
    s.grid.kappa_grid = j.at("kappa_grid").get<std::vector<double>>();
  else
    s.grid.kappa_grid = {0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  if (!j.contains("basis_grid")) bad_config("select config needs 'basis_grid'");
  for (const auto& b : j.at("basis_grid")) {
    BasisCounts bc;
    bc.k_mu = b.value("k_mu", bc.k_mu);
    bc.k_zeta = b.value("k_zeta", bc.k_zeta);
    bc.k_gamma = b.value("k_gamma", bc.k_gamma);
    s.grid.basis_grid.push_back(bc);
  }
  s.grid.priors = parse_priors(j.contains("priors") ? j.at("priors") : json());
  s.grid.mcmc = parse_mcmc(j.contains("mcmc") ? j.at("mcmc") : json());
  s.grid.domain_margin = j.value("domain_margin", s.grid.domain_margin);
  s.grid.seed = j.value("seed", s.grid.seed);
  s.grid.threads = j.value("threads", s.grid.threads);
  s.metric = parse_metric(j);
  std::string unit = j.value("cpo_unit", "per_rep");
  if (unit == "per_rep")
    s.grid.cpo = CpoUnit::per_rep;
  else if (unit == "per_scalar")
    s.grid.cpo = CpoUnit::per_scalar;
  else
    bad_config("cpo_unit must be 'per_rep' or 'per_scalar'");
  if (j.contains("ingest")) s.ingest = parse_ingest(j.at("ingest"));
  return s;
}

PredictConfig parse_predict_config(const json& j) {
  PredictConfig p;
  if (!j.contains("run_dir")) bad_config("predict config needs 'run_dir' (a fit output directory)");
  p.run_dir = j.at("run_dir").get<std::string>();
  if (!j.contains("dataset")) bad_config("predict config needs the 'dataset' path used by the fit");
  p.dataset_path = j.at("dataset").get<std::string>();
  if (!j.contains("target")) bad_config("predict config needs a 'target'");
  const auto& t = j.at("target");
  int block = t.value("block", 1);
  if (block < 1) bad_config("target.block is 1-based");
  p.target.block = block - 1;
  if (!t.contains("lat") || !t.contains("lon")) bad_config("target needs lat and lon");
  p.target.lat = t.at("lat").get<double>();
  p.target.lon = t.at("lon").get<double>();
  if (t.contains("times")) p.target.times = t.at("times").get<std::vector<double>>();
  std::string mode = t.value("mode", "new_rep_existing_block");
  if (mode == "new_rep_existing_block")
    p.target.mode = PredictMode::new_rep_existing_block;
  else if (mode == "new_location")
    p.target.mode = PredictMode::new_location;
  else
    bad_config("target.mode must be 'new_rep_existing_block' or 'new_location'");
  p.level = j.value("level", p.level);
  if (!(p.level > 0.0) || !(p.level < 1.0)) bad_config("level must lie in (0,1)");
  p.seed = j.value("seed", p.seed);
  if (j.contains("ingest")) p.ingest = parse_ingest(j.at("ingest"));
  return p;
}

StudyConfig parse_study_config(const json& j) {
  StudyConfig s;
  std::string name = j.value("study", "prior_sensitivity");
  if (name == "prior_sensitivity")
    s.study = StudyName::prior_sensitivity;
  else if (name == "size_sensitivity")
    s.study = StudyName::size_sensitivity;
  else if (name == "kappa_recovery")
    s.study = StudyName::kappa_recovery;
  else if (name == "prediction")
    s.study = StudyName::prediction;
  else
    bad_config("unknown study '" + name + "'");
  s.sim = parse_sim(j.contains("sim") ? j.at("sim") : json());
  s.priors = parse_priors(j.contains("priors") ? j.at("priors") : json());
  s.mcmc = parse_mcmc(j.contains("mcmc") ? j.at("mcmc") : json());
  s.replicates = j.value("replicates", s.replicates);
  if (s.replicates < 1) bad_config("replicates must be positive");
  s.seed = j.value("seed", s.seed);
  s.threads = j.value("threads", s.threads);
  s.level = j.value("level", s.level);
  if (j.contains("kappa_grid")) s.kappa_grid = j.at("kappa_grid").get<std::vector<double>>();
  if (j.contains("n_grid")) s.n_grid = j.at("n_grid").get<std::vector<int>>();
  if (j.contains("tau_grid")) s.tau_grid = j.at("tau_grid").get<std::vector<int>>();
  if (j.contains("j_grid")) s.j_grid = j.at("j_grid").get<std::vector<std::vector<int>>>();
  if (j.contains("prior_grid")) {
    for (const auto& e : j.at("prior_grid")) {
      NamedPrior np;
      np.label = e.value("label", "prior_" + std::to_string(s.prior_grid.size() + 1));
      np.priors = parse_priors(e.contains("priors") ? e.at("priors") : json());
      s.prior_grid.push_back(np);
    }
  }
  return s;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::parse, "invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

std::string config_digest(const json& j) {
  std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stfm
