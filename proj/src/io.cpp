#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace stfm {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& field, const char* what, long line) {
  double v;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    std::ostringstream msg;
    msg << "dataset: non-numeric " << what << " '" << field << "' at line " << line;
    fail(ErrorCode::parse, msg.str());
  }
  return v;
}

long parse_long(const std::string& field, const char* what, long line) {
  long v;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    std::ostringstream msg;
    msg << "dataset: non-integer " << what << " '" << field << "' at line " << line;
    fail(ErrorCode::parse, msg.str());
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Oct..Mar -> 1..6 (the rainy-season window), other months keep calendar order.
double month_name_to_time(const std::string& name, long line) {
  static const std::map<std::string, double> kMonths = {
      {"oct", 1}, {"nov", 2}, {"dec", 3}, {"jan", 4}, {"feb", 5}, {"mar", 6},
      {"apr", 7}, {"may", 8}, {"jun", 9}, {"jul", 10}, {"aug", 11}, {"sep", 12}};
  std::string key = name.substr(0, 3);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  auto it = kMonths.find(key);
  if (it == kMonths.end()) {
    std::ostringstream msg;
    msg << "dataset: unknown month name '" << name << "' at line " << line;
    fail(ErrorCode::parse, msg.str());
  }
  return it->second;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& content, const IngestOptions& opt) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, "dataset: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "block_id,rep_id,station_id,lat,lon,time,value")
    fail(ErrorCode::parse,
         "dataset: expected header 'block_id,rep_id,station_id,lat,lon,time,value', got '" + line +
             "'");

  struct Row {
    int block, rep;
    std::string station;
    double lat, lon, time, value;
  };
  std::vector<Row> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7) {
      std::ostringstream msg;
      msg << "dataset: expected 7 fields at line " << line_no << ", got " << f.size();
      fail(ErrorCode::parse, msg.str());
    }
    Row r;
    r.block = static_cast<int>(parse_long(f[0], "block_id", line_no));
    r.rep = static_cast<int>(parse_long(f[1], "rep_id", line_no));
    r.station = f[2];
    r.lat = parse_double(f[3], "lat", line_no);
    r.lon = parse_double(f[4], "lon", line_no);
    r.time = opt.month_names ? month_name_to_time(f[5], line_no)
                             : parse_double(f[5], "time", line_no);
    r.value = parse_double(f[6], "value", line_no);
    if (r.block < 1 || r.rep < 1) fail(ErrorCode::parse, "dataset: block_id and rep_id are 1-based");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) fail(ErrorCode::parse, "dataset: no data rows");

  // stations sorted by id (canonical order, independent of row order in the
  // file); coordinates must be consistent
  Dataset ds;
  std::map<std::string, Station> by_id;
  for (const auto& r : rows) {
    auto [it, inserted] = by_id.try_emplace(r.station, Station{r.station, r.lat, r.lon});
    if (!inserted && (it->second.lat != r.lat || it->second.lon != r.lon))
      fail(ErrorCode::config, "dataset: inconsistent coordinates for station '" + r.station + "'");
  }
  std::map<std::string, int> station_idx;
  for (const auto& [id, st] : by_id) {
    station_idx[id] = static_cast<int>(ds.stations.size());
    ds.stations.push_back(st);
  }
  if (opt.jitter > 0.0) {
    std::set<std::pair<double, double>> seen;
    for (std::size_t k = 0; k < ds.stations.size(); ++k)
      if (!seen.insert({ds.stations[k].lat, ds.stations[k].lon}).second)
        ds.stations[k].lat += opt.jitter * static_cast<double>(k + 1);
  }

  std::set<double> time_set;
  int max_block = 0;
  std::map<int, int> max_rep;
  for (const auto& r : rows) {
    time_set.insert(r.time);
    max_block = std::max(max_block, r.block);
    max_rep[r.block] = std::max(max_rep[r.block], r.rep);
  }
  ds.times.assign(time_set.begin(), time_set.end());
  ds.block_reps.resize(max_block);
  for (int b = 1; b <= max_block; ++b) {
    if (!max_rep.count(b)) fail(ErrorCode::config, "dataset: no rows for block " + std::to_string(b));
    ds.block_reps[b - 1] = max_rep[b];
  }

  std::map<double, int> time_idx;
  for (std::size_t s = 0; s < ds.times.size(); ++s) time_idx[ds.times[s]] = static_cast<int>(s);

  const long m = ds.rows_per_rep();
  const long total = static_cast<long>(ds.total_reps()) * m;
  ds.y.resize(total);
  std::vector<char> filled(total, 0);
  std::vector<std::string> duplicates;
  for (const auto& r : rows) {
    long off = ds.rep_offset(r.block - 1, r.rep - 1) +
               static_cast<long>(station_idx[r.station]) * ds.tau() + time_idx[r.time];
    if (filled[off]) {
      if (duplicates.size() < 10) {
        std::ostringstream cell;
        cell << "(block " << r.block << ", rep " << r.rep << ", station " << r.station << ", time "
             << format_double(r.time) << ")";
        duplicates.push_back(cell.str());
      }
      continue;
    }
    filled[off] = 1;
    ds.y[off] = r.value;
  }
  if (!duplicates.empty()) {
    std::ostringstream msg;
    msg << "dataset: duplicate cells:";
    for (const auto& c : duplicates) msg << " " << c;
    fail(ErrorCode::config, msg.str());
  }
  std::vector<std::string> missing;
  for (long off = 0; off < total && missing.size() < 10; ++off) {
    if (filled[off]) continue;
    long rep_global = off / m;
    long within = off % m;
    int station = static_cast<int>(within / ds.tau());
    int time = static_cast<int>(within % ds.tau());
    int block = 0;
    long reps_seen = 0;
    while (rep_global >= reps_seen + ds.block_reps[block]) reps_seen += ds.block_reps[block++];
    std::ostringstream cell;
    cell << "(block " << block + 1 << ", rep " << rep_global - reps_seen + 1 << ", station "
         << ds.stations[station].id << ", time " << format_double(ds.times[time]) << ")";
    missing.push_back(cell.str());
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "dataset: missing cells:";
    for (const auto& c : missing) msg << " " << c;
    fail(ErrorCode::config, msg.str());
  }
  ds.validate();
  return ds;
}

Dataset read_dataset_csv(const std::string& path, const IngestOptions& opt) {
  return parse_dataset_csv(read_text_file(path), opt);
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "block_id,rep_id,station_id,lat,lon,time,value\n";
  long off = 0;
  for (int i = 0; i < ds.blocks(); ++i)
    for (int j = 0; j < ds.block_reps[i]; ++j)
      for (int r = 0; r < ds.n(); ++r)
        for (int s = 0; s < ds.tau(); ++s, ++off)
          out << i + 1 << ',' << j + 1 << ',' << ds.stations[r].id << ','
              << format_double(ds.stations[r].lat) << ',' << format_double(ds.stations[r].lon)
              << ',' << format_double(ds.times[s]) << ',' << format_double(ds.y[off]) << '\n';
  return out.str();
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_to_csv(ds));
}

std::string dataset_digest(const Dataset& ds) {
  std::string csv = dataset_to_csv(ds);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : csv) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> chain_column_names(int k_mu, int k_zeta, int k_gamma, int blocks) {
  std::vector<std::string> names;
  for (long k = 0; k < static_cast<long>(k_mu) * k_mu * k_mu; ++k)
    names.push_back("beta_" + std::to_string(k + 1));
  for (int i = 0; i < blocks; ++i)
    for (int k = 0; k < k_zeta * k_zeta; ++k)
      names.push_back("theta_" + std::to_string(i + 1) + "_" + std::to_string(k + 1));
  for (int i = 0; i < blocks; ++i)
    for (int k = 0; k < k_gamma; ++k)
      names.push_back("vartheta_" + std::to_string(i + 1) + "_" + std::to_string(k + 1));
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_theta_" + std::to_string(i + 1));
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_vartheta_" + std::to_string(i + 1));
  names.push_back("omega2");
  names.push_back("phi");
  names.push_back("varphi");
  return names;
}

std::string chain_to_csv(const ChainSamples& chain) {
  const int blocks = chain.blocks;
  std::ostringstream out;
  out << "#config_digest=" << chain.config_digest << '\n';
  out << "iter";
  for (const auto& name : chain_column_names(chain.k_mu, chain.k_zeta, chain.k_gamma, blocks))
    out << ',' << name;
  out << ",loglik\n";
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    const ParamState& st = chain.draws[t];
    out << chain.burn_in + static_cast<long>(t + 1) * chain.thin;
    for (long k = 0; k < st.beta.size(); ++k) out << ',' << format_double(st.beta[k]);
    for (const auto& th : st.theta)
      for (long k = 0; k < th.size(); ++k) out << ',' << format_double(th[k]);
    for (const auto& vt : st.vartheta)
      for (long k = 0; k < vt.size(); ++k) out << ',' << format_double(vt[k]);
    for (long i = 0; i < st.sigma2_theta.size(); ++i)
      out << ',' << format_double(st.sigma2_theta[i]);
    for (long i = 0; i < st.sigma2_vartheta.size(); ++i)
      out << ',' << format_double(st.sigma2_vartheta[i]);
    out << ',' << format_double(st.omega2) << ',' << format_double(st.phi) << ','
        << format_double(st.varphi) << ',' << format_double(chain.logliks[t]) << '\n';
  }
  return out.str();
}

void write_chain(const ChainSamples& chain, const std::string& csv_path,
                 const std::string& meta_path) {
  write_text_file(csv_path, chain_to_csv(chain));
  json meta;
  meta["seed"] = chain.seed;
  meta["stream"] = chain.stream;
  meta["config_digest"] = chain.config_digest;
  meta["dataset_digest"] = chain.dataset_digest;
  meta["n_iter"] = chain.n_iter;
  meta["burn_in"] = chain.burn_in;
  meta["thin"] = chain.thin;
  meta["kappa"] = chain.kappa;
  meta["k_mu"] = chain.k_mu;
  meta["k_zeta"] = chain.k_zeta;
  meta["k_gamma"] = chain.k_gamma;
  meta["acceptance"] = {{"phi", chain.accept_phi}, {"varphi", chain.accept_varphi}};
  meta["mh_steps"] = {{"phi", chain.step_phi}, {"varphi", chain.step_varphi}};
  write_text_file(meta_path, meta.dump(2) + "\n");
}

ChainSamples read_chain(const std::string& csv_path, const std::string& meta_path) {
  ChainSamples chain;
  json meta = load_json_file(meta_path);
  chain.seed = meta.value("seed", 0ull);
  chain.stream = meta.value("stream", 0ull);
  chain.config_digest = meta.value("config_digest", "");
  chain.dataset_digest = meta.value("dataset_digest", "");
  chain.n_iter = meta.value("n_iter", 0l);
  chain.burn_in = meta.value("burn_in", 0l);
  chain.thin = meta.value("thin", 1);
  chain.kappa = meta.value("kappa", 0.5);
  chain.k_mu = meta.value("k_mu", 0);
  chain.k_zeta = meta.value("k_zeta", 0);
  chain.k_gamma = meta.value("k_gamma", 0);
  if (meta.contains("acceptance")) {
    chain.accept_phi = meta["acceptance"].value("phi", 0.0);
    chain.accept_varphi = meta["acceptance"].value("varphi", 0.0);
  }

  std::istringstream in(read_text_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, "chain: empty file " + csv_path);
  if (line.rfind("#config_digest=", 0) == 0) {
    std::string digest = line.substr(15);
    if (!chain.config_digest.empty() && digest != chain.config_digest)
      fail(ErrorCode::config, "chain: CSV digest disagrees with metadata in " + csv_path);
    if (!std::getline(in, line)) fail(ErrorCode::parse, "chain: missing header in " + csv_path);
  }
  auto header = split_csv_line(line);
  const int blocks =
      static_cast<int>(std::count_if(header.begin(), header.end(), [](const std::string& h) {
        return h.rfind("sigma2_theta_", 0) == 0;
      }));
  if (blocks == 0 || chain.k_mu < 4)
    fail(ErrorCode::parse, "chain: malformed header or metadata in " + csv_path);
  chain.blocks = blocks;
  auto expected = chain_column_names(chain.k_mu, chain.k_zeta, chain.k_gamma, blocks);
  if (header.size() != expected.size() + 2 || header.front() != "iter" || header.back() != "loglik")
    fail(ErrorCode::parse, "chain: unexpected column layout in " + csv_path);

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size())
      fail(ErrorCode::parse, "chain: ragged row in " + csv_path);
    ParamState st;
    std::size_t pos = 1;
    long beta_dim = static_cast<long>(chain.k_mu) * chain.k_mu * chain.k_mu;
    st.beta.resize(beta_dim);
    for (long k = 0; k < beta_dim; ++k) st.beta[k] = parse_double(f[pos++], "beta", line_no);
    st.theta.assign(blocks, Vector(chain.k_zeta * chain.k_zeta));
    for (int i = 0; i < blocks; ++i)
      for (int k = 0; k < chain.k_zeta * chain.k_zeta; ++k)
        st.theta[i][k] = parse_double(f[pos++], "theta", line_no);
    st.vartheta.assign(blocks, Vector(chain.k_gamma));
    for (int i = 0; i < blocks; ++i)
      for (int k = 0; k < chain.k_gamma; ++k)
        st.vartheta[i][k] = parse_double(f[pos++], "vartheta", line_no);
    st.sigma2_theta.resize(blocks);
    for (int i = 0; i < blocks; ++i)
      st.sigma2_theta[i] = parse_double(f[pos++], "sigma2_theta", line_no);
    st.sigma2_vartheta.resize(blocks);
    for (int i = 0; i < blocks; ++i)
      st.sigma2_vartheta[i] = parse_double(f[pos++], "sigma2_vartheta", line_no);
    st.omega2 = parse_double(f[pos++], "omega2", line_no);
    st.phi = parse_double(f[pos++], "phi", line_no);
    st.varphi = parse_double(f[pos++], "varphi", line_no);
    st.kappa = chain.kappa;
    chain.logliks.push_back(parse_double(f[pos++], "loglik", line_no));
    chain.draws.push_back(std::move(st));
  }
  return chain;
}

void write_summary_csv(const std::vector<ParameterSummary>& rows, const std::string& path,
                       const std::string& digest) {
  std::ostringstream out;
  out << "#config_digest=" << digest << '\n';
  out << "param,median,mean,sd,q025,q975,rhat,ess\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_double(r.median) << ',' << format_double(r.mean) << ','
        << format_double(r.sd) << ',' << format_double(r.q025) << ',' << format_double(r.q975)
        << ',' << format_double(r.rhat) << ',' << format_double(r.ess) << '\n';
  write_text_file(path, out.str());
}

void write_selection_csv(const SelectionReport& report, const std::string& path,
                         const std::string& digest) {
  std::ostringstream out;
  out << "#config_digest=" << digest << '\n';
  out << "kappa,k_mu,k_zeta,k_gamma,lpml,dic7,rank_lpml,rank_dic7,failed\n";
  for (const auto& c : report.cells)
    out << format_double(c.kappa) << ',' << c.basis.k_mu << ',' << c.basis.k_zeta << ','
        << c.basis.k_gamma << ',' << (c.failed ? "" : format_double(c.lpml)) << ','
        << (c.failed ? "" : format_double(c.dic7)) << ',' << c.rank_lpml << ',' << c.rank_dic7
        << ',' << (c.failed ? 1 : 0) << '\n';
  write_text_file(path, out.str());
}

SelectionReport read_selection_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, "selection: empty file " + path);
  if (line.rfind("#config_digest=", 0) == 0)
    if (!std::getline(in, line)) fail(ErrorCode::parse, "selection: missing header in " + path);
  if (line != "kappa,k_mu,k_zeta,k_gamma,lpml,dic7,rank_lpml,rank_dic7,failed")
    fail(ErrorCode::parse, "selection: unexpected header in " + path);
  SelectionReport report;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 9) fail(ErrorCode::parse, "selection: ragged row in " + path);
    SelectionCell c;
    c.kappa = parse_double(f[0], "kappa", line_no);
    c.basis.k_mu = static_cast<int>(parse_long(f[1], "k_mu", line_no));
    c.basis.k_zeta = static_cast<int>(parse_long(f[2], "k_zeta", line_no));
    c.basis.k_gamma = static_cast<int>(parse_long(f[3], "k_gamma", line_no));
    c.failed = parse_long(f[8], "failed", line_no) != 0;
    if (!c.failed) {
      c.lpml = parse_double(f[4], "lpml", line_no);
      c.dic7 = parse_double(f[5], "dic7", line_no);
    }
    c.rank_lpml = static_cast<int>(parse_long(f[6], "rank_lpml", line_no));
    c.rank_dic7 = static_cast<int>(parse_long(f[7], "rank_dic7", line_no));
    if (!c.failed && c.rank_lpml == 1) report.best_lpml = c;
    if (!c.failed && c.rank_dic7 == 1) report.best_dic7 = c;
    report.cells.push_back(std::move(c));
  }
  return report;
}

void write_prediction_csv(const std::vector<double>& times, const PredictiveDraws& pred,
                          const std::string& path, const std::string& digest) {
  std::ostringstream out;
  out << "#config_digest=" << digest << '\n';
  out << "time,mean,lo,hi\n";
  for (std::size_t s = 0; s < times.size(); ++s)
    out << format_double(times[s]) << ',' << format_double(pred.mean[s]) << ','
        << format_double(pred.interval[s].first) << ',' << format_double(pred.interval[s].second)
        << '\n';
  write_text_file(path, out.str());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write file: " + path);
  out << content;
  if (!out) fail(ErrorCode::io, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Matrix chain_scalar_matrix(const ChainSamples& chain) {
  const int blocks = chain.blocks;
  const int p = 2 * blocks + 3;
  Matrix out(static_cast<long>(chain.draws.size()), p);
  for (std::size_t t = 0; t < chain.draws.size(); ++t) {
    const ParamState& st = chain.draws[t];
    int k = 0;
    out(t, k++) = st.omega2;
    for (int i = 0; i < blocks; ++i) out(t, k++) = st.sigma2_theta[i];
    for (int i = 0; i < blocks; ++i) out(t, k++) = st.sigma2_vartheta[i];
    out(t, k++) = st.phi;
    out(t, k++) = st.varphi;
  }
  return out;
}

std::vector<std::string> chain_scalar_names(int blocks) {
  std::vector<std::string> names{"omega2"};
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_theta_" + std::to_string(i + 1));
  for (int i = 0; i < blocks; ++i) names.push_back("sigma2_vartheta_" + std::to_string(i + 1));
  names.push_back("phi");
  names.push_back("varphi");
  return names;
}

}  // namespace stfm
