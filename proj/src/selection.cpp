#include "selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "util.hpp"

namespace stfm {

Matrix per_rep_loglik_matrix(const std::vector<ChainSamples>& chains, const Dataset& ds,
                             const DesignSet& d) {
  long total = 0;
  for (const auto& c : chains) total += static_cast<long>(c.draws.size());
  if (total == 0) fail(ErrorCode::insufficient_data, "selection: no stored draws");
  Matrix out(total, ds.total_reps());
  long row = 0;
  for (const auto& c : chains)
    for (const auto& st : c.draws) out.row(row++) = per_rep_loglik(ds, d, st).transpose();
  return out;
}

double lpml_from_matrix(const Matrix& rep_loglik) {
  const long h = rep_loglik.rows();
  if (h == 0) fail(ErrorCode::insufficient_data, "lpml: no draws");
  double total = 0.0;
  std::vector<double> neg(h);
  for (long j = 0; j < rep_loglik.cols(); ++j) {
    for (long i = 0; i < h; ++i) neg[i] = -rep_loglik(i, j);
    // log CPO = log H - logsumexp_h(-ll_h)
    total += std::log(static_cast<double>(h)) - logsumexp(neg);
  }
  return total;
}

double dic7_from_matrix(const Matrix& rep_loglik) {
  if (rep_loglik.rows() == 0) fail(ErrorCode::insufficient_data, "dic7: no draws");
  Vector totals = rep_loglik.rowwise().sum();
  return -4.0 * totals.mean() + 2.0 * totals.maxCoeff();
}

Matrix per_scalar_loglik_matrix(const std::vector<ChainSamples>& chains, const Dataset& ds,
                                const DesignSet& d) {
  long total = 0;
  for (const auto& c : chains) total += static_cast<long>(c.draws.size());
  if (total == 0) fail(ErrorCode::insufficient_data, "selection: no stored draws");
  Matrix out(total, ds.y.size());
  const long m = ds.rows_per_rep();
  long row = 0;
  for (const auto& c : chains)
    for (const auto& st : c.draws) {
      const double base = -0.5 * (std::log(2.0 * M_PI) + std::log(st.omega2));
      long off = 0;
      for (int i = 0; i < ds.blocks(); ++i) {
        Vector mean_i = block_mean(d, st, i);
        for (int j = 0; j < ds.block_reps[i]; ++j, off += m) {
          Vector r = ds.y.segment(off, m) - mean_i;
          out.row(row).segment(off, m) =
              (base - 0.5 * r.array().square() / st.omega2).transpose();
        }
      }
      ++row;
    }
  return out;
}

double lpml(const std::vector<ChainSamples>& chains, const Dataset& ds, const DesignSet& d,
            CpoUnit unit) {
  return lpml_from_matrix(unit == CpoUnit::per_rep ? per_rep_loglik_matrix(chains, ds, d)
                                                   : per_scalar_loglik_matrix(chains, ds, d));
}

double dic7(const std::vector<ChainSamples>& chains, const Dataset& ds, const DesignSet& d) {
  return dic7_from_matrix(per_rep_loglik_matrix(chains, ds, d));
}

SelectionReport grid_select(const Dataset& ds, const GridSelectConfig& cfg) {
  if (cfg.kappa_grid.empty() || cfg.basis_grid.empty())
    fail(ErrorCode::config, "grid_select: empty kappa or basis grid");
  std::vector<SelectionCell> cells;
  for (double kappa : cfg.kappa_grid)
    for (const auto& basis : cfg.basis_grid) {
      SelectionCell c;
      c.kappa = kappa;
      c.basis = basis;
      cells.push_back(c);
    }

  auto lats = ds.lats();
  auto lons = ds.lons();
  parallel_for(static_cast<int>(cells.size()), cfg.threads, [&](int idx) {
    SelectionCell& cell = cells[idx];
    try {
      DesignSet d = build_design(lats, lons, ds.times, ds.block_reps, cell.basis.k_mu,
                                 cell.basis.k_zeta, cell.basis.k_gamma, cfg.domain_margin);
      auto chains = run_chains(ds, d, cfg.priors, cfg.mcmc, cell.kappa, cfg.seed,
                               cfg.base_stream + static_cast<std::uint64_t>(idx) * 64, 1);
      Matrix rep_ll = per_rep_loglik_matrix(chains, ds, d);
      cell.lpml = cfg.cpo == CpoUnit::per_rep
                      ? lpml_from_matrix(rep_ll)
                      : lpml_from_matrix(per_scalar_loglik_matrix(chains, ds, d));
      cell.dic7 = dic7_from_matrix(rep_ll);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  });

  std::vector<int> ok;
  for (int i = 0; i < static_cast<int>(cells.size()); ++i)
    if (!cells[i].failed) ok.push_back(i);
  if (!ok.empty()) {
    std::vector<int> by_lpml = ok, by_dic = ok;
    std::sort(by_lpml.begin(), by_lpml.end(),
              [&](int a, int b) { return cells[a].lpml > cells[b].lpml; });
    std::sort(by_dic.begin(), by_dic.end(),
              [&](int a, int b) { return cells[a].dic7 < cells[b].dic7; });
    for (std::size_t r = 0; r < by_lpml.size(); ++r) cells[by_lpml[r]].rank_lpml = static_cast<int>(r) + 1;
    for (std::size_t r = 0; r < by_dic.size(); ++r) cells[by_dic[r]].rank_dic7 = static_cast<int>(r) + 1;
  }

  SelectionReport report;
  report.cells = std::move(cells);
  for (const auto& c : report.cells) {
    if (c.failed) continue;
    if (c.rank_lpml == 1) report.best_lpml = c;
    if (c.rank_dic7 == 1) report.best_dic7 = c;
  }
  return report;
}

}  // namespace stfm
