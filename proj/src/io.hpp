#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "simulate.hpp"

namespace stfm {

// Shortest round-trip decimal representation.
std::string format_double(double v);

// Dataset CSV, header: block_id,rep_id,station_id,lat,lon,time,value.
// Rows may arrive in any order; the grid must be complete. The first ten
// missing or duplicate cells are listed in the error message.
Dataset read_dataset_csv(const std::string& path, const IngestOptions& opt = {});
Dataset parse_dataset_csv(const std::string& content, const IngestOptions& opt = {});
std::string dataset_to_csv(const Dataset& ds);
void write_dataset_csv(const Dataset& ds, const std::string& path);
std::string dataset_digest(const Dataset& ds);

// Chain CSV columns: iter, beta_*, theta_b_k, vartheta_b_k, sigma2_theta_b,
// sigma2_vartheta_b, omega2, phi, varphi, loglik. A leading
// "#config_digest=<hex>" comment line ties every artifact to its run config.
std::vector<std::string> chain_column_names(int k_mu, int k_zeta, int k_gamma, int blocks);
std::string chain_to_csv(const ChainSamples& chain);
void write_chain(const ChainSamples& chain, const std::string& csv_path,
                 const std::string& meta_path);
ChainSamples read_chain(const std::string& csv_path, const std::string& meta_path);

void write_summary_csv(const std::vector<ParameterSummary>& rows, const std::string& path,
                       const std::string& digest);
void write_selection_csv(const SelectionReport& report, const std::string& path,
                         const std::string& digest);
SelectionReport read_selection_csv(const std::string& path);
void write_prediction_csv(const std::vector<double>& times, const PredictiveDraws& pred,
                          const std::string& path, const std::string& digest);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Tracked-scalar matrices (omega2, sigma2_*, phi, varphi) for diagnostics.
Matrix chain_scalar_matrix(const ChainSamples& chain);
std::vector<std::string> chain_scalar_names(int blocks);

}  // namespace stfm
