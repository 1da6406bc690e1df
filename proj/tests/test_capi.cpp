#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stfm.h"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "stfm_capi_test";
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

constexpr const char* kSimJson = R"({
  "n": 6, "tau": 4, "block_reps": [2, 1],
  "k_mu": 4, "k_zeta": 4, "k_gamma": 4,
  "sigma2_theta": [0.09, 0.06], "sigma2_vartheta": [0.62, 0.18],
  "phi": 3.0, "seed": 31
})";

constexpr const char* kFitJson = R"({
  "dataset": "ignored",
  "kappa": 0.2,
  "basis": {"k_mu": 4, "k_zeta": 4, "k_gamma": 4},
  "mcmc": {"n_iter": 300, "burn_in": 100, "thin": 4, "n_chains": 2},
  "seed": 7
})";

}  // namespace

TEST_CASE("version string") {
  CHECK(std::string(stfm_version()).find('.') != std::string::npos);
}

TEST_CASE("dataset handle lifecycle and dims") {
  stfm_dataset* ds = nullptr;
  char err[512] = {0};
  REQUIRE(stfm_dataset_simulate(kSimJson, &ds, err, sizeof err) == STFM_OK);
  REQUIRE(ds != nullptr);
  int blocks = 0, stations = 0, times = 0;
  long long obs = 0;
  CHECK(stfm_dataset_dims(ds, &blocks, &stations, &times, &obs) == STFM_OK);
  CHECK(blocks == 2);
  CHECK(stations == 6);
  CHECK(times == 4);
  CHECK(obs == 3LL * 6 * 4);

  TempDir tmp;
  CHECK(stfm_dataset_write_csv(ds, tmp.file("d.csv").c_str(), err, sizeof err) == STFM_OK);
  stfm_dataset* back = nullptr;
  CHECK(stfm_dataset_read_csv(tmp.file("d.csv").c_str(), &back, err, sizeof err) == STFM_OK);
  long long obs2 = 0;
  CHECK(stfm_dataset_dims(back, nullptr, nullptr, nullptr, &obs2) == STFM_OK);
  CHECK(obs2 == obs);
  stfm_dataset_free(back);
  stfm_dataset_free(ds);
}

TEST_CASE("error paths return codes and messages") {
  char err[256] = {0};
  stfm_dataset* ds = nullptr;
  CHECK(stfm_dataset_read_csv("/nonexistent/x.csv", &ds, err, sizeof err) == STFM_ERR_IO);
  CHECK(err[0] != '\0');
  err[0] = '\0';
  CHECK(stfm_dataset_simulate("{not json", &ds, err, sizeof err) == STFM_ERR_PARSE);
  CHECK(err[0] != '\0');
  CHECK(stfm_dataset_simulate(R"({"n": 1})", &ds, err, sizeof err) == STFM_ERR_CONFIG);
  CHECK(stfm_dataset_read_csv(nullptr, &ds, err, sizeof err) == STFM_ERR_INVALID_ARGUMENT);
  CHECK(stfm_dataset_dims(nullptr, nullptr, nullptr, nullptr, nullptr) ==
        STFM_ERR_INVALID_ARGUMENT);
  // a one-byte buffer still gets NUL-terminated
  char tiny[1] = {'x'};
  CHECK(stfm_dataset_read_csv("/nonexistent/x.csv", &ds, tiny, 1) == STFM_ERR_IO);
  CHECK(tiny[0] == '\0');
}

TEST_CASE("fit handle: chains, criteria, prediction") {
  stfm_dataset* ds = nullptr;
  char err[512] = {0};
  REQUIRE(stfm_dataset_simulate(kSimJson, &ds, err, sizeof err) == STFM_OK);
  stfm_fit_result* fit = nullptr;
  REQUIRE_MESSAGE(stfm_fit(ds, kFitJson, &fit, err, sizeof err) == STFM_OK, err);
  int chains = 0;
  CHECK(stfm_fit_result_n_chains(fit, &chains) == STFM_OK);
  CHECK(chains == 2);

  double lpml_val = 0.0, dic_val = 0.0;
  CHECK(stfm_fit_result_lpml(fit, &lpml_val, err, sizeof err) == STFM_OK);
  CHECK(stfm_fit_result_dic7(fit, &dic_val, err, sizeof err) == STFM_OK);
  CHECK(std::isfinite(lpml_val));
  CHECK(std::isfinite(dic_val));
  CHECK(lpml_val < 0.0);

  TempDir tmp;
  CHECK(stfm_fit_result_write(fit, tmp.path.string().c_str(), err, sizeof err) == STFM_OK);
  CHECK(std::filesystem::exists(tmp.file("chain_1.csv")));
  CHECK(std::filesystem::exists(tmp.file("chain_2.meta.json")));

  const char* target = R"({"block": 1, "lat": -15.0, "lon": -49.0})";
  CHECK(stfm_predict(fit, target, 0.95, 99, tmp.file("pred.csv").c_str(), err, sizeof err) ==
        STFM_OK);
  std::string pred = slurp(tmp.file("pred.csv"));
  CHECK(pred.find("time,mean,lo,hi") != std::string::npos);

  // out-of-domain target reports a domain error
  const char* far = R"({"block": 1, "lat": 45.0, "lon": -49.0})";
  CHECK(stfm_predict(fit, far, 0.95, 99, tmp.file("pred2.csv").c_str(), err, sizeof err) ==
        STFM_ERR_DOMAIN);

  stfm_fit_result_free(fit);
  stfm_dataset_free(ds);
}

TEST_CASE("stfm_run drives the simulate workflow") {
  TempDir tmp;
  char err[512] = {0};
  std::string out = (tmp.path / "run").string();
  REQUIRE_MESSAGE(stfm_run("simulate", kSimJson, out.c_str(), err, sizeof err) == STFM_OK, err);
  CHECK(std::filesystem::exists(out + "/dataset.csv"));
  CHECK(std::filesystem::exists(out + "/truth.json"));
  CHECK(std::filesystem::exists(out + "/manifest.json"));
  CHECK(stfm_run("nope", "{}", out.c_str(), err, sizeof err) == STFM_ERR_INVALID_ARGUMENT);
}
