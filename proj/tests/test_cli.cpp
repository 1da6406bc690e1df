// Drives the installed CLI binary end to end.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = STFM_CLI_PATH;
const std::string kSource = STFM_SOURCE_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "stfm_cli_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& stderr_file = "") {
  std::string cmd = kCli + " " + args + " >/dev/null";
  if (!stderr_file.empty()) cmd += " 2>" + stderr_file;
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("fit on the bundled toy dataset produces chains, summary and verdict") {
  TempDir tmp;
  json fit;
  fit["dataset"] = kSource + "/data/toy_dataset.csv";
  fit["kappa"] = 0.2;
  fit["basis"] = {{"k_mu", 4}, {"k_zeta", 4}, {"k_gamma", 4}};
  fit["mcmc"] = {{"n_iter", 400}, {"burn_in", 200}, {"thin", 4}, {"n_chains", 2}};
  fit["seed"] = 5;
  spit(tmp.file("fit.json"), fit.dump());

  std::string out = tmp.file("run1");
  REQUIRE(run_cli("fit -c " + tmp.file("fit.json") + " -o " + out) == 0);
  CHECK(fs::exists(out + "/chain_1.csv"));
  CHECK(fs::exists(out + "/chain_2.csv"));
  CHECK(fs::exists(out + "/summary.csv"));
  CHECK(fs::exists(out + "/convergence.json"));
  json conv = json::parse(slurp(out + "/convergence.json"));
  CHECK(conv.contains("rhat"));
  json manifest = json::parse(slurp(out + "/manifest.json"));
  CHECK(manifest["command"] == "fit");
  CHECK(manifest.contains("lpml"));

  // identical config + seed reproduces byte-identical artifacts
  std::string out2 = tmp.file("run2");
  REQUIRE(run_cli("fit -c " + tmp.file("fit.json") + " -o " + out2) == 0);
  for (const char* name : {"/chain_1.csv", "/chain_2.csv", "/summary.csv"})
    CHECK(slurp(out + name) == slurp(out2 + name));

  // a different seed changes the chains
  std::string out3 = tmp.file("run3");
  REQUIRE(run_cli("fit -c " + tmp.file("fit.json") + " --seed 99 -o " + out3) == 0);
  CHECK(slurp(out + "/chain_1.csv") != slurp(out3 + "/chain_1.csv"));

  // diagnose over the two chains agrees with the fit's verdict
  std::string diag = tmp.file("diag");
  REQUIRE(run_cli("diagnose -o " + diag + " " + out + "/chain_1.csv " + out + "/chain_2.csv") ==
          0);
  json conv2 = json::parse(slurp(diag + "/convergence.json"));
  CHECK(conv2["rhat"] == conv["rhat"]);

  // chains from different configurations are refused
  std::string diag_mixed = tmp.file("diag_mixed");
  CHECK(run_cli("diagnose -o " + diag_mixed + " " + out + "/chain_1.csv " + out3 +
                    "/chain_2.csv",
                tmp.file("err0.json")) != 0);

  // predict from the fit directory
  json pred;
  pred["run_dir"] = out;
  pred["dataset"] = kSource + "/data/toy_dataset.csv";
  pred["target"] = {{"block", 1}, {"lat", -15.5}, {"lon", -49.5}};
  pred["seed"] = 3;
  spit(tmp.file("pred.json"), pred.dump());
  std::string preddir = tmp.file("pred");
  REQUIRE(run_cli("predict -c " + tmp.file("pred.json") + " -o " + preddir) == 0);
  std::string pred_csv = slurp(preddir + "/prediction.csv");
  CHECK(pred_csv.find("time,mean,lo,hi") != std::string::npos);

  // determinism of the prediction artifact
  std::string preddir2 = tmp.file("pred2");
  REQUIRE(run_cli("predict -c " + tmp.file("pred.json") + " -o " + preddir2) == 0);
  CHECK(slurp(preddir2 + "/prediction.csv") == pred_csv);
}

TEST_CASE("select with a single-cell grid equals fit plus criteria") {
  TempDir tmp;
  json fit;
  fit["dataset"] = kSource + "/data/toy_dataset.csv";
  fit["kappa"] = 0.2;
  fit["basis"] = {{"k_mu", 4}, {"k_zeta", 4}, {"k_gamma", 4}};
  fit["mcmc"] = {{"n_iter", 300}, {"burn_in", 100}, {"thin", 4}, {"n_chains", 1}};
  fit["seed"] = 12;
  spit(tmp.file("fit.json"), fit.dump());
  json sel = fit;
  sel.erase("basis");
  sel["kappa_grid"] = {0.2};
  sel["basis_grid"] = {{{"k_mu", 4}, {"k_zeta", 4}, {"k_gamma", 4}}};
  sel.erase("kappa");
  spit(tmp.file("sel.json"), sel.dump());

  REQUIRE(run_cli("fit -c " + tmp.file("fit.json") + " -o " + tmp.file("fitrun")) == 0);
  REQUIRE(run_cli("select -c " + tmp.file("sel.json") + " -o " + tmp.file("selrun")) == 0);

  json fit_manifest = json::parse(slurp(tmp.file("fitrun") + "/manifest.json"));
  json sel_manifest = json::parse(slurp(tmp.file("selrun") + "/manifest.json"));
  CHECK(sel_manifest["best_lpml"]["lpml"].get<double>() ==
        doctest::Approx(fit_manifest["lpml"].get<double>()).epsilon(1e-12));
  std::string sel_csv = slurp(tmp.file("selrun") + "/selection.csv");
  CHECK(sel_csv.find("kappa,k_mu,k_zeta,k_gamma,lpml,dic7,rank_lpml,rank_dic7") !=
        std::string::npos);
}

TEST_CASE("failures exit nonzero with machine-readable error JSON") {
  TempDir tmp;
  spit(tmp.file("bad.json"), R"({"dataset": "/nonexistent.csv"})");
  int rc = run_cli("fit -c " + tmp.file("bad.json") + " -o " + tmp.file("out"),
                   tmp.file("err.json"));
  CHECK(rc != 0);
  json err = json::parse(slurp(tmp.file("err.json")));
  CHECK(err.contains("error"));
  CHECK(err["error"]["code"].get<int>() == rc);
  CHECK(!err["error"]["message"].get<std::string>().empty());
}

TEST_CASE("simulate then study wiring via the CLI") {
  TempDir tmp;
  json study;
  study["study"] = "prediction";
  study["sim"] = {{"n", 6},
                  {"tau", 3},
                  {"block_reps", {2, 2}},
                  {"k_mu", 4},
                  {"k_zeta", 4},
                  {"k_gamma", 4},
                  {"sigma2_theta", {0.09, 0.06}},
                  {"sigma2_vartheta", {0.62, 0.18}},
                  {"phi", 3.0}};
  study["mcmc"] = {{"n_iter", 200}, {"burn_in", 100}, {"thin", 2}, {"n_chains", 1}};
  study["replicates"] = 2;
  study["seed"] = 8;
  spit(tmp.file("study.json"), study.dump());
  REQUIRE(run_cli("study -c " + tmp.file("study.json") + " -o " + tmp.file("studyrun")) == 0);
  CHECK(fs::exists(tmp.file("studyrun") + "/predictions.csv"));
  CHECK(fs::exists(tmp.file("studyrun") + "/coverage.csv"));
  CHECK(fs::exists(tmp.file("studyrun") + "/summary.md"));
}

TEST_CASE("numeric aborts preserve partial chains and a FAILED marker") {
  TempDir tmp;
  json fit;
  fit["dataset"] = kSource + "/data/toy_dataset.csv";
  fit["kappa"] = 0.2;
  fit["basis"] = {{"k_mu", 4}, {"k_zeta", 4}, {"k_gamma", 4}};
  fit["priors"] = {{"beta_var", 1e308}};  // degenerate prior drives the state non-finite
  fit["mcmc"] = {{"n_iter", 50}, {"burn_in", 10}, {"thin", 2}, {"n_chains", 1}};
  fit["seed"] = 4;
  spit(tmp.file("fit.json"), fit.dump());
  std::string out = tmp.file("divrun");
  int rc = run_cli("fit -c " + tmp.file("fit.json") + " -o " + out, tmp.file("err.json"));
  CHECK(rc == 6);  // numeric
  CHECK(fs::exists(out + "/FAILED"));
  CHECK(fs::exists(out + "/chain_1.csv"));
  json err = json::parse(slurp(tmp.file("err.json")));
  CHECK(err["error"]["name"] == "numeric");
}
