#include <doctest.h>

#include <cmath>

#include "diagnostics.hpp"
#include "rng.hpp"

using namespace stfm;

namespace {

std::vector<double> iid_normal(int n, double mean, double sd, std::uint64_t stream) {
  RngStream rng(8675309, stream);
  std::vector<double> out(n);
  for (auto& x : out) x = mean + sd * rng.normal();
  return out;
}

}  // namespace

TEST_CASE("gelman_rubin: identical chains give exactly 1") {
  auto c = iid_normal(500, 0.0, 1.0, 0);
  CHECK(gelman_rubin({c, c}) == 1.0);
  CHECK(gelman_rubin({c, c, c}) == 1.0);
}

TEST_CASE("gelman_rubin: separated chains blow up, matched chains sit near 1") {
  auto a = iid_normal(1000, 0.0, 1.0, 1);
  auto b = iid_normal(1000, 10.0, 1.0, 2);
  CHECK(gelman_rubin({a, b}) > 3.0);

  auto c = iid_normal(5000, 0.0, 1.0, 3);
  auto d = iid_normal(5000, 0.0, 1.0, 4);
  double r = gelman_rubin({c, d});
  CHECK(r >= 0.99);
  CHECK(r <= 1.05);
  CHECK(r >= 1.0);  // this estimator never drops below one
}

TEST_CASE("gelman_rubin: affine invariance and input validation") {
  auto a = iid_normal(400, 1.0, 2.0, 5);
  auto b = iid_normal(400, 1.2, 2.0, 6);
  double base = gelman_rubin({a, b});
  auto scale = [](std::vector<double> v) {
    for (auto& x : v) x = -3.5 * x + 11.0;
    return v;
  };
  CHECK(gelman_rubin({scale(a), scale(b)}) == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS(gelman_rubin({a}));
  CHECK_THROWS(gelman_rubin({std::vector<double>(5, 1.0), std::vector<double>(5, 2.0)}));
  CHECK_THROWS(gelman_rubin({a, std::vector<double>(37, 0.0)}));
}

TEST_CASE("multivariate_psrf behaves like its scalar counterpart") {
  RngStream rng(4, 0);
  Matrix a(800, 2), b(800, 2);
  for (long t = 0; t < 800; ++t)
    for (int k = 0; k < 2; ++k) {
      a(t, k) = rng.normal();
      b(t, k) = rng.normal();
    }
  double close = multivariate_psrf({a, b});
  CHECK(close > 0.95);
  CHECK(close < 1.1);
  Matrix c = b;
  c.col(0).array() += 8.0;
  CHECK(multivariate_psrf({a, c}) > 2.0);
}

TEST_CASE("autocorr: lag zero and white noise") {
  auto x = iid_normal(4000, 0.0, 1.0, 7);
  CHECK(autocorr(x, 0) == 1.0);
  CHECK(std::abs(autocorr(x, 3)) < 0.05);
  CHECK_THROWS(autocorr(x, -1));
  CHECK_THROWS(autocorr(x, 4000));
}

TEST_CASE("ess: iid series and AR(1)") {
  auto x = iid_normal(20000, 0.0, 1.0, 8);
  double e = ess(x);
  CHECK(e > 0.9 * x.size());
  CHECK(e <= x.size());

  // AR(1) with rho = 0.9: ESS ~ n (1-rho)/(1+rho)
  RngStream rng(9, 9);
  const double rho = 0.9;
  std::vector<double> ar(40000);
  ar[0] = rng.normal();
  for (std::size_t t = 1; t < ar.size(); ++t)
    ar[t] = rho * ar[t - 1] + std::sqrt(1 - rho * rho) * rng.normal();
  double want = ar.size() * (1 - rho) / (1 + rho);
  CHECK(ess(ar) == doctest::Approx(want).epsilon(0.2));
}

TEST_CASE("quantile: type-7 interpolation") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1.0;
  CHECK(quantile(v, 0.5) == doctest::Approx(50.5));
  CHECK(quantile(v, 0.025) == doctest::Approx(3.475));
  CHECK(quantile(v, 0.975) == doctest::Approx(97.525));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  // monotone in the probability level
  double prev = -1e300;
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    double q = quantile(v, p);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("summarize: constant chains, pooling, rhat wiring") {
  Matrix constant = Matrix::Constant(50, 1, 3.25);
  auto s = summarize({"c"}, {constant});
  CHECK(s[0].sd == 0.0);
  CHECK(s[0].median == 3.25);
  CHECK(s[0].q025 == 3.25);
  CHECK(s[0].q975 == 3.25);

  // two chains pool like their concatenation for moments and quantiles
  RngStream rng(10, 0);
  Matrix a(300, 1), b(300, 1);
  for (long t = 0; t < 300; ++t) {
    a(t, 0) = rng.normal();
    b(t, 0) = rng.normal() + 0.3;
  }
  Matrix both(600, 1);
  both << a, b;
  auto split = summarize({"x"}, {a, b});
  auto merged = summarize({"x"}, {both});
  CHECK(split[0].mean == doctest::Approx(merged[0].mean).epsilon(1e-12));
  CHECK(split[0].median == doctest::Approx(merged[0].median).epsilon(1e-12));
  CHECK(split[0].q025 == doctest::Approx(merged[0].q025).epsilon(1e-12));
  CHECK(split[0].q975 == doctest::Approx(merged[0].q975).epsilon(1e-12));
  CHECK(split[0].q025 <= split[0].median);
  CHECK(split[0].median <= split[0].q975);
  CHECK(std::isfinite(split[0].rhat));
  CHECK(!std::isfinite(merged[0].rhat));  // single chain: no R-hat
  CHECK(split[0].ess <= 600.0);
}

TEST_CASE("coverage: boundary cases") {
  std::vector<std::pair<double, double>> iv = {{0, 1}, {0, 1}, {0, 1}, {0, 1}};
  CHECK(coverage(iv, {0.5, 0.2, 0.8, 1.0}) == 1.0);
  CHECK(coverage(iv, {2.0, -1.0, 5.0, 1.5}) == 0.0);
  CHECK(coverage(iv, {0.5, 0.5, 2.0, -3.0}) == 0.5);
  CHECK_THROWS(coverage(iv, {1.0}));
}
