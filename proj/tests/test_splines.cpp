#include <doctest.h>

#include <cmath>

#include "rng.hpp"
#include "splines.hpp"
#include "support/test_oracles.hpp"

using namespace stfm;

TEST_CASE("make_knots: clamping and uniform interior") {
  auto k4 = make_knots(0.0, 1.0, 4);
  REQUIRE(k4.knots.size() == 8);
  for (int i = 0; i < 4; ++i) {
    CHECK(k4.knots[i] == 0.0);
    CHECK(k4.knots[4 + i] == 1.0);
  }

  auto k5 = make_knots(0.0, 1.0, 5);
  REQUIRE(k5.knots.size() == 9);
  CHECK(k5.knots[4] == doctest::Approx(0.5));

  auto k6 = make_knots(0.0, 2.0, 6);
  CHECK(k6.knots[4] == doctest::Approx(2.0 / 3));
  CHECK(k6.knots[5] == doctest::Approx(4.0 / 3));

  CHECK_THROWS(make_knots(0.0, 1.0, 3));
  CHECK_THROWS(make_knots(1.0, 1.0, 5));
  CHECK_THROWS(make_knots(2.0, 1.0, 5));
}

TEST_CASE("eval_basis: partition of unity, clamped ends, local support") {
  RngStream rng(3, 0);
  for (int k = 4; k <= 9; ++k) {
    auto kv = make_knots(-2.0, 5.0, k);
    for (int i = 0; i < 500; ++i) {
      double x = -2.0 + 7.0 * rng.uniform();
      Vector row = eval_basis_row(kv, x);
      CHECK(std::abs(row.sum() - 1.0) < 1e-12);
      CHECK(row.minCoeff() >= 0.0);
      CHECK(row.maxCoeff() <= 1.0);
      int nonzero = 0, first = -1, last = -1;
      for (int j = 0; j < k; ++j)
        if (row[j] != 0.0) {
          ++nonzero;
          if (first < 0) first = j;
          last = j;
        }
      CHECK(nonzero <= 4);
      CHECK(last - first <= 3);  // consecutive support
    }
    Vector at_min = eval_basis_row(kv, -2.0);
    CHECK(at_min[0] == doctest::Approx(1.0));
    CHECK(at_min.tail(k - 1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    Vector at_max = eval_basis_row(kv, 5.0);
    CHECK(at_max[k - 1] == doctest::Approx(1.0));
    CHECK_THROWS(eval_basis_row(kv, 5.0 + 1e-9));
    CHECK_THROWS(eval_basis_row(kv, -2.0 - 1e-9));
  }
}

TEST_CASE("K=4 clamped basis equals the cubic Bernstein polynomials") {
  auto kv = make_knots(1.0, 4.0, 4);
  Vector mid = eval_basis_row(kv, 2.5);
  CHECK(mid[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(mid[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(mid[2] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(mid[3] == doctest::Approx(0.125).epsilon(1e-12));
  for (double x = 1.0; x <= 4.0; x += 0.1) {
    Vector got = eval_basis_row(kv, x);
    Vector want = oracle::bernstein_row(x, 1.0, 4.0);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("mean design: shape, row sums, triple-loop oracle") {
  std::vector<double> lats = {0.1, 0.8}, lons = {0.3, 0.5}, times = {1.0, 2.0, 3.0};
  const int k = 5;
  Matrix m = build_mean_design(lats, lons, times, k);
  CHECK(m.rows() == 6);
  CHECK(m.cols() == 125);
  for (long r = 0; r < m.rows(); ++r) CHECK(std::abs(m.row(r).sum() - 1.0) < 1e-12);

  auto kv_lat = make_knots(0.1, 0.8, k);
  auto kv_lon = make_knots(0.3, 0.5, k);
  auto kv_time = make_knots(1.0, 3.0, k);
  Matrix want = oracle::mean_design_loop(eval_basis(kv_lat, lats), eval_basis(kv_lon, lons),
                                         eval_basis(kv_time, times));
  CHECK((m - want).cwiseAbs().maxCoeff() < 1e-14);

  // n = 1, tau = 1 collapses to a single Kronecker row
  Matrix single = build_mean_design(std::vector<double>{0.1}, std::vector<double>{0.3},
                                    std::vector<double>{1.0}, 4);
  CHECK(single.rows() == 1);
  CHECK(single.cols() == 64);
  CHECK(std::abs(single.row(0).sum() - 1.0) < 1e-12);
}

TEST_CASE("spatial design: time-constant rows and double-loop oracle") {
  std::vector<double> lats = {0.0, 0.4, 1.0}, lons = {2.0, 2.5, 3.0}, times = {1.0, 2.0};
  Matrix p = build_spatial_design(lats, lons, times, 5);
  CHECK(p.rows() == 6);
  CHECK(p.cols() == 25);
  for (int r = 0; r < 3; ++r)
    CHECK((p.row(2 * r) - p.row(2 * r + 1)).cwiseAbs().maxCoeff() == 0.0);
  for (long r = 0; r < p.rows(); ++r) CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-12);

  auto kv_lat = make_knots(0.0, 1.0, 5);
  auto kv_lon = make_knots(2.0, 3.0, 5);
  Matrix want = oracle::spatial_design_loop(eval_basis(kv_lat, lats), eval_basis(kv_lon, lons), 2);
  CHECK((p - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("temporal design: location-constant stacked blocks") {
  std::vector<double> times = {1.0, 2.0, 3.0};
  Matrix n = build_temporal_design(2, times, 7);
  CHECK(n.rows() == 6);
  CHECK(n.cols() == 7);
  CHECK((n.topRows(3) - n.bottomRows(3)).cwiseAbs().maxCoeff() == 0.0);
  for (long r = 0; r < n.rows(); ++r) CHECK(std::abs(n.row(r).sum() - 1.0) < 1e-12);
}

TEST_CASE("assemble_full: stacking and block-diagonal structure") {
  std::vector<double> lats = {0.1, 0.9}, lons = {0.2, 0.7}, times = {1.0, 2.0};
  Matrix m = build_mean_design(lats, lons, times, 4);
  Matrix p = build_spatial_design(lats, lons, times, 4);
  Matrix n = build_temporal_design(2, times, 4);

  std::vector<int> one = {1};
  auto a1 = assemble_full(m, p, n, one);
  CHECK((a1.x - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a1.q - p).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a1.r - n).cwiseAbs().maxCoeff() == 0.0);

  std::vector<int> reps = {2, 1};
  auto a = assemble_full(m, p, n, reps);
  CHECK(a.x.rows() == 3 * m.rows());
  CHECK(a.q.rows() == 3 * m.rows());
  CHECK(a.q.cols() == 2 * p.cols());
  // block 2 columns are zero in block-1 rows and vice versa
  CHECK(a.q.block(0, p.cols(), 2 * m.rows(), p.cols()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.q.block(2 * m.rows(), 0, m.rows(), p.cols()).cwiseAbs().maxCoeff() == 0.0);

  // Q * Theta equals per-block, per-rep P * Theta__i stacking
  RngStream rng(9, 0);
  Vector theta(2 * p.cols());
  for (long i = 0; i < theta.size(); ++i) theta[i] = rng.normal();
  Vector got = a.q * theta;
  long row = 0;
  for (int i = 0; i < 2; ++i) {
    Vector block = p * theta.segment(i * p.cols(), p.cols());
    for (int j = 0; j < reps[i]; ++j) {
      CHECK((got.segment(row, m.rows()) - block).cwiseAbs().maxCoeff() < 1e-13);
      row += m.rows();
    }
  }

  CHECK_THROWS(assemble_full(m, p, n, std::vector<int>{}));
  CHECK_THROWS(assemble_full(m, p, n, std::vector<int>{2, 0}));
}

TEST_CASE("DesignSet factors agree with the explicit builders and Eq-style sums") {
  std::vector<double> lats = {0.1, 0.5, 0.9}, lons = {1.2, 1.9, 1.4}, times = {1, 2, 3, 4};
  std::vector<int> reps = {2, 1};
  DesignSet d = build_design(lats, lons, times, reps, 5, 4, 5, 0.0);

  CHECK((d.m() - build_mean_design(lats, lons, times, 5)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d.p() - build_spatial_design(lats, lons, times, 4)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d.nmat() - build_temporal_design(3, times, 5)).cwiseAbs().maxCoeff() < 1e-14);

  // mean_mu matches M beta, and both match the direct triple-sum surface
  RngStream rng(4, 0);
  Vector beta(d.beta_dim());
  for (long i = 0; i < beta.size(); ++i) beta[i] = rng.normal();
  Vector via_factors = d.mean_mu(beta);
  Vector via_matrix = d.m() * beta;
  CHECK((via_factors - via_matrix).cwiseAbs().maxCoeff() < 1e-12);

  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 4; ++s) {
      Vector b_lat = eval_basis_row(d.kv_lat_mu, lats[r]);
      Vector b_lon = eval_basis_row(d.kv_lon_mu, lons[r]);
      Vector b_time = eval_basis_row(d.kv_time_mu, times[s]);
      double direct = 0.0;
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
          for (int c = 0; c < 5; ++c)
            direct += beta[(a * 5 + b) * 5 + c] * b_lat[a] * b_lon[b] * b_time[c];
      CHECK(via_factors[r * 4 + s] == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("tensor consistency across sizes: builders match loop oracles") {
  RngStream rng(71, 0);
  for (int n : {2, 4})
    for (int tau : {2, 4})
      for (int k = 4; k <= 6; ++k) {
        std::vector<double> lats(n), lons(n), times(tau);
        for (int r = 0; r < n; ++r) {
          lats[r] = rng.uniform();
          lons[r] = 2.0 + rng.uniform();
        }
        for (int s = 0; s < tau; ++s) times[s] = s + rng.uniform();
        auto [lat_lo, lat_hi] = std::minmax_element(lats.begin(), lats.end());
        auto [lon_lo, lon_hi] = std::minmax_element(lons.begin(), lons.end());
        auto [t_lo, t_hi] = std::minmax_element(times.begin(), times.end());
        Matrix b_lat = eval_basis(make_knots(*lat_lo, *lat_hi, k), lats);
        Matrix b_lon = eval_basis(make_knots(*lon_lo, *lon_hi, k), lons);
        Matrix b_time = eval_basis(make_knots(*t_lo, *t_hi, k), times);
        Matrix m = build_mean_design(lats, lons, times, k);
        CHECK((m - oracle::mean_design_loop(b_lat, b_lon, b_time)).cwiseAbs().maxCoeff() < 1e-14);
        Matrix p = build_spatial_design(lats, lons, times, k);
        CHECK((p - oracle::spatial_design_loop(b_lat, b_lon, tau)).cwiseAbs().maxCoeff() < 1e-14);
      }
}
