#include "rng.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"

namespace stfm {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32x10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
  key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

void RngStream::refill() {
  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  block_ = philox4x32x10(ctr, key_);
  ++counter_;
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return block_[pos_++];
}

double RngStream::uniform() {
  std::uint64_t hi = next_u32(), lo = next_u32();
  std::uint64_t bits = (hi << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    fail(ErrorCode::invalid_argument, "gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // boost: Gamma(a) = Gamma(a+1) * U^{1/a}
    double u = 1.0 - uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
  }
}

double RngStream::inverse_gamma(double a, double b) {
  // 1/X with X ~ Gamma(shape a, rate b)
  return 1.0 / gamma(a, 1.0 / b);
}

double RngStream::scaled_inv_chisq(double v, double s2) {
  return inverse_gamma(0.5 * v, 0.5 * v * s2);
}

Vector sample_mvn(const Vector& mean, const Matrix& chol_lower, RngStream& rng) {
  if (chol_lower.rows() != mean.size() || chol_lower.cols() != mean.size())
    fail(ErrorCode::invalid_argument, "sample_mvn: dimension mismatch");
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + chol_lower.triangularView<Eigen::Lower>() * z;
}

double sample_gamma(double shape, double scale, RngStream& rng) { return rng.gamma(shape, scale); }
double sample_inverse_gamma(double a, double b, RngStream& rng) { return rng.inverse_gamma(a, b); }
double sample_scaled_inv_chisq(double v, double s2, RngStream& rng) {
  return rng.scaled_inv_chisq(v, s2);
}

double logpdf_gamma(double x, double shape, double scale) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double logpdf_inverse_gamma(double x, double a, double b) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double logpdf_scaled_inv_chisq(double x, double v, double s2) {
  return logpdf_inverse_gamma(x, 0.5 * v, 0.5 * v * s2);
}

double logpdf_mvn(const Vector& x, const Vector& mean, const Matrix& chol_lower) {
  if (x.size() != mean.size() || chol_lower.rows() != x.size())
    fail(ErrorCode::invalid_argument, "logpdf_mvn: dimension mismatch");
  Vector u = chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
  double logdet = 2.0 * chol_lower.diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * M_PI) + logdet + u.squaredNorm());
}

}  // namespace stfm
