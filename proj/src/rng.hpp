#pragma once

#include <array>
#include <cstdint>

#include "linalg.hpp"

namespace stfm {

// One Philox4x32-10 block; the keystream primitive behind RngStream.
std::array<std::uint32_t, 4> philox4x32x10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Counter-based RNG (Philox4x32-10). Distinct stream ids give disjoint
// counter spaces, so chains and replicates draw from statistically
// independent sequences; identical (seed, stream) reproduces the draw
// sequence bit-for-bit on any platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  // Raw 32-bit word from the keystream (test vectors, splitting).
  std::uint32_t next_u32();

  double uniform();  // [0, 1), 53-bit
  double normal();   // standard normal, Box-Muller

  // Gamma(shape, scale), density x^{a-1} e^{-x/s} / (Γ(a) s^a). Marsaglia-Tsang.
  double gamma(double shape, double scale);

  // InverseGamma(a, b), density ∝ x^{-a-1} e^{-b/x}.
  double inverse_gamma(double a, double b);

  // ScaledInvChiSq(v, s2) ≡ InverseGamma(v/2, v s2 / 2).
  double scaled_inv_chisq(double v, double s2);

 private:
  void refill();

  std::uint64_t seed_, stream_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

// mean + L z with z iid standard normal; L a lower-triangular factor.
Vector sample_mvn(const Vector& mean, const Matrix& chol_lower, RngStream& rng);

double sample_gamma(double shape, double scale, RngStream& rng);
double sample_inverse_gamma(double a, double b, RngStream& rng);
double sample_scaled_inv_chisq(double v, double s2, RngStream& rng);

double logpdf_gamma(double x, double shape, double scale);
double logpdf_inverse_gamma(double x, double a, double b);
double logpdf_scaled_inv_chisq(double x, double v, double s2);
double logpdf_mvn(const Vector& x, const Vector& mean, const Matrix& chol_lower);

}  // namespace stfm
