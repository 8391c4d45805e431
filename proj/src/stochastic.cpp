#include "langevin/stochastic.hpp"

#include <cmath>

namespace langevin {

namespace detail {

std::uint64_t philox2x64(std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t key) {
  constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ull;
  constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(kMul) * c0;
    const std::uint64_t hi = static_cast<std::uint64_t>(product >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(product);
    c0 = hi ^ key ^ c1;
    c1 = lo;
    key += kWeyl;
  }
  return c0;
}

namespace {

// Counter layout: c0 = trajectory, c1 = step << 32 | component << 1 | salt.
// Step counts and dimensions stay far below 2^32 / 2^31 in every preset.
inline std::uint64_t word(std::uint64_t seed, std::uint64_t trajectory,
                          std::uint64_t step, int component, int salt) {
  const std::uint64_t c1 = (step << 32) |
                           (static_cast<std::uint64_t>(component) << 1) |
                           static_cast<std::uint64_t>(salt);
  return philox2x64(trajectory, c1, seed);
}

// Unbiased-to-2^-61 map of a 64-bit word onto {0,...,5}.
inline std::uint64_t mod6(std::uint64_t u) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(u) * 6u) >> 64);
}

constexpr double kSqrt3 = 1.7320508075688772935;

}  // namespace

}  // namespace detail

void NoiseStream::fill_xi(Vector& out) const {
  out.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    const std::uint64_t six =
        detail::mod6(detail::word(seed_, trajectory_, step_, i, 0));
    out(i) = six < 4 ? 0.0 : (six == 4 ? detail::kSqrt3 : -detail::kSqrt3);
  }
}

Vector NoiseStream::sample_xi() const {
  Vector out(dim_);
  fill_xi(out);
  return out;
}

void NoiseStream::fill_gaussian(Vector& out) const {
  out.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    const std::uint64_t u1 = detail::word(seed_, trajectory_, step_, i, 0);
    const std::uint64_t u2 = detail::word(seed_, trajectory_, step_, i, 1);
    const double a = (static_cast<double>(u1 >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double b = static_cast<double>(u2 >> 11) * 0x1.0p-53;         // [0,1)
    out(i) = std::sqrt(-2.0 * std::log(a)) *
             std::cos(2.0 * M_PI * b);
  }
}

Vector NoiseStream::sample_gaussian() const {
  Vector out(dim_);
  fill_gaussian(out);
  return out;
}

std::vector<double> xi_moments_by_enumeration(int max_order) {
  // E[xi^k] = (1/6) (sqrt(3))^k + (1/6) (-sqrt(3))^k: the odd contributions
  // cancel exactly; the even ones are (3^{k/2}) / 3, kept in exact integer
  // arithmetic so that sqrt(3)^2 does not round.
  std::vector<double> moments(max_order, 0.0);
  for (int k = 2; k <= max_order; k += 2) {
    double pow3 = 1.0;
    for (int j = 0; j < k / 2; ++j) pow3 *= 3.0;
    moments[k - 1] = pow3 / 3.0;
  }
  return moments;
}

}  // namespace langevin
