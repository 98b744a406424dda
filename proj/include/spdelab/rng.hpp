#ifndef SPDELAB_RNG_HPP
#define SPDELAB_RNG_HPP

#include <cstdint>
#include <cmath>

namespace spdelab {

// Philox4x32-10 counter-based generator. Every consumer owns a stream keyed
// by (seed, tag, ids...); streams are independent and draws are reproducible
// regardless of thread scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t id0 = 0,
             std::uint64_t id1 = 0, std::uint64_t id2 = 0) {
    std::uint64_t k = splitmix(seed ^ 0x9e3779b97f4a7c15ull);
    k = splitmix(k ^ splitmix(tag));
    k = splitmix(k ^ splitmix(id0));
    k = splitmix(k ^ splitmix(id1));
    k = splitmix(k ^ splitmix(id2));
    key_[0] = static_cast<std::uint32_t>(k);
    key_[1] = static_cast<std::uint32_t>(k >> 32);
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0, 1), 53-bit mantissa, never returns 0.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via Box-Muller; caches the second variate.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double c = std::cos(6.283185307179586476925287 * u2);
    double s = std::sin(6.283185307179586476925287 * u2);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter_);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter_ >> 32);
    std::uint32_t x0 = c0, x1 = c1, x2 = 0, x3 = 0;
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, x0, hi0, lo0);
      mulhilo(0xCD9E8D57u, x2, hi1, lo1);
      std::uint32_t y0 = hi1 ^ x1 ^ k0;
      std::uint32_t y1 = lo1;
      std::uint32_t y2 = hi0 ^ x3 ^ k1;
      std::uint32_t y3 = lo0;
      x0 = y0; x1 = y1; x2 = y2; x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = x0; buf_[1] = x1; buf_[2] = x2; buf_[3] = x3;
    buf_pos_ = 0;
    ++counter_;
  }

  std::uint32_t key_[2];
  std::uint64_t counter_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream tags keep independent subsystems off each other's draws.
namespace stream_tag {
inline constexpr std::uint64_t grid_noise = 1;
inline constexpr std::uint64_t spectral_noise = 2;
inline constexpr std::uint64_t linear_solver = 3;
inline constexpr std::uint64_t mc_driver = 4;
inline constexpr std::uint64_t probe = 5;
}  // namespace stream_tag

}  // namespace spdelab

#endif  // SPDELAB_RNG_HPP
