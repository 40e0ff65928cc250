#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "ssgan/tensor.hpp"

namespace ssgan {

// Seeded random stream built on xoshiro256++ (Blackman & Vigna), with the
// state expanded from the 64-bit seed via splitmix64. Both algorithms are
// fixed integer recurrences, so a given seed yields the same uint64 stream
// on every platform. Gaussian samples use Box-Muller with no cached spare,
// so the stream position is fully captured by the generator state.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = splitmix64(x);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0,1) with 53-bit resolution.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two uint64 draws.
  double next_normal() {
    const double u1 = 1.0 - next_uniform();  // (0,1], keeps the log finite
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_below(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n + 1) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > limit);
    return x % n;
  }

  // Independent substream derived from the original seed and a label; forking
  // does not consume or depend on this stream's position.
  RandomSource fork(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char ch : name) {
      h ^= static_cast<std::uint8_t>(ch);
      h *= 0x100000001b3ull;
    }
    std::uint64_t x = seed_ ^ h;
    return RandomSource(splitmix64(x));
  }

  template <typename T>
  Tensor<T> normal(Shape shape, T mean, T stddev) {
    check(stddev >= T(0), Error::Kind::value, "gaussian stddev must be non-negative, got ",
          stddev);
    Tensor<T> out(std::move(shape));
    if (stddev == T(0)) {
      std::fill(out.vec().begin(), out.vec().end(), mean);
      return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = mean + stddev * static_cast<T>(next_normal());
    return out;
  }

  template <typename T>
  Tensor<T> uniform(Shape shape, T lo, T hi) {
    Tensor<T> out(std::move(shape));
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = lo + (hi - lo) * static_cast<T>(next_uniform());
    return out;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const std::size_t n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(first[i - 1], first[j]);
    }
  }

  // Full stream snapshot: seed word followed by the four state words.
  std::array<std::uint64_t, 5> serialize() const {
    return {seed_, state_[0], state_[1], state_[2], state_[3]};
  }

  static RandomSource deserialize(const std::array<std::uint64_t, 5>& words) {
    RandomSource r(words[0]);
    r.state_ = {words[1], words[2], words[3], words[4]};
    return r;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
};

template <typename T>
Tensor<T> sample_gaussian(RandomSource& rng, Shape shape, T mean, T stddev) {
  return rng.normal<T>(std::move(shape), mean, stddev);
}

}  // namespace ssgan
