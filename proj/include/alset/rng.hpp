#ifndef ALSET_RNG_HPP
#define ALSET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace alset
{

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the label bytes.
constexpr std::uint64_t fnv1a64(std::string_view label) noexcept
{
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : label)
  {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Key of the stream named `label` for run `run_index` of an experiment seeded with `seed`.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t run_index,
                                   std::string_view label) noexcept
{
  std::uint64_t k = mix64(seed + golden_gamma);
  k = mix64(k ^ ((run_index + 1) * golden_gamma));
  return mix64(k ^ fnv1a64(label));
}

/**
 * Counter-based 64-bit generator: the i-th output (i = 1, 2, ...) is
 * mix64(key + i * golden_gamma), which is SplitMix64 read as a counter
 * mode. The whole state is (key, counter), so a stream can be replayed
 * or skipped ahead exactly, and ports only need mix64.
 *
 * Derived variates:
 *   uniform()  = (u64 >> 11) * 2^-53                       in [0, 1)
 *   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)        two uniforms
 *   index(n)   = min(floor(uniform() * n), n - 1)
 */
class CounterRng
{
public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  CounterRng(std::uint64_t seed, std::uint64_t run_index, std::string_view label) noexcept
    : key_(stream_key(seed, run_index, label))
  {}

  std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * golden_gamma); }

  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() noexcept
  {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) noexcept
  {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Inverse-CDF draw from a probability vector.
  std::size_t categorical(std::span<const double> probs) noexcept
  {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
    {
      acc += probs[i];
      if (u < acc)
        return i;
    }
    // u landed in the rounding slack above the last partial sum
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0.0)
        return i;
    return probs.size() - 1;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace alset

#endif
