#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace r2r {

/// SplitMix64 finalizer. Bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a hash of a stage label, used as a seed-derivation tag.
std::uint64_t tag_hash(std::string_view label) noexcept;

/// Child seed for (parent, tag). Distinct tags give statistically
/// independent streams; the mapping is fixed so results are reproducible.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept;

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag, Tags... rest) noexcept {
  return derive_seed(derive_seed(parent, tag), static_cast<std::uint64_t>(rest)...);
}

/// Counter-based generator: the i-th output is mix64(key + i * golden).
/// Any (key, counter) position can be reconstructed without replaying the
/// stream, which is what makes per-replication / per-period splitting cheap.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  result_type operator()() noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller, cosine branch).
  double normal() noexcept;
  /// Gamma(shape, scale); mean shape * scale.
  double gamma(double shape, double scale) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace r2r
