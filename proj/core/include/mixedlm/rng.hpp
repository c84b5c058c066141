#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mixedlm {

// splitmix64 mix step; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed for substream `index` of a master seed. Chains and
// simulation trials each get their own stream so results do not depend on
// evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Seeded generator with fully pinned output sequences. mt19937_64 is
// specified by the standard; the uniform/normal mappings below are our own,
// so identical seeds give identical draws on every platform (the standard
// library distributions make no such promise).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Strictly inside (0, 1).
  double uniform();

  // Standard normal via inverse-cdf transform of uniform().
  double normal();

  // Uniform on {0, ..., n-1}, unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n);

  int uniform_index(int n) { return static_cast<int>(uniform_int(static_cast<std::uint64_t>(n))); }

  // First k entries of a Fisher-Yates shuffle of {0, ..., n-1}, sorted.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 gen_;
};

}  // namespace mixedlm
