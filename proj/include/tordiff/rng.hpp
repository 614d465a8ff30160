#ifndef TORDIFF_RNG_HPP_
#define TORDIFF_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>

namespace tordiff {

/// Reproducible generator: std::mt19937_64 (bit sequence fixed by the C++ standard),
/// uniforms from its top 53 bits, normals by the Box-Muller transform. Child streams
/// for parallel work are derived with SplitMix64 so results do not depend on how work
/// is scheduled across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal();

  double exponential(double rate);

  /// Index drawn with probability proportional to weights (need not be normalised).
  std::size_t categorical(std::span<const double> weights);

  /// Independent stream for work item `index`.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tordiff

#endif  // TORDIFF_RNG_HPP_
