#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dqrec {

// Seeded generator with hand-rolled draws. All sampling goes through this
// class so that a fixed seed reproduces the same stream bit for bit; the
// standard <random> distributions are implementation-defined and would break
// the checkpoint determinism contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  // Uniform integer in [0, n), n > 0. Rejection sampling, exactly uniform.
  std::int64_t uniform_int(std::int64_t n);

  // Standard normal via Box-Muller (deterministic, caches the spare value).
  double normal();
  double normal(double mean, double stddev);

  // Independent stream derived from this generator's seed and a salt.
  // Forking does not consume state from the parent.
  Rng fork(std::uint64_t salt) const;

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::int64_t i = static_cast<std::int64_t>(values.size()) - 1; i > 0; --i) {
      std::int64_t j = uniform_int(i + 1);
      std::swap(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dqrec
