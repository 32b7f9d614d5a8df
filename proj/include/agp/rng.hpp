#pragma once

#include "agp/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace agp {

// Deterministic random stream (splitmix64 core). Self-contained so that runs
// are byte-reproducible across standard library implementations.
//
// Streams are named and splittable: child("label") derives an independent
// stream from the parent's construction seed and the label, regardless of how
// much the parent has already been consumed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller (one spare cached).
  double normal();

  VectorXd normal_vector(int n);

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Independent stream derived from this stream's seed and a label.
  RandomStream child(const std::string& label) const;
  RandomStream child(std::uint64_t salt) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Latin hypercube sample of n points in the box: per-axis stratification with
// a seeded permutation and in-stratum jitter.
MatrixXd latin_hypercube(const BoxDomain& box, int n, RandomStream& rng);

// First n points of the Halton sequence mapped into the box (prime bases per
// axis, index starts at 1). Deterministic.
MatrixXd halton_points(const BoxDomain& box, int n);

// FNV-1a hash, used to derive per-run seeds from string labels.
std::uint64_t hash64(const std::string& s);

}  // namespace agp
