#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pfsgan {

// Deterministic random source. Gaussian draws use Box-Muller with no cached
// spare so the full state is the engine state, which serializes into
// checkpoints and restores an interrupted stream exactly.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  int uniform_int(int n);
  // Standard normal.
  double normal();

  // Child stream for an independent purpose (e.g. per-network init).
  Rng fork(uint64_t stream);

  std::string serialize() const;
  void deserialize(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

}  // namespace pfsgan
