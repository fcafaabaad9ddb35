#pragma once

#include <cstdint>
#include <random>

#include "qsr/types.hpp"

namespace qsr {

// Deterministic random source. Gaussians come from a hand-rolled Box-Muller
// transform over mt19937_64 so that streams are bit-identical across
// standard libraries (std::normal_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform();            // [0, 1)
  double normal();             // standard normal
  Scalar complex_normal();     // (N(0,1) + i N(0,1)) / sqrt(2)
  std::uint64_t integer(std::uint64_t bound);  // [0, bound)

  // child generator with a decorrelated seed, for per-trial streams
  Rng fork(std::uint64_t salt);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Haar-distributed unitary via QR of a complex Ginibre matrix with the
// R-diagonal phase fix. Bit-identical for a given seed state.
Mat haar_unitary(int dim, Rng& rng);
// Haar-random pure state vector.
Vec haar_vector(int dim, Rng& rng);
// Random density operator of the given rank (defaults to full rank):
// partial trace of a Haar vector on dim x rank.
Mat random_density_matrix(int dim, Rng& rng, int rank = -1);

}  // namespace qsr
