#pragma once

// Seedable, portable random streams. The bit source is std::mt19937_64,
// whose output sequence is fixed by the C++ standard; every distribution on
// top of it is implemented here so draws reproduce across standard
// libraries:
//   uniform  = (next_u64() >> 11) * 2^-53
//   normal   = Marsaglia polar method
//   gamma    = Marsaglia-Tsang, with G(a) = G(a + 1) * U^(1/a) for a < 1
//   dirichlet = independent gammas, normalized

#include <cstdint>
#include <random>
#include <span>

namespace dirimult {

/// splitmix64 of (master, index); used to give each fold or batch its own stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_stream(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_seed(master, index));
  }

  std::uint64_t next_u64() { return engine_(); }
  /// [0, 1)
  double uniform();
  /// (0, 1)
  double uniform_open();
  double normal();
  /// Gamma(shape, 1).
  double gamma(double shape);
  /// Fills `out` with a Dirichlet(alpha) draw.
  void dirichlet(std::span<const double> alpha, std::span<double> out);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dirimult
