#ifndef NANOVLA_RNG_H_
#define NANOVLA_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace nanovla {

// Seeded generator whose derived draws do not depend on the standard library's
// distribution implementations, so streams are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();
  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the boost
  // U^(1/shape) transform.
  double gamma(double shape);
  double beta(double a, double b);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit FNV-1a hash, used for seeds and digests.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace nanovla

#endif  // NANOVLA_RNG_H_
