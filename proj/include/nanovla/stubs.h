#ifndef NANOVLA_STUBS_H_
#define NANOVLA_STUBS_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "nanovla/tensor.h"

namespace nanovla {

// Busy arithmetic proportional to `units`; the result feeds a volatile sink so
// the loop cannot be elided. One unit is roughly a thousand multiply-adds.
void simulate_compute(double units);

// Frozen image backbone stand-in: a fixed seeded linear map from a
// [C0, H0, W0] observation image to [C, Hf, Wf] features.
class ImageEncoderStub {
 public:
  ImageEncoderStub(Shape image_shape, std::size_t channels, std::size_t height,
                   std::size_t width, std::uint64_t seed, double compute_units = 0.0);

  Tensor encode(const Tensor& image) const;

  const Shape& image_shape() const { return image_shape_; }
  Shape feature_shape() const { return {channels_, height_, width_}; }
  double compute_units() const { return compute_units_; }

 private:
  Shape image_shape_;
  std::size_t channels_, height_, width_;
  Tensor projection_;  // [C*Hf*Wf, C0*H0*W0]
  double compute_units_;
};

// Frozen language backbone stand-in: lowercase word tokens are hashed into a
// seeded embedding table and averaged, giving a dim-D vector per string.
class LanguageEncoderStub {
 public:
  LanguageEncoderStub(std::size_t dim, std::uint64_t seed, double compute_units = 0.0,
                      std::size_t table_rows = 1024);

  std::vector<double> encode(std::string_view instruction) const;

  std::size_t dim() const { return dim_; }
  double compute_units() const { return compute_units_; }

 private:
  std::size_t dim_;
  Tensor table_;
  double compute_units_;
};

std::vector<std::string_view> word_tokens(std::string_view text);

}  // namespace nanovla

#endif  // NANOVLA_STUBS_H_
