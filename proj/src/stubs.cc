#include "nanovla/stubs.h"

#include <cctype>
#include <cmath>
#include <string>

#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {
namespace {

volatile double g_sink = 0.0;

}  // namespace

void simulate_compute(double units) {
  const auto iterations = static_cast<std::uint64_t>(std::llround(units * 1000.0));
  double a = 1.0, b = 0.999999;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    a = a * b + 1e-9;
  }
  g_sink = g_sink + a;
}

ImageEncoderStub::ImageEncoderStub(Shape image_shape, std::size_t channels,
                                   std::size_t height, std::size_t width,
                                   std::uint64_t seed, double compute_units)
    : image_shape_(std::move(image_shape)),
      channels_(channels),
      height_(height),
      width_(width),
      compute_units_(compute_units) {
  if (image_shape_.size() != 3 || channels == 0 || height == 0 || width == 0) {
    throw ConfigError("image stub: need a [C0,H0,W0] image and non-empty features");
  }
  const std::size_t in = shape_size(image_shape_);
  const std::size_t out = channels * height * width;
  projection_ = Tensor({out, in});
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : projection_.data()) v = rng.uniform(-bound, bound) * std::sqrt(3.0);
}

Tensor ImageEncoderStub::encode(const Tensor& image) const {
  require_shape(image, image_shape_, "image stub input");
  simulate_compute(compute_units_);
  Tensor out({channels_, height_, width_});
  const std::size_t in = image.size();
  const auto x = image.data();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const auto w = projection_.row(o);
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
    out[o] = acc;
  }
  return out;
}

std::vector<std::string_view> word_tokens(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

LanguageEncoderStub::LanguageEncoderStub(std::size_t dim, std::uint64_t seed,
                                         double compute_units, std::size_t table_rows)
    : dim_(dim), table_({table_rows, dim}), compute_units_(compute_units) {
  if (dim == 0 || table_rows == 0) throw ConfigError("language stub: empty table");
  Rng rng(seed);
  for (double& v : table_.data()) v = rng.normal();
}

std::vector<double> LanguageEncoderStub::encode(std::string_view instruction) const {
  simulate_compute(compute_units_);
  std::vector<double> out(dim_, 0.0);
  const auto words = word_tokens(instruction);
  if (words.empty()) return out;
  for (std::string_view w : words) {
    std::string lower(w);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const auto row = table_.row(fnv1a(lower) % table_.rows());
    for (std::size_t k = 0; k < dim_; ++k) out[k] += row[k];
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(words.size()));
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace nanovla
