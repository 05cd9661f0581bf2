#ifndef NANOVLA_TESTS_TEST_UTIL_H_
#define NANOVLA_TESTS_TEST_UTIL_H_

#include <gtest/gtest.h>

#include "nanovla/rng.h"
#include "nanovla/tensor.h"

namespace nanovla::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

inline void expect_near(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], tol) << "at flat index " << i;
  }
}

}  // namespace nanovla::testing

#endif  // NANOVLA_TESTS_TEST_UTIL_H_
