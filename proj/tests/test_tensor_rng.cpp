#include <cmath>

#include "doctest.h"
#include "pfsgan/errors.hpp"
#include "pfsgan/rng.hpp"
#include "pfsgan/tensor.hpp"
#include "test_util.hpp"

using namespace pfsgan;

TEST_CASE("tensor shape and fill") {
  Tensor t({2, 3, 4});
  CHECK(t.rank() == 3);
  CHECK(t.size() == 24);
  CHECK(t.min_value() == 0.0f);
  t.fill(1.5f);
  CHECK(t.max_value() == 1.5f);
  CHECK(t.abs_max() == 1.5f);
  CHECK(t.all_finite());
  t[0] = -9.0f;
  CHECK(t.min_value() == -9.0f);
  CHECK(t.abs_max() == 9.0f);
}

TEST_CASE("tensor reshaped keeps the buffer") {
  Tensor t({2, 6});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  const Tensor r = t.reshaped({3, 4});
  CHECK(r.dim(0) == 3);
  CHECK(r[7] == 7.0f);
  CHECK_THROWS_AS((void)t.reshaped({5, 5}), ContractError);
}

TEST_CASE("tensor add_scaled and shape guard") {
  Tensor a({2, 2}, 1.0f);
  Tensor b({2, 2}, 2.0f);
  a.add_scaled(b, 0.5f);
  CHECK(a[3] == doctest::Approx(2.0f));
  Tensor c({3});
  CHECK_THROWS_AS(require_same_shape(a, c, "test"), ContractError);
  CHECK(shape_str({2, 2}) == "(2, 2)");
}

TEST_CASE("rng determinism and fork separation") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff_seed = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform();
    all_equal = all_equal && va == b.uniform();
    any_diff_seed = any_diff_seed || va != c.uniform();
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);

  Rng base(7);
  Rng f1 = base.fork(1);
  Rng f2 = base.fork(2);
  CHECK(f1.uniform() != f2.uniform());
}

TEST_CASE("rng bounds") {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = r.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
    const double v = r.uniform(-2.0, 3.0);
    CHECK(v >= -2.0);
    CHECK(v < 3.0);
  }
}

TEST_CASE("rng normal moments") {
  Rng r(11);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("rng serialize restores the exact stream") {
  Rng r(99);
  for (int i = 0; i < 37; ++i) (void)r.normal();
  const std::string s = r.serialize();
  std::vector<double> expected;
  for (int i = 0; i < 50; ++i) expected.push_back(r.normal());
  Rng restored(0);
  restored.deserialize(s);
  for (int i = 0; i < 50; ++i) CHECK(restored.normal() == expected[static_cast<size_t>(i)]);
}
