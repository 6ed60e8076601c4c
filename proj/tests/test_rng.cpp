#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "mlpf/rng.hpp"
#include "stat_utils.hpp"

using namespace mlpf;

TEST_CASE("identical keys reproduce identical draw sequences") {
  const rng::StreamKey key = rng::StreamKey{123}.child(7).child(9);
  rng::GaussianStream a(key), b(key);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("sibling streams differ") {
  rng::GaussianStream a(rng::StreamKey{123}.child(1));
  rng::GaussianStream b(rng::StreamKey{123}.child(2));
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (a.uniform() == b.uniform()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("child derivation is order-sensitive") {
  const auto a = rng::StreamKey{5}.child(1).child(2);
  const auto b = rng::StreamKey{5}.child(2).child(1);
  CHECK(a.value != b.value);
}

TEST_CASE("uniforms live in [0, 1)") {
  rng::GaussianStream s(rng::StreamKey{77});
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have standard moments") {
  rng::GaussianStream s(rng::StreamKey{2024});
  const int n = 1000000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = s.normal();
  CHECK(s.normals_drawn() == static_cast<std::uint64_t>(n));
  // 5 sigma bands on the moment estimators.
  CHECK(std::abs(testutil::mean(draws)) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(testutil::sample_variance(draws) - 1.0) <
        5.0 * std::sqrt(2.0 / double(n)));
  double third = 0;
  for (double d : draws) third += d * d * d;
  third /= n;
  CHECK(std::abs(third) < 5.0 * std::sqrt(15.0 / double(n)));
}
