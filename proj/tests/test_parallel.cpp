// The OpenMP cloud kernels must be bit-identical to the serial reference
// implementations for any thread count, because every particle slot owns
// its stream.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "mlpf/kernel.hpp"
#include "mlpf/model.hpp"
#include "mlpf/rng.hpp"

using namespace mlpf;

namespace {

std::vector<rng::GaussianStream> make_streams(std::size_t n, std::uint64_t salt) {
  std::vector<rng::GaussianStream> streams;
  streams.reserve(n);
  const rng::StreamKey key = rng::StreamKey{salt}.child(rng::kTagMutation);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(key.child(i));
  return streams;
}

}  // namespace

TEST_CASE("parallel single-level mutation matches the serial reference") {
  for (ModelKind kind : {ModelKind::OU, ModelKind::GBM, ModelKind::NLM}) {
    const auto m = builtin_model(kind);
    for (int l : {0, 3, 6}) {
      const std::size_t n = 5000;
      std::vector<double> serial(n, m.c.x0), parallel(n, m.c.x0);
      auto s1 = make_streams(n, 91);
      auto s2 = make_streams(n, 91);
      for (int step = 0; step < 3; ++step) {
        mutate_cloud_serial(m, LevelIndex{l}, serial, s1);
        mutate_cloud(m, LevelIndex{l}, parallel, s2);
      }
      CHECK(serial == parallel);
    }
  }
}

TEST_CASE("parallel coupled mutation matches the serial reference") {
  const auto m = builtin_model(ModelKind::NLM);
  const std::size_t n = 5000;
  std::vector<double> fine_s(n, m.c.x0), coarse_s(n, m.c.x0);
  std::vector<double> fine_p(n, m.c.x0), coarse_p(n, m.c.x0);
  auto s1 = make_streams(n, 92);
  auto s2 = make_streams(n, 92);
  for (int step = 0; step < 3; ++step) {
    mutate_coupled_cloud_serial(m, LevelIndex{4}, fine_s, coarse_s, s1);
    mutate_coupled_cloud(m, LevelIndex{4}, fine_p, coarse_p, s2);
  }
  CHECK(fine_s == fine_p);
  CHECK(coarse_s == coarse_p);
}

TEST_CASE("stream draw counts agree between serial and parallel") {
  const auto m = builtin_model(ModelKind::OU);
  const std::size_t n = 100;
  std::vector<double> states(n, 0.0);
  auto streams = make_streams(n, 93);
  mutate_cloud(m, LevelIndex{5}, states, streams);
  for (const auto& s : streams) CHECK(s.normals_drawn() == 32);
}
