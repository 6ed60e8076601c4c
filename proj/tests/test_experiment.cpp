#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "mlpf/config.hpp"
#include "mlpf/csv.hpp"
#include "mlpf/experiment.hpp"
#include "mlpf/oracle.hpp"

using namespace mlpf;

TEST_CASE("log-log fits on exact power laws") {
  CHECK(fit_loglog_slope(std::vector<double>{1, 2, 4},
                         std::vector<double>{1, 4, 16})
            .slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_loglog_slope(std::vector<double>{1, 2, 4},
                         std::vector<double>{3, 3, 3})
            .slope == doctest::Approx(0.0));
  CHECK(fit_loglog_slope(std::vector<double>{1, 2, 4},
                         std::vector<double>{1, 0.5, 0.25})
            .slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)fit_loglog_slope(std::vector<double>{1, 2},
                                         std::vector<double>{1, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)fit_loglog_slope(std::vector<double>{1, 2, -1},
                                         std::vector<double>{1, 2, 3}),
                  std::domain_error);
}

TEST_CASE("synthetic exact power-law series fits slope one") {
  std::vector<double> h, v;
  for (int l = 1; l <= 7; ++l) {
    h.push_back(std::ldexp(1.0, -l));
    v.push_back(3.7 * h.back());
  }
  CHECK(fit_loglog_slope(h, v).slope == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cost model counts euler steps exactly") {
  LevelAllocation flat;
  flat.max_level = 0;
  flat.particles = {100};
  CHECK(cost_model(flat, 10) == 1000);

  LevelAllocation two;
  two.max_level = 1;
  two.particles = {4, 2};
  CHECK(cost_model(two, 1) == 10);
  CHECK(cost_model(two, 2) == 2 * cost_model(two, 1));

  const auto ou = builtin_model(ModelKind::OU);
  const auto alloc = level_allocation(3, ou);
  std::uint64_t expected = alloc.particles[0];
  for (int l = 1; l <= 3; ++l)
    expected +=
        alloc.particles[l] * ((std::uint64_t{1} << l) + (std::uint64_t{1} << (l - 1)));
  CHECK(cost_model(alloc, 7) == expected * 7);
}

TEST_CASE("strong-rate study runs and fits both series") {
  const auto ou = builtin_model(ModelKind::OU);
  const auto obs = simulate_dataset(ou, 20, 10, rng::StreamKey{71}).observations;
  const auto rates =
      estimate_strong_rates(ou, obs, 4, 20, 100, 0.25, rng::StreamKey{72});
  CHECK(rates.variance_series.levels == std::vector<int>{1, 2, 3, 4});
  CHECK(rates.variance_series.h[0] == doctest::Approx(0.25));
  for (double v : rates.variance_series.value) CHECK(v > 0.0);
  CHECK(rates.variance_series.fit.slope > 0.0);
  CHECK(rates.coupling_series.fit.slope > 0.0);
  CHECK_THROWS_AS((void)estimate_strong_rates(ou, obs, 2, 20, 100, 0.25,
                                              rng::StreamKey{1}),
                  std::invalid_argument);
}

TEST_CASE("mse_vs_cost produces decreasing mse and increasing cost") {
  const auto ou = builtin_model(ModelKind::OU);
  const auto obs = simulate_dataset(ou, 10, 10, rng::StreamKey{73}).observations;
  const auto truth = kalman_ou(ou, obs).phi_estimate;
  const auto res = mse_vs_cost(ou, obs, Method::MLPF, 1, 4, 20, truth, 0.25,
                               rng::StreamKey{74});
  CHECK(res.rows.size() == 4);
  for (std::size_t i = 1; i < res.rows.size(); ++i)
    CHECK(res.rows[i].cost > res.rows[i - 1].cost);
  CHECK(res.rows.back().mse < res.rows.front().mse);
  CHECK(res.fit.slope < 0.0);
  for (const auto& row : res.rows) {
    const auto alloc = level_allocation(row.max_level, ou);
    CHECK(row.cost == cost_model(alloc, 10));
  }
}

TEST_CASE("pf cost in the study is N 2^L n with N = 8 * 2^{2L}") {
  const auto ou = builtin_model(ModelKind::OU);
  const auto obs = simulate_dataset(ou, 5, 10, rng::StreamKey{75}).observations;
  const auto truth = kalman_ou(ou, obs).phi_estimate;
  const auto res =
      mse_vs_cost(ou, obs, Method::PF, 1, 3, 5, truth, 0.25, rng::StreamKey{76});
  for (const auto& row : res.rows) {
    const std::uint64_t n = (std::uint64_t{8} << (2 * row.max_level));
    CHECK(row.cost == n * (std::uint64_t{1} << row.max_level) * 5);
  }
}

TEST_CASE("csv emission round-trips through the readers") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "mlpf_exp_csv";
  fs::create_directories(dir);

  const auto ou = builtin_model(ModelKind::OU);
  const auto obs = simulate_dataset(ou, 8, 8, rng::StreamKey{77}).observations;
  const auto rates =
      estimate_strong_rates(ou, obs, 3, 10, 50, 0.25, rng::StreamKey{78});
  const auto rates_path = (dir / "rates.csv").string();
  write_rates_csv(rates_path, "ou", rates, "seed = 78\n");
  const auto rows = csv::read(rates_path, {"model", "l", "h", "var",
                                           "one_minus_p", "R"});
  CHECK(rows.size() == 3);
  CHECK(rows[0][0] == "ou");
  CHECK(csv::to_double(rows[0][2], "h") == doctest::Approx(0.25));
  const auto preamble = csv::read_preamble(rates_path);
  REQUIRE(preamble.size() == 1);
  CHECK(preamble[0] == "seed = 78");

  const auto truth = kalman_ou(ou, obs).phi_estimate;
  const auto res = mse_vs_cost(ou, obs, Method::PF, 1, 3, 5, truth, 0.25,
                               rng::StreamKey{79});
  const auto cost_path = (dir / "cost.csv").string();
  write_cost_csv(cost_path, {res});
  const auto cost_rows =
      csv::read(cost_path, {"model", "method", "L", "mse", "cost", "walltime"});
  CHECK(cost_rows.size() == 3);
  CHECK(cost_rows[0][1] == "pf");
  // Walltime is not recorded by default, keeping reruns byte-identical.
  CHECK(cost_rows[0][5] == "0");

  const auto slopes_path = (dir / "slopes.csv").string();
  write_slopes_csv(slopes_path, {"ou"}, {"pf"}, {res.fit});
  const auto slope_rows =
      csv::read(slopes_path, {"model", "method", "slope", "stderr"});
  CHECK(slope_rows.size() == 1);

  fs::remove_all(dir);
}
