#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mlpf/cli.hpp"
#include "mlpf/config.hpp"
#include "mlpf/csv.hpp"
#include "stat_utils.hpp"

using namespace mlpf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"mlpf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing and validation") {
  const auto cfg = parse_config_text(
      "model = ou\n"
      "# a comment\n"
      "sigma = 1.5\n"
      "level = 4\n"
      "seed = 99\n"
      "ess_fraction = 0.5\n");
  CHECK(cfg.model == "ou");
  CHECK(cfg.constant_overrides.at("sigma") == 1.5);
  CHECK(cfg.level == 4);
  CHECK(cfg.seed == 99);
  CHECK(cfg.ess_fraction == 0.5);

  CHECK_THROWS_WITH_AS((void)parse_config_text("bogus_key = 1\n"),
                       doctest::Contains("bogus_key"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_config_text("model = ou\nmodel = gbm\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)parse_config_text("level = abc\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)parse_config_text("method = quux\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)parse_config_text("ess_fraction = 0\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)parse_config_text("model ou\n"), std::invalid_argument);
}

TEST_CASE("resolved config text round-trips") {
  auto cfg = parse_config_text("model = nlm\ns = 0.5\nrepetitions = 7\n");
  cfg.command = "rates";
  const auto text = cfg.resolved_text();
  auto again = parse_config_text(text);
  CHECK(again.resolved_text() == text);
}

TEST_CASE("missing config file names the path") {
  CHECK_THROWS_WITH_AS((void)parse_config_file("/no/such/config.cfg"),
                       doctest::Contains("/no/such/config.cfg"),
                       std::runtime_error);
}

TEST_CASE("price ingestion computes normalized log returns") {
  TempDir dir("mlpf_ingest");
  const auto path = dir.path / "prices.csv";
  spit(path, "date,price\n2020-01-01,100\n2020-01-02,110\n2020-01-03,100\n");
  const auto series = ingest_returns(path.string());
  REQUIRE(series.values.size() == 2);
  CHECK(series.values[0] == doctest::Approx(1.0));
  CHECK(series.values[1] == doctest::Approx(-1.0));
  CHECK(series.dates[0] == "2020-01-02");

  double mean = 0;
  for (double v : series.values) mean += v;
  mean /= series.values.size();
  double var = 0;
  for (double v : series.values) var += (v - mean) * (v - mean);
  var /= series.values.size();
  CHECK(std::abs(var - 1.0) < 1e-9);
}

TEST_CASE("return ingestion is idempotent on unit-variance input") {
  TempDir dir("mlpf_ingest2");
  const auto path = dir.path / "returns.csv";
  spit(path, "date,log_return\nd1,1\nd2,-1\nd3,1\nd4,-1\n");
  const auto series = ingest_returns(path.string());
  for (std::size_t i = 0; i < series.values.size(); ++i)
    CHECK(std::abs(std::abs(series.values[i]) - 1.0) < 1e-12);
}

TEST_CASE("ingestion errors name the offending row") {
  TempDir dir("mlpf_ingest3");
  const auto bad_price = dir.path / "bad.csv";
  spit(bad_price, "date,price\nd1,100\nd2,0\nd3,10\n");
  CHECK_THROWS_WITH_AS((void)ingest_returns(bad_price.string()),
                       doctest::Contains("row 3"), std::runtime_error);

  const auto unparseable = dir.path / "nan.csv";
  spit(unparseable, "date,price\nd1,100\nd2,abc\nd3,10\n");
  CHECK_THROWS_WITH_AS((void)ingest_returns(unparseable.string()),
                       doctest::Contains("row 3"), std::runtime_error);

  const auto short_file = dir.path / "short.csv";
  spit(short_file, "date,price\nd1,100\nd2,101\n");
  CHECK_THROWS_AS((void)ingest_returns(short_file.string()), std::runtime_error);
}

TEST_CASE("synthetic datasets are reproducible; zero noise copies the path") {
  const auto ou = builtin_model(ModelKind::OU);
  const auto a = simulate_dataset(ou, 30, 9, rng::StreamKey{5});
  const auto b = simulate_dataset(ou, 30, 9, rng::StreamKey{5});
  CHECK(a.observations == b.observations);
  CHECK(a.latent == b.latent);

  const auto exact = builtin_model(ModelKind::OU, {{"tau2", 0.0}});
  const auto c = simulate_dataset(exact, 20, 9, rng::StreamKey{6});
  CHECK(c.observations == c.latent);
}

TEST_CASE("synthetic observations carry the model autocorrelation") {
  const auto ou = builtin_model(ModelKind::OU);
  const int n = 10000;
  const auto data = simulate_dataset(ou, n, 10, rng::StreamKey{7});
  const auto& y = data.observations;
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  double c0 = 0, c1 = 0;
  for (int k = 0; k < n; ++k) c0 += (y[k] - mean) * (y[k] - mean);
  for (int k = 0; k + 1 < n; ++k) c1 += (y[k] - mean) * (y[k + 1] - mean);
  const double rho = (c1 / (n - 1)) / (c0 / n);
  // Stationary lag-1 autocorrelation of y: e^{-theta delta} * 0.125/0.325.
  const double expected = std::exp(-0.5) * (0.125 / 0.325);
  CHECK(std::abs(rho - expected) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("dataset csv round-trips and validates step indices") {
  TempDir dir("mlpf_dataset");
  const auto ou = builtin_model(ModelKind::OU);
  const auto data = simulate_dataset(ou, 12, 8, rng::StreamKey{8});
  const auto path = (dir.path / "dataset.csv").string();
  write_dataset_csv(path, data);
  const auto back = read_dataset_csv(path);
  CHECK(back.observations == data.observations);
  CHECK(back.latent == data.latent);

  spit(dir.path / "bad.csv", "step,y,latent\n1,0.1,0.2\n3,0.3,0.4\n");
  CHECK_THROWS_WITH_AS((void)read_dataset_csv((dir.path / "bad.csv").string()),
                       doctest::Contains("contiguous"), std::runtime_error);
}

TEST_CASE("cli subcommands run and rerun byte-identically") {
  TempDir dir("mlpf_cli");
  const auto cfg_path = dir.path / "ou.cfg";
  spit(cfg_path,
       "model = ou\nn = 12\nlevel = 3\nparticles = 200\nseed = 5\n"
       "repetitions = 12\nlevel_max = 3\nrate_particles = 50\n");
  const auto out1 = dir.path / "run1";
  const auto out2 = dir.path / "run2";

  for (const std::string cmd : {"simulate", "pf", "mlpf", "kalman", "rates"}) {
    CHECK(cli({cmd, "--config", cfg_path.string(), "--out", out1.string()}) == 0);
    CHECK(cli({cmd, "--config", cfg_path.string(), "--out", out2.string()}) == 0);
  }
  for (const auto& entry : fs::directory_iterator(out1)) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    CHECK(slurp(entry.path()) == slurp(out2 / name));
  }
  CHECK(fs::exists(out1 / "dataset.csv"));
  CHECK(fs::exists(out1 / "pf_steps.csv"));
  CHECK(fs::exists(out1 / "pf_summary.csv"));
  CHECK(fs::exists(out1 / "mlpf_steps.csv"));
  CHECK(fs::exists(out1 / "mlpf_levels.csv"));
  CHECK(fs::exists(out1 / "kalman.csv"));
  CHECK(fs::exists(out1 / "rates.csv"));
  CHECK(fs::exists(out1 / "slopes.csv"));
}

TEST_CASE("bench emits the cost and slope tables") {
  TempDir dir("mlpf_cli_bench");
  const auto cfg_path = dir.path / "bench.cfg";
  spit(cfg_path,
       "model = ou\nn = 8\nlevel_min = 1\nlevel_max = 3\nrepetitions = 10\n"
       "seed = 3\n");
  CHECK(cli({"bench", "--config", cfg_path.string(), "--out",
             dir.path.string()}) == 0);
  const auto slopes = csv::read((dir.path / "slopes.csv").string(),
                                {"model", "method", "slope", "stderr"});
  REQUIRE(slopes.size() == 2);
  CHECK(slopes[0][1] == "pf");
  CHECK(slopes[1][1] == "mlpf");
  const auto cost = csv::read((dir.path / "cost.csv").string(),
                              {"model", "method", "L", "mse", "cost", "walltime"});
  CHECK(cost.size() == 6);
}

TEST_CASE("a result file reproduces itself from its embedded config") {
  TempDir dir("mlpf_embed");
  const auto cfg_path = dir.path / "ou.cfg";
  spit(cfg_path, "model = ou\nn = 10\nlevel = 2\nparticles = 64\nseed = 9\n");
  const auto out1 = dir.path / "a";
  CHECK(cli({"pf", "--config", cfg_path.string(), "--out", out1.string()}) == 0);

  const auto preamble = csv::read_preamble((out1 / "pf_steps.csv").string());
  REQUIRE(!preamble.empty());
  std::string embedded;
  std::string command;
  for (const auto& line : preamble) {
    if (line.rfind("command = ", 0) == 0) command = line.substr(10);
    embedded += line + "\n";
  }
  REQUIRE(command == "pf");
  const auto cfg2_path = dir.path / "embedded.cfg";
  spit(cfg2_path, embedded);
  const auto out2 = dir.path / "b";
  CHECK(cli({command, "--config", cfg2_path.string(), "--out", out2.string()}) == 0);
  CHECK(slurp(out1 / "pf_steps.csv") == slurp(out2 / "pf_steps.csv"));
  CHECK(slurp(out1 / "pf_summary.csv") == slurp(out2 / "pf_summary.csv"));
}

TEST_CASE("cli reports missing config and unknown model") {
  CHECK(cli({"pf", "--config", "/no/such/file.cfg"}) != 0);
  TempDir dir("mlpf_cli_err");
  const auto cfg = dir.path / "bad.cfg";
  spit(cfg, "model = heston\n");
  CHECK(cli({"pf", "--config", cfg.string()}) != 0);
  spit(cfg, "model = nlm\n");
  CHECK(cli({"kalman", "--config", cfg.string()}) != 0);
}

TEST_CASE("seed and out flags override the config") {
  TempDir dir("mlpf_cli_seed");
  const auto cfg = dir.path / "c.cfg";
  spit(cfg, "model = ou\nn = 6\nseed = 1\n");
  const auto o1 = dir.path / "s1";
  const auto o5 = dir.path / "s5";
  const auto o5b = dir.path / "s5b";
  CHECK(cli({"simulate", "--config", cfg.string(), "--out", o1.string()}) == 0);
  CHECK(cli({"simulate", "--config", cfg.string(), "--seed", "5", "--out",
             o5.string()}) == 0);
  CHECK(cli({"simulate", "--config", cfg.string(), "--seed", "5", "--out",
             o5b.string()}) == 0);
  CHECK(slurp(o5 / "dataset.csv") == slurp(o5b / "dataset.csv"));
  CHECK(slurp(o1 / "dataset.csv") != slurp(o5 / "dataset.csv"));
}

TEST_CASE("observations load from dataset files and return files") {
  TempDir dir("mlpf_load");
  const auto ou = builtin_model(ModelKind::OU);
  ExperimentConfig cfg;
  cfg.model = "ou";
  cfg.n = 9;
  cfg.seed = 77;
  const auto synthetic = load_observations(cfg, ou);
  CHECK(synthetic.size() == 9);

  const auto data = simulate_dataset(ou, 9, 10, rng::StreamKey{77}.child(rng::kTagDataset));
  CHECK(synthetic == data.observations);

  const auto ds_path = dir.path / "d.csv";
  write_dataset_csv(ds_path.string(), data);
  cfg.data_file = ds_path.string();
  CHECK(load_observations(cfg, ou) == data.observations);

  const auto ret_path = dir.path / "r.csv";
  spit(ret_path, "date,log_return\nd1,0.5\nd2,-0.5\nd3,1.5\n");
  cfg.data_file = ret_path.string();
  const auto returns = load_observations(cfg, ou);
  CHECK(returns.size() == 3);
}
