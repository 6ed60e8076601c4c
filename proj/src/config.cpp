#include "mlpf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mlpf/csv.hpp"
#include "mlpf/kernel.hpp"

namespace mlpf {

namespace {

const std::set<std::string> kConstantKeys = {"theta", "mu",  "sigma", "tau2",
                                             "s",     "nu",  "x0",    "delta"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& value, const std::string& key,
                    const std::string& origin) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(origin + ": key '" + key +
                                "' has non-numeric value '" + value + "'");
  }
}

int parse_int(const std::string& value, const std::string& key,
              const std::string& origin) {
  const double v = parse_number(value, key, origin);
  if (v != std::floor(v))
    throw std::invalid_argument(origin + ": key '" + key +
                                "' must be an integer");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& value, const std::string& key,
                const std::string& origin) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw std::invalid_argument(origin + ": key '" + key +
                              "' must be true or false");
}

}  // namespace

std::string ExperimentConfig::resolved_text() const {
  std::map<std::string, std::string> kv;
  kv["command"] = command;
  kv["model"] = model;
  for (const auto& [k, v] : constant_overrides) kv[k] = csv::fmt(v);
  kv["method"] = method;
  kv["level"] = csv::fmt(level);
  kv["level_min"] = csv::fmt(level_min);
  kv["level_max"] = csv::fmt(level_max);
  kv["particles"] = csv::fmt(particles);
  kv["repetitions"] = csv::fmt(repetitions);
  kv["ess_fraction"] = csv::fmt(ess_fraction);
  kv["seed"] = std::to_string(seed);
  if (!data_file.empty()) kv["data"] = data_file;
  kv["n"] = csv::fmt(n);
  kv["truth_level"] = csv::fmt(truth_level);
  kv["truth"] = truth;
  kv["reference_level"] = csv::fmt(reference_level);
  kv["reference_particles"] = csv::fmt(reference_particles);
  kv["reference_seeds"] = csv::fmt(reference_seeds);
  kv["rate_particles"] = csv::fmt(rate_particles);
  kv["record_walltime"] = record_walltime ? "true" : "false";
  // out_dir is where results land, not part of the experiment identity,
  // so it stays out of the embedded config.
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  return text;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    if (!seen.insert(key).second)
      throw std::invalid_argument(origin + ": duplicate key '" + key + "'");

    if (kConstantKeys.count(key)) {
      cfg.constant_overrides[key] = parse_number(value, key, origin);
    } else if (key == "model") {
      cfg.model = value;
    } else if (key == "method") {
      if (value != "pf" && value != "mlpf" && value != "both")
        throw std::invalid_argument(origin + ": method must be pf, mlpf or both");
      cfg.method = value;
    } else if (key == "level") {
      cfg.level = parse_int(value, key, origin);
    } else if (key == "level_min") {
      cfg.level_min = parse_int(value, key, origin);
    } else if (key == "level_max") {
      cfg.level_max = parse_int(value, key, origin);
    } else if (key == "particles") {
      cfg.particles = parse_int(value, key, origin);
    } else if (key == "repetitions") {
      cfg.repetitions = parse_int(value, key, origin);
    } else if (key == "ess_fraction") {
      cfg.ess_fraction = parse_number(value, key, origin);
    } else if (key == "seed") {
      try {
        std::size_t pos = 0;
        cfg.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw std::invalid_argument(origin + ": seed must be a non-negative integer");
      }
    } else if (key == "data") {
      cfg.data_file = value;
    } else if (key == "n") {
      cfg.n = parse_int(value, key, origin);
    } else if (key == "truth_level") {
      cfg.truth_level = parse_int(value, key, origin);
    } else if (key == "truth") {
      if (value != "kalman" && value != "reference" && value != "auto")
        throw std::invalid_argument(origin +
                                    ": truth must be kalman, reference or auto");
      cfg.truth = value;
    } else if (key == "reference_level") {
      cfg.reference_level = parse_int(value, key, origin);
    } else if (key == "reference_particles") {
      cfg.reference_particles = parse_int(value, key, origin);
    } else if (key == "reference_seeds") {
      cfg.reference_seeds = parse_int(value, key, origin);
    } else if (key == "rate_particles") {
      cfg.rate_particles = parse_int(value, key, origin);
    } else if (key == "record_walltime") {
      cfg.record_walltime = parse_bool(value, key, origin);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "command") {
      cfg.command = value;  // present in embedded configs
    } else {
      throw std::invalid_argument(origin + ": unknown key '" + key + "'");
    }
  }
  if (!(cfg.ess_fraction > 0.0 && cfg.ess_fraction <= 1.0))
    throw std::invalid_argument(origin + ": ess_fraction must be in (0, 1]");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

ReturnSeries ingest_returns(const std::string& path) {
  const auto rows = csv::read(path);
  if (rows.empty()) throw std::runtime_error(path + ": empty file");
  const auto& header = rows[0];
  if (header.size() != 2 || header[0] != "date")
    throw std::runtime_error(path + ": expected header date,price or date,log_return");
  bool prices;
  if (header[1] == "price") prices = true;
  else if (header[1] == "log_return") prices = false;
  else
    throw std::runtime_error(path + ": expected header date,price or date,log_return");

  std::vector<std::string> dates;
  std::vector<double> raw;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string row_id = path + ": row " + std::to_string(i + 1);
    if (rows[i].size() != 2) throw std::runtime_error(row_id + ": expected 2 fields");
    const double v = csv::to_double(rows[i][1], row_id);
    if (prices && !(v > 0.0))
      throw std::runtime_error(row_id + ": non-positive price");
    dates.push_back(rows[i][0]);
    raw.push_back(v);
  }

  ReturnSeries series;
  if (prices) {
    if (raw.size() < 3)
      throw std::runtime_error(path + ": need at least 3 price rows");
    for (std::size_t i = 1; i < raw.size(); ++i) {
      series.dates.push_back(dates[i]);
      series.values.push_back(std::log(raw[i] / raw[i - 1]));
    }
  } else {
    if (raw.size() < 2)
      throw std::runtime_error(path + ": need at least 2 return rows");
    series.dates = dates;
    series.values = raw;
  }

  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(series.values.size());
  double var = 0.0;
  for (double v : series.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(series.values.size());  // population variance
  if (!(var > 0.0))
    throw std::runtime_error(path + ": returns have zero variance");
  const double inv_sd = 1.0 / std::sqrt(var);
  for (double& v : series.values) v *= inv_sd;
  return series;
}

Dataset simulate_dataset(const ModelSpec& m, int n, int truth_level,
                         rng::StreamKey key) {
  if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  Dataset data;
  rng::GaussianStream latent_stream(key.child(rng::kTagDatasetLatent));
  rng::GaussianStream obs_stream(key.child(rng::kTagDatasetObs));
  double x = m.c.x0;
  for (int k = 0; k < n; ++k) {
    x = simulate_transition(m, x, LevelIndex{truth_level}, latent_stream);
    data.latent.push_back(x);
    data.observations.push_back(obs_sample(m, x, obs_stream));
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& preamble) {
  csv::Writer w(path, preamble);
  w.header({"step", "y", "latent"});
  for (std::size_t k = 0; k < data.observations.size(); ++k)
    w.row({csv::fmt(k + 1), csv::fmt(data.observations[k]),
           csv::fmt(data.latent[k])});
}

Dataset read_dataset_csv(const std::string& path) {
  const auto rows = csv::read(path, {"step", "y", "latent"});
  Dataset data;
  std::size_t expected = 1;
  for (const auto& row : rows) {
    const std::string row_id = path + ": step " + row[0];
    const double step = csv::to_double(row[0], row_id);
    if (step != static_cast<double>(expected))
      throw std::runtime_error(path + ": step indices must be contiguous from 1");
    ++expected;
    data.observations.push_back(csv::to_double(row[1], row_id));
    data.latent.push_back(csv::to_double(row[2], row_id));
  }
  return data;
}

std::vector<double> load_observations(const ExperimentConfig& cfg,
                                      const ModelSpec& m) {
  if (!cfg.data_file.empty()) {
    // Dataset files carry a step,y,latent header; anything else goes
    // through the returns ingester.
    std::ifstream probe(cfg.data_file, std::ios::binary);
    if (!probe)
      throw std::runtime_error("cannot open data file '" + cfg.data_file + "'");
    std::string first;
    while (std::getline(probe, first)) {
      if (!first.empty() && first.back() == '\r') first.pop_back();
      if (!first.empty() && first[0] != '#') break;
    }
    if (first.rfind("step,", 0) == 0)
      return read_dataset_csv(cfg.data_file).observations;
    return ingest_returns(cfg.data_file).values;
  }
  const rng::StreamKey key =
      rng::StreamKey{cfg.seed}.child(rng::kTagDataset);
  return simulate_dataset(m, cfg.n, cfg.truth_level, key).observations;
}

}  // namespace mlpf
