// Copyright 2026 The qmarket authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qmarket/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qmarket/errors.hpp"

namespace qmarket {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Distinct simulation and fit streams per N.
std::uint64_t sim_seed(const ExperimentConfig& config, int n) {
  return derive_seed(config.seed, 2ULL * static_cast<std::uint64_t>(n));
}
std::uint64_t fit_seed(const ExperimentConfig& config, int n) {
  return derive_seed(config.seed, 2ULL * static_cast<std::uint64_t>(n) + 1);
}

}  // namespace

std::uint64_t table_sim_seed(const ExperimentConfig& config, int n) {
  return sim_seed(config, n);
}

std::uint64_t table_fit_seed(const ExperimentConfig& config, int n) {
  return fit_seed(config, n);
}

void ExperimentConfig::validate() const {
  if (n_min < 3 || n_max < n_min) {
    throw std::invalid_argument(
        "experiment: need a nonempty N range with every N >= 3");
  }
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (!(price_cap > 0.0)) {
    throw std::invalid_argument("experiment: price cap must be positive");
  }
}

PipelineResult run_pipeline(const ExperimentConfig& config, int n) {
  const DemandPmf pmf = discretize(config.distribution, n);
  validate_for_equilibrium(pmf);
  PipelineResult result{solve_equilibrium(pmf, config.price_cap), {}, {}};
  result.curve = simulate(result.strategy, config.trials, sim_seed(config, n));
  FitConfig fit_config = config.fit;
  fit_config.seed = fit_seed(config, n);
  result.fit = fit(result.curve, fit_config);
  return result;
}

std::vector<TableRow> run_table(const ExperimentConfig& config) {
  config.validate();
  const int count = config.n_max - config.n_min + 1;
  std::vector<TableRow> rows(count);
  std::vector<std::string> failures(count);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    const int n = config.n_min + i;
    try {
      const PipelineResult r = run_pipeline(config, n);
      rows[i] = {n, r.fit.q, r.fit.alpha, r.fit.beta, r.fit.quadratic_error};
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }

  for (int i = 0; i < count; ++i) {
    if (!failures[i].empty()) {
      throw ExperimentError(config.n_min + i, failures[i]);
    }
  }
  return rows;
}

SeriesResult run_q_series(const std::vector<ExperimentConfig>& configs) {
  SeriesResult result;
  for (const ExperimentConfig& config : configs) {
    const std::vector<TableRow> rows = run_table(config);
    SeriesSummary summary;
    summary.distribution = config.label;
    const int count = static_cast<int>(rows.size());
    const int window = std::min(4, count);
    for (int i = 0; i < count; ++i) {
      result.points.push_back({config.label, rows[i].n, rows[i].q});
      if (i < window) summary.mean_abs_dev_first4 += std::abs(rows[i].q - 1.0);
      if (i >= count - window) {
        summary.mean_abs_dev_last4 += std::abs(rows[i].q - 1.0);
      }
    }
    summary.mean_abs_dev_first4 /= window;
    summary.mean_abs_dev_last4 /= window;
    result.summaries.push_back(summary);
  }
  return result;
}

void dump_intermediates(const ExperimentConfig& config, int n,
                        const std::filesystem::path& out_dir) {
  config.validate();
  if (n < 3) throw std::invalid_argument("dump: N must be >= 3");
  std::filesystem::create_directories(out_dir);

  const PipelineResult r = run_pipeline(config, n);
  const SupplyCurve oracle = exact_curve(r.strategy, n);

  const auto write_file = [&](const char* name, auto&& body) {
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path.string());
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
  };
  write_file("strategy.json", [&](std::ostream& o) { r.strategy.to_json(o); });
  write_file("supply_mc.csv", [&](std::ostream& o) { write_curve_csv(r.curve, o); });
  write_file("supply_exact.csv", [&](std::ostream& o) { write_curve_csv(oracle, o); });
  write_file("fit.json", [&](std::ostream& o) { r.fit.to_json(o); });
}

void write_table_csv(const std::vector<TableRow>& rows, std::ostream& out) {
  std::string text = "N,q,alpha,beta,quadratic_error\n";
  for (const TableRow& row : rows) {
    text += std::to_string(row.n);
    text += ',';
    text += fmt(row.q);
    text += ',';
    text += fmt(row.alpha);
    text += ',';
    text += fmt(row.beta);
    text += ',';
    text += fmt(row.quadratic_error);
    text += '\n';
  }
  out << text;
}

void write_table_json(const std::vector<TableRow>& rows, std::ostream& out) {
  nlohmann::json j = nlohmann::json::array();
  for (const TableRow& row : rows) {
    j.push_back({{"N", row.n},
                 {"q", row.q},
                 {"alpha", row.alpha},
                 {"beta", row.beta},
                 {"quadratic_error", row.quadratic_error}});
  }
  out << j.dump(2) << '\n';
}

void write_series_csv(const SeriesResult& series, std::ostream& out) {
  std::string text = "distribution,N,q\n";
  for (const SeriesPoint& p : series.points) {
    text += p.distribution;
    text += ',';
    text += std::to_string(p.n);
    text += ',';
    text += fmt(p.q);
    text += '\n';
  }
  out << text;
}

namespace {

BackgroundDistribution distribution_from_json(const nlohmann::json& spec,
                                              const std::filesystem::path& base,
                                              std::string* label) {
  const std::string kind = spec.at("kind").get<std::string>();
  BackgroundDistribution dist = BackgroundDistribution::uniform();
  if (kind == "uniform") {
    dist = BackgroundDistribution::uniform();
  } else if (kind == "power-left") {
    dist = BackgroundDistribution::power_left(spec.at("exponent").get<double>());
  } else if (kind == "power-right") {
    dist = BackgroundDistribution::power_right(spec.at("exponent").get<double>());
  } else if (kind == "piecewise-constant") {
    std::filesystem::path file = spec.at("file").get<std::string>();
    if (file.is_relative()) file = base / file;
    dist = BackgroundDistribution::piecewise_constant_from_file(file);
  } else {
    throw std::invalid_argument("config: unknown distribution kind: " + kind);
  }
  *label = spec.contains("label") ? spec.at("label").get<std::string>()
                                  : dist.label();
  return dist;
}

void apply_common(const nlohmann::json& j, ExperimentConfig* config) {
  if (j.contains("n_range")) {
    const auto& r = j.at("n_range");
    config->n_min = r.at(0).get<int>();
    config->n_max = r.at(1).get<int>();
  }
  if (j.contains("trials")) config->trials = j.at("trials").get<long>();
  if (j.contains("price_cap")) config->price_cap = j.at("price_cap").get<double>();
  if (j.contains("seed")) config->seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    if (f.contains("n_starts")) config->fit.n_starts = f.at("n_starts").get<int>();
    if (f.contains("q_min")) config->fit.q_min = f.at("q_min").get<double>();
    if (f.contains("q_max")) config->fit.q_max = f.at("q_max").get<double>();
    if (f.contains("beta_min")) config->fit.beta_min = f.at("beta_min").get<double>();
    if (f.contains("beta_max")) config->fit.beta_max = f.at("beta_max").get<double>();
  }
}

}  // namespace

std::vector<ExperimentConfig> load_configs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  nlohmann::json j;
  in >> j;
  const std::filesystem::path base = path.parent_path();

  std::vector<ExperimentConfig> configs;
  ExperimentConfig common;
  apply_common(j, &common);

  if (j.contains("distributions")) {
    for (const auto& spec : j.at("distributions")) {
      ExperimentConfig config = common;
      config.distribution = distribution_from_json(spec, base, &config.label);
      configs.push_back(std::move(config));
    }
  } else if (j.contains("distribution")) {
    ExperimentConfig config = common;
    config.distribution =
        distribution_from_json(j.at("distribution"), base, &config.label);
    configs.push_back(std::move(config));
  } else {
    throw std::invalid_argument(
        "config: need a \"distribution\" or \"distributions\" entry");
  }
  return configs;
}

}  // namespace qmarket
