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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qmarket/demand.hpp"
#include "qmarket/errors.hpp"
#include "qmarket/qexp.hpp"

namespace qmarket {

/// One full-pipeline experiment: background density -> demand pmf ->
/// equilibrium -> simulated supply curve -> q-exponential fit, for each N in
/// [n_min, n_max]. Seeds for the simulation and the fit of each N derive
/// deterministically from (seed, N), so rows may be computed concurrently.
struct ExperimentConfig {
  BackgroundDistribution distribution = BackgroundDistribution::uniform();
  std::string label = "uniform";
  int n_min = 5;
  int n_max = 28;
  long trials = 10000;
  double price_cap = 100.0;
  std::uint64_t seed = 1;
  FitConfig fit;

  void validate() const;
};

struct TableRow {
  int n = 0;
  double q = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double quadratic_error = 0.0;
};

/// Pipeline failure wrapper naming the N that failed.
class ExperimentError : public Error {
 public:
  ExperimentError(int n, const std::string& msg)
      : Error("N=" + std::to_string(n) + ": " + msg), n_(n) {}
  int n() const { return n_; }

 private:
  int n_;
};

/// One row per N in the config range, in N order (column order of the result
/// tables: N, q, alpha, beta, quadratic error).
std::vector<TableRow> run_table(const ExperimentConfig& config);

/// Single-N pipeline, also returning the intermediates.
struct PipelineResult {
  EquilibriumStrategy strategy;
  SupplyCurve curve;
  QExpFit fit;
};
PipelineResult run_pipeline(const ExperimentConfig& config, int n);

/// Seeds run_pipeline derives from (config.seed, n) for the simulation and
/// the fit; exposed so dumped artifacts can be reproduced externally.
std::uint64_t table_sim_seed(const ExperimentConfig& config, int n);
std::uint64_t table_fit_seed(const ExperimentConfig& config, int n);

struct SeriesPoint {
  std::string distribution;
  int n = 0;
  double q = 0.0;
};

struct SeriesSummary {
  std::string distribution;
  double mean_abs_dev_first4 = 0.0;  // mean |q-1| over the first four N
  double mean_abs_dev_last4 = 0.0;   // mean |q-1| over the last four N
};

struct SeriesResult {
  std::vector<SeriesPoint> points;      // long format, plot-ready
  std::vector<SeriesSummary> summaries; // one per distribution
};

/// q-vs-N series for several distributions; empty input gives an empty result.
SeriesResult run_q_series(const std::vector<ExperimentConfig>& configs);

/// Writes strategy.json, supply_mc.csv, supply_exact.csv and fit.json for a
/// single N into out_dir. Throws std::runtime_error on unwritable paths.
void dump_intermediates(const ExperimentConfig& config, int n,
                        const std::filesystem::path& out_dir);

/// CSV with header "N,q,alpha,beta,quadratic_error"; doubles in shortest
/// round-trip form, so identical rows serialize byte-identically.
void write_table_csv(const std::vector<TableRow>& rows, std::ostream& out);
void write_table_json(const std::vector<TableRow>& rows, std::ostream& out);
void write_series_csv(const SeriesResult& series, std::ostream& out);

/// Config file schema (JSON):
/// {
///   "distribution": {"kind": "uniform" |
///                    {"kind": "power-left", "exponent": 2} |
///                    {"kind": "power-right", "exponent": 2} |
///                    {"kind": "piecewise-constant", "file": "g.txt"}},
///   "n_range": [5, 28], "trials": 10000, "price_cap": 100.0, "seed": 1,
///   "fit": {"n_starts": 500}
/// }
/// A series config may instead carry "distributions": [ ... ] (a list of the
/// distribution objects above), sharing the remaining settings.
std::vector<ExperimentConfig> load_configs(const std::filesystem::path& path);

}  // namespace qmarket
