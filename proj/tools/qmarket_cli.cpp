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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qmarket/clearing.hpp"
#include "qmarket/experiment.hpp"
#include "qmarket/supply.hpp"

namespace {

struct DistFlags {
  std::string kind;
  double exponent = 2.0;
  std::string pcw_file;
};

struct CommonFlags {
  std::string config_path;
  DistFlags dist;
  std::string n_range;
  long trials = -1;
  std::optional<std::uint64_t> seed;
  double price_cap = -1.0;
  int starts = -1;
  std::string out_path;
  std::string format;
};

void add_common_options(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "JSON config file");
  cmd->add_option("--dist", flags->dist.kind,
                  "distribution kind: uniform | power-left | power-right | "
                  "piecewise-constant");
  cmd->add_option("--exponent", flags->dist.exponent,
                  "exponent k for the power kinds (density ~ x^k or (1-x)^k)");
  cmd->add_option("--pcw-file", flags->dist.pcw_file,
                  "piecewise-constant density file (\"breakpoint level\" rows)");
  cmd->add_option("--n-range", flags->n_range, "market sizes, e.g. 5..28");
  cmd->add_option("--trials", flags->trials, "Monte Carlo rounds per N");
  cmd->add_option("--seed", flags->seed, "master seed");
  cmd->add_option("--pbar", flags->price_cap, "price cap");
  cmd->add_option("--starts", flags->starts, "random-search starts for the fit");
  cmd->add_option("--out", flags->out_path, "output file (stdout if omitted)");
  cmd->add_option("--format", flags->format, "table output format: csv | json");
}

qmarket::BackgroundDistribution dist_from_flags(const DistFlags& flags,
                                                std::string* label) {
  using qmarket::BackgroundDistribution;
  BackgroundDistribution dist = BackgroundDistribution::uniform();
  if (flags.kind == "uniform") {
    dist = BackgroundDistribution::uniform();
  } else if (flags.kind == "power-left") {
    dist = BackgroundDistribution::power_left(flags.exponent);
  } else if (flags.kind == "power-right") {
    dist = BackgroundDistribution::power_right(flags.exponent);
  } else if (flags.kind == "piecewise-constant") {
    if (flags.pcw_file.empty()) {
      throw std::invalid_argument("piecewise-constant needs --pcw-file");
    }
    dist = BackgroundDistribution::piecewise_constant_from_file(flags.pcw_file);
  } else {
    throw std::invalid_argument("unknown --dist kind: " + flags.kind);
  }
  *label = dist.label();
  return dist;
}

// Configs from --config and/or flag overrides; flags win.
std::vector<qmarket::ExperimentConfig> resolve_configs(const CommonFlags& flags) {
  std::vector<qmarket::ExperimentConfig> configs;
  if (!flags.config_path.empty()) {
    configs = qmarket::load_configs(flags.config_path);
  } else {
    configs.emplace_back();
    if (flags.dist.kind.empty()) {
      throw std::invalid_argument("need --config or --dist");
    }
  }
  for (qmarket::ExperimentConfig& config : configs) {
    if (!flags.dist.kind.empty()) {
      config.distribution = dist_from_flags(flags.dist, &config.label);
    }
    if (!flags.n_range.empty()) {
      const auto sep = flags.n_range.find("..");
      if (sep == std::string::npos) {
        throw std::invalid_argument("--n-range must look like A..B");
      }
      config.n_min = std::stoi(flags.n_range.substr(0, sep));
      config.n_max = std::stoi(flags.n_range.substr(sep + 2));
    }
    if (flags.trials > 0) config.trials = flags.trials;
    if (flags.seed) config.seed = *flags.seed;
    if (flags.price_cap > 0.0) config.price_cap = flags.price_cap;
    if (flags.starts > 0) config.fit.n_starts = flags.starts;
  }
  return configs;
}

void write_output(const std::string& path, auto&& body) {
  if (path.empty()) {
    body(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

void apply_thread_cap() {
  if (const char* env = std::getenv("QMARKET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qmarket: reverse-auction equilibrium bidding, supply-curve simulation "
      "and q-exponential fits"};
  app.require_subcommand(1);

  CommonFlags table_flags;
  CLI::App* table_cmd =
      app.add_subcommand("table", "run the pipeline over an N range and emit "
                                  "one fit row per N");
  add_common_options(table_cmd, &table_flags);

  CommonFlags series_flags;
  CLI::App* series_cmd = app.add_subcommand(
      "series", "q-vs-N series for one or more distributions, with a "
                "first-four/last-four |q-1| summary");
  add_common_options(series_cmd, &series_flags);

  CommonFlags dump_flags;
  int dump_n = 5;
  std::string dump_dir = ".";
  bool dump_dispatch = false;
  CLI::App* dump_cmd = app.add_subcommand(
      "dump", "write strategy/supply/fit intermediates for a single N");
  add_common_options(dump_cmd, &dump_flags);
  dump_cmd->add_option("--n", dump_n, "market size");
  dump_cmd->add_option("--outdir", dump_dir, "output directory");
  dump_cmd->add_flag("--dump-dispatch", dump_dispatch,
                     "also write one sampled dispatch round as JSON");

  CLI11_PARSE(app, argc, argv);
  apply_thread_cap();

  try {
    if (table_cmd->parsed()) {
      const auto configs = resolve_configs(table_flags);
      if (configs.size() != 1) {
        throw std::invalid_argument("table: config must name one distribution");
      }
      const auto rows = qmarket::run_table(configs.front());
      write_output(table_flags.out_path, [&](std::ostream& out) {
        if (table_flags.format == "json") {
          qmarket::write_table_json(rows, out);
        } else {
          qmarket::write_table_csv(rows, out);
        }
      });
    } else if (series_cmd->parsed()) {
      const auto configs = resolve_configs(series_flags);
      const auto series = qmarket::run_q_series(configs);
      write_output(series_flags.out_path, [&](std::ostream& out) {
        qmarket::write_series_csv(series, out);
      });
      for (const auto& s : series.summaries) {
        std::cerr << s.distribution << ": mean|q-1| first four N = "
                  << s.mean_abs_dev_first4 << ", last four N = "
                  << s.mean_abs_dev_last4 << '\n';
      }
    } else if (dump_cmd->parsed()) {
      const auto configs = resolve_configs(dump_flags);
      if (configs.size() != 1) {
        throw std::invalid_argument("dump: config must name one distribution");
      }
      const auto& config = configs.front();
      qmarket::dump_intermediates(config, dump_n, dump_dir);
      if (dump_dispatch) {
        // One demonstration round of the auction at this N.
        const qmarket::DemandPmf pmf =
            qmarket::discretize(config.distribution, dump_n);
        qmarket::validate_for_equilibrium(pmf);
        const auto strategy = qmarket::solve_equilibrium(pmf, config.price_cap);
        qmarket::CounterRng rng(qmarket::derive_seed(config.seed, 0xD15C0ULL));
        qmarket::BidBook book(config.price_cap);
        for (int firm = 0; firm < dump_n; ++firm) {
          book.add_bid({firm, 1.0, {}}, strategy.sample_bid(rng));
        }
        const int demand = qmarket::sample_demand(pmf, rng);
        const auto ranking = qmarket::draw_ranking(book, rng);
        const auto dispatch = qmarket::clear(book, ranking, demand);
        std::ofstream out(std::filesystem::path(dump_dir) /
                          "dispatch_sample.json");
        if (!out) throw std::runtime_error("cannot write dispatch_sample.json");
        dispatch.to_json(out);
      }
    }
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
