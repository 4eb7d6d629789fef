// oppload: run offloading scenarios and turn their reports into tables.
#include <cstdio>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "oppload/harness/ini.hpp"
#include "oppload/harness/output.hpp"

using namespace oppload;
using namespace oppload::harness;

namespace {

std::vector<assignment::Strategy> parse_strategies(const std::string& text) {
  std::vector<assignment::Strategy> out;
  if (text.empty()) return out;
  if (text == "all") return {std::begin(assignment::kAllStrategies), std::end(assignment::kAllStrategies)};
  for (const auto& name : split_list(text)) {
    auto s = assignment::strategy_from_string(name);
    if (!s) throw CLI::ValidationError("--strategy", "unknown strategy '" + name + "'");
    out.push_back(*s);
  }
  return out;
}

void print_report(const ExperimentReport& r) {
  std::printf("scenario %s  strategy %s  seed %llu  digest %s\n", r.scenario.c_str(),
              r.strategy.c_str(), static_cast<unsigned long long>(r.seed), r.config_digest.c_str());
  for (const auto& w : r.workflows) {
    const auto t = w.totals();
    std::printf("  %s  %-10s %-12s", w.id.to_string().c_str(),
                std::string(client::to_string(w.status)).c_str(),
                std::string(to_string(w.state)).c_str());
    if (w.error) std::printf(" [%s]", std::string(to_string(*w.error)).c_str());
    std::printf("  runtime %.2f s  transmission %.2f s  execution %.2f s  total %.2f s\n",
                t.runtime_s, t.transmission_s, t.execution_s, t.total());
  }
}

void print_summary(const std::vector<ExperimentReport>& reports) {
  const auto agg = aggregate(reports);
  std::printf("%-24s %3s %-7s %5s %8s %16s %16s %16s %16s\n", "scenario", "cl", "strat", "runs",
              "success", "exec", "runtime", "transm", "total");
  for (const auto& row : agg.rows) {
    auto cell = [](const Stat& s) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.mean, s.sd);
      return std::string(buf);
    };
    std::printf("%-24s %3zu %-7s %5zu %7.1f%% %16s %16s %16s %16s\n", row.key.scenario.c_str(),
                row.key.clients, row.key.strategy.c_str(), row.runs, 100.0 * row.success_rate,
                cell(row.execution).c_str(), cell(row.runtime).c_str(),
                cell(row.transmission).c_str(), cell(row.total).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opportunistic workflow offloading simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, strategy;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> clients;
  auto* run = app.add_subcommand("run", "run one scenario once");
  run->add_option("scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "random seed");
  run->add_option("--strategy", strategy, "recent, random, best or spread");
  run->add_option("--clients", clients, "number of clients");
  run->add_option("--out", out_dir, "directory for CSV output");

  std::vector<std::string> scenario_paths;
  std::string suite_strategies, client_list;
  std::optional<std::size_t> seeds;
  std::optional<std::uint64_t> first_seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* suite = app.add_subcommand("suite", "run scenarios over seeds and strategies");
  suite->add_option("scenarios", scenario_paths, "scenario files")->required()->check(CLI::ExistingFile);
  suite->add_option("--seeds", seeds, "number of seeds per configuration");
  suite->add_option("--seed", first_seed, "first seed");
  suite->add_option("--strategy", suite_strategies, "comma separated list or 'all'");
  suite->add_option("--clients", client_list, "comma separated client counts");
  suite->add_option("--jobs", jobs, "parallel runs");
  suite->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "re-aggregate saved reports");
  report->add_option("inputs", inputs, "output directories or reports.json files")->required();
  report->add_option("--out", out_dir, "output directory")->required();

  auto* plot = app.add_subcommand("plot-data", "emit figure-ready CSV from saved reports");
  plot->add_option("inputs", inputs, "output directories or reports.json files")->required();
  plot->add_option("--out", out_dir, "output directory (default: first input)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = load_scenario(scenario_path);
      if (seed) config.seed = *seed;
      if (clients) config.clients = *clients;
      if (!strategy.empty()) {
        auto s = assignment::strategy_from_string(strategy);
        if (!s) throw CLI::ValidationError("--strategy", "unknown strategy '" + strategy + "'");
        config.runtime.strategy = *s;
      }
      if (auto problems = config.validate(); !problems.empty()) throw ConfigError(problems);
      std::vector<SuiteRun> runs(1);
      runs[0].config = config;
      run_suite(runs, 1);
      if (!runs[0].report) throw std::runtime_error(runs[0].error);
      print_report(*runs[0].report);
      if (!out_dir.empty()) write_outputs(out_dir, suite_tables(runs));
      return 0;
    }
    if (*suite) {
      SuitePlan plan;
      for (const auto& p : scenario_paths) plan.scenarios.push_back(load_scenario(p));
      plan.strategies = parse_strategies(suite_strategies);
      for (const auto& c : split_list(client_list)) plan.clients.push_back(std::stoul(c));
      plan.seeds = seeds;
      plan.first_seed = first_seed;
      auto runs = expand(plan);
      run_suite(runs, jobs);
      std::vector<ExperimentReport> reports;
      std::size_t failed = 0;
      for (const auto& r : runs) {
        if (r.report) reports.push_back(*r.report);
        else {
          ++failed;
          std::fprintf(stderr, "run %s seed %llu failed: %s\n", r.config.name.c_str(),
                       static_cast<unsigned long long>(r.config.seed), r.error.c_str());
        }
      }
      write_outputs(out_dir, suite_tables(runs));
      print_summary(reports);
      std::printf("%zu runs, %zu failed, output in %s\n", runs.size(), failed, out_dir.c_str());
      return 0;
    }
    std::vector<ExperimentReport> reports;
    for (const auto& in : inputs) {
      auto more = load_reports(in);
      reports.insert(reports.end(), more.begin(), more.end());
    }
    if (*report) {
      write_outputs(out_dir, report_tables(reports));
      print_summary(reports);
      return 0;
    }
    if (*plot) {
      if (out_dir.empty()) {
        const std::filesystem::path first(inputs.front());
        out_dir = std::filesystem::is_directory(first) ? first.string() : first.parent_path().string();
      }
      write_outputs(out_dir, plot_tables(reports));
      std::printf("plot data written to %s\n", out_dir.c_str());
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
