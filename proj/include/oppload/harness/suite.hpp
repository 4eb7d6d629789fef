#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oppload/harness/experiment.hpp"

namespace oppload::harness {

/// One planned run and, once executed, its outcome.
struct SuiteRun {
  ScenarioConfig config;
  std::optional<ExperimentReport> report;
  std::string error;  // set when the run failed
};

struct SuitePlan {
  std::vector<ScenarioConfig> scenarios;
  std::vector<assignment::Strategy> strategies;  // empty: as configured
  std::vector<std::size_t> clients;              // empty: as configured
  std::optional<std::size_t> seeds;              // override per-scenario seed count
  std::optional<std::uint64_t> first_seed;
};

/// Expands scenarios x clients x strategies x seeds in a fixed order.
std::vector<SuiteRun> expand(const SuitePlan& plan);

/// Runs every entry; failures are recorded and the rest continue.
void run_suite(std::vector<SuiteRun>& runs, unsigned jobs = 1);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::size_t n = 0;
};

Stat describe(const std::vector<double>& xs);

struct GroupKey {
  std::string scenario;
  std::size_t clients = 0;
  std::string strategy;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct SummaryRow {
  GroupKey key;
  std::size_t runs = 0;
  std::size_t workflows = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  // over successful workflows
  Stat execution, runtime, transmission, total;
  std::array<std::size_t, 5> states{};  // indexed by FinalState
};

using LoadMatrix = std::map<NodeAddress, std::map<NodeAddress, std::uint64_t>>;

struct Aggregate {
  std::vector<SummaryRow> rows;
  std::map<GroupKey, LoadMatrix> load;
};

Aggregate aggregate(const std::vector<ExperimentReport>& reports);

/// Conditional entropy H(worker | caller) in bits, weighted by selections per caller.
double selection_entropy(const LoadMatrix& m);

}  // namespace oppload::harness
