#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppload/simnet.hpp"
#include "oppload/worker_runtime.hpp"

namespace oppload::harness {

enum class Topology { Ring, RandomWaypoint };

std::string_view to_string(Topology t);

struct Cohort {
  std::string name;
  double share = 0.0;  // node count or fraction, see ScenarioConfig::cohort_mode
  announce::CapabilityVector capabilities;
  std::vector<std::size_t> pinned;  // node indices placed in this cohort first
};

enum class CohortMode { Count, Fraction };

struct ScenarioConfig {
  std::string name = "scenario";

  Topology topology = Topology::Ring;
  std::size_t nodes = 12;
  double ring_spacing_m = 100.0;  // chord between ring neighbours
  sim::RandomWaypoint waypoint;
  double warmup_s = 0.0;  // mobility run before t = 0

  sim::LinkModel link;
  double range_m = 40.0;
  double tick_s = 0.5;

  std::vector<runtime::ServiceDefinition> services;

  CohortMode cohort_mode = CohortMode::Count;
  std::vector<Cohort> cohorts;
  bool clients_are_workers = true;

  std::string workflow_text;
  std::string workflow_source;  // file name, informational
  std::size_t input_size_bytes = 0;
  std::size_t clients = 1;
  double offload_at_s = 10.0;

  runtime::RuntimeConfig runtime;
  double duration_s = 1800.0;
  double drain_s = 30.0;
  std::uint64_t seed = 1;
  std::size_t seeds = 1;  // suite: seeds seed .. seed+seeds-1

  /// Every problem found, empty when the config is usable.
  std::vector<std::string> validate() const;

  /// Stable text form of everything except the seed; feeds the digest.
  std::string canonical() const;
  std::string digest() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Reads a scenario; a `file` key under [workflow] is resolved against `base_dir`.
/// Throws ConfigError listing every problem.
ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Cohort sizes after rounding half-up; the remainder goes to the largest share.
std::vector<std::size_t> cohort_sizes(const ScenarioConfig& config, std::size_t workers);

std::uint64_t fnv1a(std::string_view data);

}  // namespace oppload::harness
