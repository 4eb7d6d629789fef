#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oppload/client.hpp"
#include "oppload/harness/scenario.hpp"
#include "oppload/node.hpp"

namespace oppload::harness {

enum class FinalState : std::uint8_t { Success, WorkerError, Transmission, Runtime, Execution };

inline constexpr FinalState kAllFinalStates[] = {FinalState::Success, FinalState::WorkerError,
                                                 FinalState::Transmission, FinalState::Runtime,
                                                 FinalState::Execution};

std::string_view to_string(FinalState s);
std::optional<FinalState> final_state_from_string(std::string_view s);

struct TaskPhases {
  double runtime_s = 0.0;
  double transmission_s = 0.0;
  double execution_s = 0.0;
  double total() const { return runtime_s + transmission_s + execution_s; }
};

struct WorkflowRecord {
  WorkflowId id;
  FinalState state = FinalState::Runtime;
  client::HandleStatus status = client::HandleStatus::Pending;
  std::optional<ErrorClass> error;
  double submitted_at = 0.0;
  double finished_at = 0.0;  // terminal time, or end of run when still pending
  std::vector<TaskPhases> tasks;

  TaskPhases totals() const;
};

struct WorkerRecord {
  NodeAddress address;
  std::string cohort;
  double initial_energy = 0.0;
  double residual_energy = 0.0;
  std::uint64_t executions = 0;
};

struct ExperimentReport {
  std::string scenario;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::size_t clients = 0;
  double ended_at = 0.0;

  std::vector<WorkflowRecord> workflows;
  /// caller -> worker -> number of JiT selections
  std::map<NodeAddress, std::map<NodeAddress, std::uint64_t>> selections;
  std::vector<WorkerRecord> workers;

  // invariant probes
  std::uint64_t executions_after_deadline = 0;
  std::uint64_t terminal_transitions = 0;
  std::uint64_t cleanup_leaks = 0;  // tagged bundles/files left where the marker arrived
  std::uint64_t bundles_transferred = 0;
  std::uint64_t transfers_aborted = 0;
};

/// Phases and final state of one workflow from its trace. Events must be in
/// recording order; `end` closes a workflow that never reached a terminal state.
WorkflowRecord account(const WorkflowId& wf, const std::vector<TraceEvent>& events,
                       std::size_t task_count, double end);

/// A built world: network, nodes and clients, ready to run.
class World {
 public:
  explicit World(const ScenarioConfig& config);
  ~World();

  void run();
  ExperimentReport report() const;

  sim::EventQueue& events() { return events_; }
  sim::Network& network() { return *network_; }
  Node& node(std::size_t i) { return *nodes_.at(i); }
  std::size_t size() const { return nodes_.size(); }
  const Telemetry& telemetry() const { return telemetry_; }
  const std::vector<std::string>& cohort_of() const { return cohort_of_; }
  const std::vector<WorkflowId>& submitted() const { return submitted_; }

  /// Submits the scenario workflow from every client now.
  void offload_all();

 private:
  bool settled() const;

  ScenarioConfig config_;
  sim::EventQueue events_;
  std::unique_ptr<sim::Network> network_;
  Telemetry telemetry_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<std::string> cohort_of_;
  std::vector<double> initial_energy_;
  std::vector<WorkflowId> submitted_;
  std::size_t task_count_ = 0;
};

ExperimentReport run_scenario(const ScenarioConfig& config);

}  // namespace oppload::harness
