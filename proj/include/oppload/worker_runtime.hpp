#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oppload/announce.hpp"
#include "oppload/assignment.hpp"
#include "oppload/errors.hpp"
#include "oppload/telemetry.hpp"
#include "oppload/workflow.hpp"

namespace oppload::runtime {

using announce::CapabilityVector;
using workflow::Archive;
using workflow::Task;
using workflow::WorkflowDescription;

struct SyntheticProfile {
  double exec_seconds_mean = 1.0;
  double exec_seconds_jitter = 0.0;
  std::size_t output_size_bytes = 0;
  double energy_cost_e = 0.0;
};

struct ServiceDefinition {
  std::string name;
  std::uint16_t param_count = 0;
  SyntheticProfile profile;
  std::string extension = "dat";

  bool valid() const;
};

struct RuntimeConfig {
  assignment::Strategy strategy = assignment::Strategy::Spread;
  assignment::RatingWeights weights;
  double announce_interval_s = 2.0;
  double offer_expiry_s = 120.0;
  double preprocess_s = 0.05;   // unpack and parse on arrival
  double postprocess_s = 0.75;  // pack, assign and hand over
  double fault_probability = 0.0;
  std::uint64_t noise_seed = 0;  // execution noise, keyed per workflow task
};

/// What a node sees of the world it runs in.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual double now() const = 0;
  virtual void schedule_at(double t, std::function<void()> action) = 0;
  /// Hands a bundle to the local bundle store for delivery.
  virtual void send(Bundle bundle) = 0;
  virtual sim::Position position() const = 0;
  /// Removes all locally stored bundles of the workflow and refuses new ones.
  virtual void purge_workflow(const WorkflowId& wf) = 0;
  virtual Telemetry& telemetry() = 0;
};

/// State shared by the worker and client roles of one node.
class NodeCore {
 public:
  NodeCore(NodeAddress address, RuntimeConfig config, std::mt19937_64 rng, Environment& env);

  NodeAddress address() const { return address_; }
  const RuntimeConfig& config() const { return config_; }
  Environment& env() { return env_; }
  announce::OfferDatabase& offers() { return offers_; }
  const announce::OfferDatabase& offers() const { return offers_; }
  std::mt19937_64& rng() { return rng_; }

  BundleId next_bundle_id() { return BundleId{address_, ++bundle_seq_}; }

  /// JiT choice for `task` from the local offer database, never this node
  /// itself nor anything in `exclude`.
  std::optional<NodeAddress> choose_worker(const Task& task, const std::set<NodeAddress>& exclude);

  /// Packs and sends an archive; it expires together with the workflow.
  void send_archive(BundleKind kind, NodeAddress to, const Archive& archive);

  void trace(TraceKind kind, const WorkflowId& wf, std::uint32_t task, NodeAddress peer = {},
             std::uint8_t detail = 0);

 private:
  NodeAddress address_;
  RuntimeConfig config_;
  std::mt19937_64 rng_;
  Environment& env_;
  announce::OfferDatabase offers_;
  std::uint64_t bundle_seq_ = 0;
};

enum class RetryDecision { RetryOnce, ReportToClient };

/// Only a worker-calling error on a JiT-assigned first attempt goes back to
/// the assigning node for one re-selection; everything else reaches the client.
RetryDecision decide_retry(const Task& failed_task, const WorkerError& error);

/// Worker role: executes synthetic services and moves the workflow along.
class Worker {
 public:
  Worker(NodeCore& core, std::vector<ServiceDefinition> services, CapabilityVector capabilities);

  /// Starts the periodic offer broadcast (no-op without services).
  void start_announcing();

  /// Offer bundle for the current live state, if any service is offered.
  std::optional<Bundle> make_offer_bundle();

  void on_archive(const Bundle& bundle);

  /// An assigned worker reported a calling error back to this node.
  void on_retry_request(Archive archive, NodeAddress failed_worker);

  void on_cleanup(const WorkflowId& wf);

  bool offers_service(const std::string& name) const { return services_.count(name) != 0; }
  bool capable_of(const Task& task) const;

  /// Live capabilities with the node's current position.
  CapabilityVector live_capabilities() const;
  double energy() const { return caps_.energy; }

  bool holds_files(const WorkflowId& wf) const { return files_.count(wf) != 0; }
  const std::map<WorkflowId, std::map<std::string, Blob>>& files() const { return files_; }

  std::size_t queued() const { return queue_.size(); }
  bool busy() const { return busy_; }
  std::uint64_t executions() const { return executions_; }
  std::uint64_t unpack_failures() const { return unpack_failures_; }

 private:
  struct Job {
    Archive archive;
  };

  void run_next();
  void execute(Job job);
  void complete(Job job, bool fault, double duration);
  void forward_or_return(Archive archive, std::optional<std::string> result);
  void report_error(Archive archive, WorkerError error, NodeAddress to);
  void announce_tick();

  NodeCore& core_;
  std::map<std::string, ServiceDefinition> services_;
  CapabilityVector caps_;
  std::deque<Job> queue_;
  bool busy_ = false;
  std::map<WorkflowId, std::map<std::string, Blob>> files_;
  std::set<WorkflowId> cleaned_;
  std::uint64_t executions_ = 0;
  std::uint64_t unpack_failures_ = 0;
};

}  // namespace oppload::runtime
