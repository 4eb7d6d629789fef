#pragma once

#include <memory>

#include "oppload/client.hpp"
#include "oppload/simnet.hpp"
#include "oppload/worker_runtime.hpp"

namespace oppload {

/// One simulated device: bundle endpoint, worker and client in one.
class Node final : public runtime::Environment {
 public:
  Node(sim::Network& network, sim::EventQueue& events, sim::NodeIndex index, Telemetry& telemetry,
       runtime::RuntimeConfig config, std::mt19937_64 rng,
       std::vector<runtime::ServiceDefinition> services, announce::CapabilityVector capabilities,
       std::map<std::string, Blob> inputs = {});

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  void start() { worker_.start_announcing(); }

  /// Entry point for every bundle the network hands to this node.
  void deliver(const Bundle& bundle);

  NodeAddress address() const { return core_.address(); }
  sim::NodeIndex index() const { return index_; }
  runtime::NodeCore& core() { return core_; }
  runtime::Worker& worker() { return worker_; }
  const runtime::Worker& worker() const { return worker_; }
  client::Client& client() { return client_; }
  const client::Client& client() const { return client_; }

  double now() const override { return events_.now(); }
  void schedule_at(double t, std::function<void()> action) override;
  void send(Bundle bundle) override;
  sim::Position position() const override { return network_.position(index_); }
  void purge_workflow(const WorkflowId& wf) override;
  Telemetry& telemetry() override { return telemetry_; }

 private:
  sim::Network& network_;
  sim::EventQueue& events_;
  sim::NodeIndex index_;
  Telemetry& telemetry_;
  runtime::NodeCore core_;
  runtime::Worker worker_;
  client::Client client_;
};

}  // namespace oppload
