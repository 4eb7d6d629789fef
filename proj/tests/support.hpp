#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oppload/client.hpp"
#include "oppload/simnet.hpp"
#include "oppload/worker_runtime.hpp"

namespace oppload::testing {

/// Environment that records what a node sends instead of using a network.
struct FakeEnv : runtime::Environment {
  sim::EventQueue queue;
  std::vector<Bundle> sent;
  std::vector<WorkflowId> purged;
  Telemetry tel;
  sim::Position pos;

  double now() const override { return queue.now(); }
  void schedule_at(double t, std::function<void()> action) override {
    queue.schedule_at(t, std::move(action));
  }
  void send(Bundle bundle) override { sent.push_back(std::move(bundle)); }
  sim::Position position() const override { return pos; }
  void purge_workflow(const WorkflowId& wf) override { purged.push_back(wf); }
  Telemetry& telemetry() override { return tel; }

  std::vector<Bundle> sent_of(BundleKind kind) const {
    std::vector<Bundle> out;
    for (const auto& b : sent)
      if (b.kind == kind) out.push_back(b);
    return out;
  }
  std::size_t count(TraceKind kind) const {
    std::size_t n = 0;
    for (const auto& e : tel.events()) n += e.kind == kind;
    return n;
  }
};

inline runtime::ServiceDefinition service(const std::string& name, double mean = 2.0,
                                          std::size_t output = 1000, double energy = 10.0) {
  return runtime::ServiceDefinition{name, 1, {mean, 0.0, output, energy}, "img"};
}

inline announce::CapabilityVector caps(double cpu, double memory, double disk, double energy,
                                       sim::Position at = {}) {
  return announce::CapabilityVector{cpu, memory, disk, energy, at};
}

inline announce::ServiceOffer offer(std::uint64_t worker, const std::string& service_name,
                                    announce::CapabilityVector c, double issued_at = 0.0) {
  return announce::ServiceOffer{NodeAddress(worker), service_name, 1, c, issued_at};
}

inline std::filesystem::path scenario_dir() { return OPPLOAD_SCENARIO_DIR; }

}  // namespace oppload::testing
