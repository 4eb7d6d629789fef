#include "oppload/node.hpp"

namespace oppload {

Node::Node(sim::Network& network, sim::EventQueue& events, sim::NodeIndex index,
           Telemetry& telemetry, runtime::RuntimeConfig config, std::mt19937_64 rng,
           std::vector<runtime::ServiceDefinition> services,
           announce::CapabilityVector capabilities, std::map<std::string, Blob> inputs)
    : network_(network),
      events_(events),
      index_(index),
      telemetry_(telemetry),
      core_(network.address(index), config, std::move(rng), *this),
      worker_(core_, std::move(services), capabilities),
      client_(core_, std::move(inputs)) {}

void Node::schedule_at(double t, std::function<void()> action) {
  events_.schedule_at(t, std::move(action));
}

void Node::send(Bundle bundle) { network_.originate(index_, std::move(bundle)); }

void Node::purge_workflow(const WorkflowId& wf) {
  network_.purge_workflow(index_, wf);
  worker_.on_cleanup(wf);
}

void Node::deliver(const Bundle& bundle) {
  switch (bundle.kind) {
    case BundleKind::Offer:
      core_.offers().ingest(bundle, now());
      return;
    case BundleKind::WorkflowArchive:
      worker_.on_archive(bundle);
      return;
    case BundleKind::ResultArchive:
      client_.on_result(bundle);
      return;
    case BundleKind::ErrorArchive: {
      workflow::Archive archive;
      try {
        archive = workflow::unpack(bundle.payload);
      } catch (const workflow::UnpackError&) {
        core_.trace(TraceKind::UnpackFailed, bundle.workflow.value_or(WorkflowId{}), 0,
                    bundle.source);
        return;
      }
      const auto& d = archive.description;
      const bool retry = archive.error && archive.assigner == address() && !d.finished() &&
                         runtime::decide_retry(d.current(), *archive.error) ==
                             runtime::RetryDecision::RetryOnce;
      if (retry) {
        core_.trace(TraceKind::ErrorDelivered, d.id, static_cast<std::uint32_t>(d.cursor),
                    bundle.source, static_cast<std::uint8_t>(archive.error->cls));
        worker_.on_retry_request(std::move(archive), bundle.source);
      } else if (d.client == address()) {
        client_.on_result(bundle);
      }
      return;
    }
    case BundleKind::CleanupMarker:
      if (auto wf = client::cleanup_target(bundle)) purge_workflow(*wf);
      return;
  }
}

}  // namespace oppload
