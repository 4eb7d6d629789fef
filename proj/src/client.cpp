#include "oppload/client.hpp"

#include <cmath>
#include <limits>

namespace oppload::client {

std::string_view to_string(HandleStatus s) {
  switch (s) {
    case HandleStatus::Pending: return "pending";
    case HandleStatus::Succeeded: return "succeeded";
    case HandleStatus::Failed: return "failed";
    case HandleStatus::TimedOut: return "timed_out";
  }
  return "?";
}

Client::Client(NodeCore& core, std::map<std::string, Blob> inputs)
    : core_(core), inputs_(std::move(inputs)) {}

WorkflowId Client::offload(std::string_view description_text) {
  return offload(workflow::parse(description_text));
}

WorkflowId Client::offload(WorkflowDescription description) {
  auto& env = core_.env();
  const double now = env.now();
  description.id = WorkflowId{core_.address(), ++seq_};
  description.client = core_.address();
  description.cursor = 0;
  description.created_at = now;

  WorkflowHandle& h = handles_[description.id];
  h.id = description.id;
  h.submitted_at = now;
  h.ttl_seconds = description.ttl_seconds;
  core_.trace(TraceKind::Submitted, h.id, 0);

  const WorkflowId wf = h.id;
  env.schedule_at(std::nextafter(h.deadline(), std::numeric_limits<double>::infinity()),
                  [this, wf] { expire(wf); });

  if (description.tasks.empty()) {
    h.error = WorkerError{ErrorClass::TaskExecution, "workflow has no tasks", 0, false};
    finish(h, HandleStatus::Failed);
    return wf;
  }
  const auto& first = description.current();
  auto worker = core_.choose_worker(first, {});
  if (!worker) {
    h.error = WorkerError{ErrorClass::WorkerSelection,
                          "no capable worker known for '" + first.service + "'", 0, false};
    h.error_log = "[" + std::string(to_string(ErrorClass::WorkerSelection)) + "] task 1 (" +
                  first.service + ") at " + core_.address().to_string() + ": " + h.error->message +
                  "\n";
    // nothing left the node, so there is nothing to clean up
    h.status = HandleStatus::Failed;
    h.finished_at = now;
    core_.trace(TraceKind::Terminal, wf, 0, {}, static_cast<std::uint8_t>(h.status));
    return wf;
  }
  if (first.just_in_time()) core_.trace(TraceKind::Selected, wf, 0, *worker);

  Archive archive;
  archive.description = std::move(description);
  archive.files = inputs_;
  archive.assigner = core_.address();
  const NodeAddress to = *worker;
  env.schedule_at(now + core_.config().postprocess_s, [this, archive = std::move(archive), to] {
    const auto& d = archive.description;
    auto it = handles_.find(d.id);
    if (it == handles_.end() || it->second.terminal()) return;
    core_.trace(TraceKind::ArchiveSent, d.id, 0, to);
    core_.send_archive(BundleKind::WorkflowArchive, to, archive);
  });
  return wf;
}

void Client::on_result(const Bundle& bundle) {
  if (bundle.kind != BundleKind::ResultArchive && bundle.kind != BundleKind::ErrorArchive) return;
  Archive archive;
  try {
    archive = workflow::unpack(bundle.payload);
  } catch (const workflow::UnpackError&) {
    core_.trace(TraceKind::UnpackFailed, bundle.workflow.value_or(WorkflowId{}), 0, bundle.source);
    return;
  }
  auto it = handles_.find(archive.description.id);
  if (it == handles_.end()) return;
  WorkflowHandle& h = it->second;
  const bool ok = bundle.kind == BundleKind::ResultArchive;
  const auto task = static_cast<std::uint32_t>(
      ok ? archive.description.tasks.size() - 1 : archive.description.cursor);
  core_.trace(ok ? TraceKind::ResultDelivered : TraceKind::ErrorDelivered, h.id, task,
              bundle.source);
  if (h.terminal()) return;
  if (ok) {
    h.result = std::move(archive);
    finish(h, HandleStatus::Succeeded);
  } else {
    h.error = archive.error;
    h.error_log = archive.error_log;
    h.result = std::move(archive);
    finish(h, HandleStatus::Failed);
  }
}

void Client::expire(const WorkflowId& wf) {
  auto it = handles_.find(wf);
  if (it == handles_.end()) return;
  WorkflowHandle& h = it->second;
  if (h.terminal() || !(core_.env().now() > h.deadline())) return;
  finish(h, HandleStatus::TimedOut);
}

const WorkflowHandle* Client::handle(const WorkflowId& wf) const {
  auto it = handles_.find(wf);
  return it == handles_.end() ? nullptr : &it->second;
}

std::size_t Client::pending() const {
  std::size_t n = 0;
  for (const auto& [id, h] : handles_) n += !h.terminal();
  return n;
}

void Client::finish(WorkflowHandle& h, HandleStatus status) {
  h.status = status;
  h.finished_at = core_.env().now();
  core_.trace(TraceKind::Terminal, h.id, 0, {}, static_cast<std::uint8_t>(status));
  broadcast_cleanup(h);
}

void Client::broadcast_cleanup(const WorkflowHandle& h) {
  auto& env = core_.env();
  env.purge_workflow(h.id);
  const std::string text = h.id.to_string();
  Bundle marker;
  marker.id = core_.next_bundle_id();
  marker.source = core_.address();
  marker.kind = BundleKind::CleanupMarker;
  marker.payload = Payload(Bytes(text.begin(), text.end()));
  marker.created_at = env.now();
  marker.ttl_seconds = h.ttl_seconds;
  env.send(std::move(marker));
}

std::optional<WorkflowId> cleanup_target(const Bundle& marker) {
  if (marker.kind != BundleKind::CleanupMarker) return std::nullopt;
  const Bytes bytes = marker.payload.flatten();
  return WorkflowId::parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace oppload::client
