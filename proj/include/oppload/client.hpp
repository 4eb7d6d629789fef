#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "oppload/worker_runtime.hpp"

namespace oppload::client {

using runtime::NodeCore;
using workflow::Archive;
using workflow::WorkflowDescription;

enum class HandleStatus : std::uint8_t { Pending, Succeeded, Failed, TimedOut };

std::string_view to_string(HandleStatus s);

struct WorkflowHandle {
  WorkflowId id;
  double submitted_at = 0.0;
  double ttl_seconds = workflow::kDefaultTtl;
  HandleStatus status = HandleStatus::Pending;
  double finished_at = 0.0;
  std::optional<Archive> result;  // on success
  std::optional<WorkerError> error;
  std::optional<std::string> error_log;

  bool terminal() const { return status != HandleStatus::Pending; }
  double deadline() const { return submitted_at + ttl_seconds; }
};

/// Client role: submits workflows and waits for their outcome.
class Client {
 public:
  Client(NodeCore& core, std::map<std::string, Blob> inputs = {});

  /// Parses and submits. Throws workflow::ParseError on a bad description.
  WorkflowId offload(std::string_view description_text);
  WorkflowId offload(WorkflowDescription description);

  /// Result or error archive addressed to this client.
  void on_result(const Bundle& bundle);

  /// Times the workflow out if it is still pending past its deadline.
  void expire(const WorkflowId& wf);

  const WorkflowHandle* handle(const WorkflowId& wf) const;
  const std::map<WorkflowId, WorkflowHandle>& handles() const { return handles_; }
  std::size_t pending() const;

 private:
  void finish(WorkflowHandle& h, HandleStatus status);
  void broadcast_cleanup(const WorkflowHandle& h);

  NodeCore& core_;
  std::map<std::string, Blob> inputs_;
  std::map<WorkflowId, WorkflowHandle> handles_;
  std::uint32_t seq_ = 0;
};

/// Workflow id carried by a cleanup marker, if well formed.
std::optional<WorkflowId> cleanup_target(const Bundle& marker);

}  // namespace oppload::client
