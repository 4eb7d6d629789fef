#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "oppload/bundle_store.hpp"

namespace oppload {

enum class TraceKind : std::uint8_t {
  Submitted,
  Selected,  // peer = chosen worker; detail = 1 on a retry re-selection
  ArchiveSent,
  ArchiveDelivered,
  ExecStart,
  ExecEnd,
  ResultSent,
  ResultDelivered,
  ErrorSent,  // detail = ErrorClass; peer = recipient
  ErrorDelivered,
  DroppedExpired,
  UnpackFailed,
  Terminal,  // detail = HandleStatus
};

std::string_view to_string(TraceKind kind);

struct TraceEvent {
  double t = 0.0;
  TraceKind kind = TraceKind::Submitted;
  WorkflowId wf;
  std::uint32_t task = 0;
  NodeAddress node;
  NodeAddress peer;
  std::uint8_t detail = 0;
};

/// Append-only record of application-level events of one run.
class Telemetry {
 public:
  void record(const TraceEvent& e) { events_.push_back(e); }
  const std::vector<TraceEvent>& events() const { return events_; }

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace oppload
