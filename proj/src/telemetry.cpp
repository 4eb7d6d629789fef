#include "oppload/telemetry.hpp"

namespace oppload {

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Submitted: return "submitted";
    case TraceKind::Selected: return "selected";
    case TraceKind::ArchiveSent: return "archive_sent";
    case TraceKind::ArchiveDelivered: return "archive_delivered";
    case TraceKind::ExecStart: return "exec_start";
    case TraceKind::ExecEnd: return "exec_end";
    case TraceKind::ResultSent: return "result_sent";
    case TraceKind::ResultDelivered: return "result_delivered";
    case TraceKind::ErrorSent: return "error_sent";
    case TraceKind::ErrorDelivered: return "error_delivered";
    case TraceKind::DroppedExpired: return "dropped_expired";
    case TraceKind::UnpackFailed: return "unpack_failed";
    case TraceKind::Terminal: return "terminal";
  }
  return "?";
}

}  // namespace oppload
