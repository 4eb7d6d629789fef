#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oppload/bundle_store.hpp"
#include "oppload/errors.hpp"

namespace oppload::workflow {

inline constexpr std::string_view kResultPlaceholder = "##result##";
inline constexpr double kDefaultTtl = 1800.0;

struct AheadOfTime {
  NodeAddress worker;
  friend bool operator==(const AheadOfTime&, const AheadOfTime&) = default;
};
struct JustInTime {
  friend bool operator==(const JustInTime&, const JustInTime&) = default;
};
using WorkerSpec = std::variant<AheadOfTime, JustInTime>;

enum class Metric : std::uint8_t { Cpu, Memory, Disk, Energy, Distance };

inline constexpr Metric kAllMetrics[] = {Metric::Cpu, Metric::Memory, Metric::Disk, Metric::Energy,
                                         Metric::Distance};

std::string_view to_string(Metric m);
std::optional<Metric> metric_from_string(std::string_view name);

/// Required amount per metric. Absent metrics are not rated. The distance
/// entry is the normalisation radius in meters.
using Requirements = std::map<Metric, double>;

struct Task {
  WorkerSpec worker = JustInTime{};
  std::string service;
  std::vector<std::string> params;
  Requirements requirements;

  bool just_in_time() const { return std::holds_alternative<JustInTime>(worker); }
  bool uses_result() const;

  friend bool operator==(const Task&, const Task&) = default;
};

struct WorkflowDescription {
  WorkflowId id;
  NodeAddress client;
  std::vector<Task> tasks;
  std::size_t cursor = 0;  // next task to execute
  double ttl_seconds = kDefaultTtl;
  double created_at = 0.0;

  bool finished() const { return cursor >= tasks.size(); }
  const Task& current() const { return tasks.at(cursor); }
  bool last() const { return cursor + 1 == tasks.size(); }
  double deadline() const { return created_at + ttl_seconds; }
  bool expired(double now) const { return now > deadline(); }

  friend bool operator==(const WorkflowDescription&, const WorkflowDescription&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& cause);
  std::size_t line() const { return line_; }
  const std::string& cause() const { return cause_; }

 private:
  std::size_t line_;
  std::string cause_;
};

/// Parses the line-oriented description format:
///
///     # comment
///     ttl=<seconds>                      (optional, before the first task)
///     <worker|any> <service> <param>... [metric=value,...]
///
/// Throws ParseError on any violation; the returned description has cursor 0.
WorkflowDescription parse(std::string_view text);

/// Renders tasks and ttl back into the text format.
std::string format(const WorkflowDescription& description);

/// Replaces the placeholder in the task after the cursor with the result file
/// name. Returns whether a substitution happened; false at the chain end or
/// when the next task takes no result.
bool substitute_result(WorkflowDescription& description, std::string_view result_file);

/// Everything a worker needs for the current task, travelling as one bundle.
struct Archive {
  WorkflowDescription description;
  std::map<std::string, Blob> files;
  std::optional<std::string> error_log;
  std::optional<WorkerError> error;
  NodeAddress assigner;  // node that chose the current worker
  bool retried = false;  // current worker is a second JiT attempt

  friend bool operator==(const Archive& a, const Archive& b);
};

class UnpackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header plus the file contents, uncompressed. File blobs are shared with the
/// archive rather than copied.
Payload pack(const Archive& archive);

/// Bytes of pack() minus the file contents.
std::size_t framing_size(const Archive& archive);

Archive unpack(const Payload& bytes);
Archive unpack(std::span<const std::uint8_t> bytes);

}  // namespace oppload::workflow
