#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace oppload {

enum class ErrorClass : std::uint8_t {
  TaskExecution,    // the service itself failed
  WorkerSelection,  // no capable worker for the next task
  WorkerCalling,    // the addressed worker cannot run the task it was sent
};

std::string_view to_string(ErrorClass cls);

struct WorkerError {
  ErrorClass cls = ErrorClass::TaskExecution;
  std::string message;
  std::uint32_t task_index = 0;
  bool retried = false;

  friend bool operator==(const WorkerError&, const WorkerError&) = default;
};

}  // namespace oppload
