#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "turn/bytecode.hpp"
#include "turn/context.hpp"
#include "turn/value.hpp"

namespace turn {

struct Frame {
  std::shared_ptr<const Chunk> chunk;
  std::uint32_t function = 0;
  std::uint32_t ip = 0;
  std::vector<Value> slots;
  Value closure;  // the running turn value; Null for a top level
  std::size_t stack_base = 0;
};

struct TryHandler {
  std::size_t frame_depth = 0;  // frames.size() when pushed
  std::size_t stack_height = 0;
  std::uint32_t target = 0;
  bool operator==(const TryHandler&) const = default;
};

enum class ProcessStatus { Runnable, Running, Receiving, Sleeping, Gathering, Suspended, Exited };

std::string_view status_name(ProcessStatus s);

// Pending spawn_each results, indexed like the input list.
struct Gather {
  std::size_t remaining = 0;
  std::vector<Value> results;
  std::vector<std::optional<RuntimeFault>> faults;
};

// One agent process: frames and operand stack (E, pc), context (C),
// memory (M) and mailbox (B). Nothing here is shared with another process.
struct Process {
  Pid pid;
  std::vector<Frame> frames;
  std::vector<Value> stack;
  std::vector<TryHandler> handlers;
  StructuredContext context;
  AgentMemory memory;
  std::deque<Value> mailbox;
  std::set<std::uint64_t> links;
  ProcessStatus status = ProcessStatus::Runnable;

  // Scheduler bookkeeping.
  std::optional<Gather> gather;
  std::optional<std::pair<std::uint64_t, std::size_t>> gather_parent;
  std::chrono::steady_clock::time_point wake_at;
  std::optional<Value> pending_push;
  std::optional<RuntimeFault> pending_fault;

  // Set on exit.
  Value result;
  std::optional<RuntimeFault> fault;
  int fault_line = 0;  // source line of the faulting instruction

  explicit Process(Pid id, std::size_t working_capacity = kWorkingCapacity) : pid(id), context(working_capacity) {}
};

}  // namespace turn
