#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "turn/http.hpp"
#include "turn/value.hpp"

namespace turn {

struct TrapHost {
  Environment& env;
  HttpExecutor& http;
};

struct TrapResult {
  Value value;
  // Set by __sys_sleep: the caller parks the process for this long.
  std::optional<std::chrono::milliseconds> sleep;
};

bool is_trap(std::string_view name);

// "stripe" -> "TURN_IDENTITY_STRIPE_TOKEN"
std::string identity_env_var(const std::string& provider);

// Executes a __sys_* primitive. Faults are RuntimeFaults (CapabilityError,
// IoError, SerializationError, RuntimeError).
TrapResult kernel_trap(std::string_view name, const std::vector<Value>& args, TrapHost& host);

}  // namespace turn
