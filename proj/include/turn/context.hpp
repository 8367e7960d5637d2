#pragma once

#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "turn/value.hpp"

namespace turn {

// Default working-tier capacity. Episodic capacity is twice this.
inline constexpr std::size_t kWorkingCapacity = 100;

// Three-tier context: system directives (P0), episodic overflow (P2) and the
// working set (P1). Renders flat as P0, P2, P1.
class StructuredContext {
 public:
  explicit StructuredContext(std::size_t working_capacity = kWorkingCapacity)
      : w_(working_capacity) {}

  void system(std::string directive);
  void append(std::string item);
  std::vector<std::string> to_flat_vec() const;

  const std::vector<std::string>& p0() const noexcept { return p0_; }
  const std::deque<std::string>& p1() const noexcept { return p1_; }
  const std::deque<std::string>& p2() const noexcept { return p2_; }
  std::size_t working_capacity() const noexcept { return w_; }
  std::size_t episodic_capacity() const noexcept { return 2 * w_; }
  std::size_t size() const noexcept { return p0_.size() + p1_.size() + p2_.size(); }

  // Rebuilds a context from serialized tiers (no eviction is applied).
  static StructuredContext restore(std::vector<std::string> p0, std::deque<std::string> p2,
                                   std::deque<std::string> p1, std::size_t working_capacity = kWorkingCapacity);

  bool operator==(const StructuredContext&) const = default;

 private:
  std::size_t w_;
  std::vector<std::string> p0_;
  std::deque<std::string> p1_;
  std::deque<std::string> p2_;
};

// Process-private key/value store behind remember/recall.
class AgentMemory {
 public:
  void remember(const std::string& key, Value v) { entries_[key] = std::move(v); }
  // Null when the key was never written.
  Value recall(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? Value() : it->second;
  }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::unordered_map<std::string, Value>& entries() const noexcept { return entries_; }
  void reserve(std::size_t n) { entries_.reserve(n); }

 private:
  std::unordered_map<std::string, Value> entries_;
};

}  // namespace turn
