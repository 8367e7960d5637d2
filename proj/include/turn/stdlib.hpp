#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "turn/bytecode.hpp"

namespace turn {

// (module name, Turn source) for every embedded standard module.
const std::vector<std::pair<std::string_view, std::string_view>>& stdlib_sources();

// Compiles standard modules on first use and keeps them for the lifetime of
// the cache. Safe for concurrent first use; each module compiles once.
class ModuleCache {
 public:
  // Throws RuntimeFault("RuntimeError") for names outside the standard set.
  std::shared_ptr<const Chunk> load(std::string_view name);
  bool known(std::string_view name) const;
  std::size_t compilations() const noexcept { return compilations_.load(); }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Chunk>, std::less<>> cache_;
  std::atomic<std::size_t> compilations_{0};
};

}  // namespace turn
