#include "turn/stdlib.hpp"

#include "turn/compiler.hpp"
#include "turn/value.hpp"

namespace turn {

bool ModuleCache::known(std::string_view name) const {
  for (const auto& [n, _] : stdlib_sources())
    if (n == name) return true;
  return false;
}

std::shared_ptr<const Chunk> ModuleCache::load(std::string_view name) {
  std::lock_guard lock(mu_);
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  for (const auto& [n, src] : stdlib_sources()) {
    if (n != name) continue;
    CompileOptions opts;
    opts.module = std::string(name);
    opts.fetcher = [](const std::string& url) -> std::string {
      throw std::runtime_error("standard modules cannot fetch " + url);
    };
    auto chunk = std::make_shared<const Chunk>(compile_source(src, opts));
    ++compilations_;
    cache_.emplace(std::string(name), chunk);
    return chunk;
  }
  throw RuntimeFault("RuntimeError", "unknown module " + std::string(name));
}

}  // namespace turn
