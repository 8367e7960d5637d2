#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "turn/process.hpp"

namespace turn {

struct FrameImage {
  std::string module;
  std::uint32_t function = 0;
  std::uint32_t ip = 0;
  std::vector<Value> slots;
  Value closure;
  std::size_t stack_base = 0;
  bool operator==(const FrameImage&) const = default;
};

// A process image at a suspend boundary.
struct VmSnapshot {
  std::string chunk_hash;
  std::string source_path;
  std::uint64_t pid = 0;
  std::uint32_t ip = 0;  // top frame
  std::vector<FrameImage> frames;
  std::vector<Value> stack;
  std::vector<TryHandler> handlers;
  std::vector<std::pair<std::string, Value>> memory;  // sorted by key
  std::vector<std::string> p0;
  std::deque<std::string> p2;
  std::deque<std::string> p1;
  std::size_t working_capacity = kWorkingCapacity;
  std::vector<Value> mailbox;
  std::string status = "suspended";
  bool operator==(const VmSnapshot&) const = default;
};

// Pure capture; the process is not modified.
VmSnapshot snapshot(const Process& process, std::string chunk_hash, std::string source_path = {});

// Canonical JSON text: fixed key order, shortest round-trip numbers, tagged
// values. Identity handles are stored by provider and class only.
std::string serialize_snapshot(const VmSnapshot& snap);
VmSnapshot deserialize_snapshot(std::string_view text);

nlohmann::json encode_value(const Value& v);
Value decode_value(const nlohmann::json& j);

// Rebuilds a runnable process. `resolve` maps module names to chunks; the
// main module's hash must equal the snapshot's (ChunkMismatchError
// otherwise). `injected` is pushed as the value the suspend produced.
std::unique_ptr<Process> restore_process(const VmSnapshot& snap, const std::string& current_hash,
                                         const std::function<std::shared_ptr<const Chunk>(std::string_view)>& resolve,
                                         Value injected);

// One JSON file per snapshot, "{id}.json", written atomically.
class FileStore {
 public:
  explicit FileStore(std::filesystem::path root = default_root());

  // TURN_STORE_DIR if set, else ".turn_store".
  static std::filesystem::path default_root();

  std::string persist(const VmSnapshot& snap);
  VmSnapshot load(const std::string& id) const;
  std::filesystem::path path_for(const std::string& id) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

}  // namespace turn
