#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "turn/compiler.hpp"
#include "turn/driver.hpp"
#include "turn/durable.hpp"
#include "turn/http.hpp"
#include "turn/process.hpp"
#include "turn/stdlib.hpp"

namespace turn {

struct RuntimeOptions {
  unsigned workers = 1;  // 1 = deterministic FIFO scheduling on the calling thread
  std::shared_ptr<InferenceEngine> engine;
  std::shared_ptr<Environment> env;   // default: the real process environment
  std::shared_ptr<HttpExecutor> http;  // default: httplib
  std::function<void(const std::string&)> echo;  // default: stdout
  std::filesystem::path store_dir;               // default: FileStore::default_root()
  std::size_t working_capacity = kWorkingCapacity;
  int infer_attempts = 3;
  std::string source_path;
  // Observes every process just before it is discarded (exit or suspend).
  std::function<void(const Process&)> on_exit;
};

struct RunReport {
  Value result;                       // the first process's return value
  std::optional<RuntimeFault> fault;  // its uncaught fault, if any
  int fault_line = 0;
  bool suspended = false;             // it stopped at a suspend
  std::vector<std::string> snapshots;  // ids written by suspend, in order
};

// Owns the processes of one program run and schedules them cooperatively:
// a process runs until it blocks (receive, sleep, spawn_each, suspend) or
// exits.
class Runtime {
 public:
  explicit Runtime(RuntimeOptions options);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // Registers the program. Its chunk hash guards snapshot resume.
  void load(std::shared_ptr<const Chunk> main);
  // Spawns a process at the program's top level.
  Pid start();
  // Rebuilds a suspended process; `injected` becomes the suspend's value.
  Pid resume(const VmSnapshot& snap, Value injected = Value());
  // Runs until no process can make progress.
  RunReport run();

  const std::string& main_hash() const noexcept { return main_hash_; }
  ModuleCache& modules() noexcept { return modules_; }
  const RuntimeOptions& options() const noexcept { return opts_; }
  FileStore& store() noexcept { return store_; }

  // ---- services for the interpreter ----
  std::shared_ptr<const Chunk> chunk_for(std::string_view module);
  Pid spawn(Process& parent, const Value& closure, std::vector<Value> args, bool linked,
            std::optional<std::size_t> gather_index = std::nullopt);
  void send(Pid to, Value v);
  std::optional<Value> try_receive(Process& p);
  void echo(const std::string& line);

 private:
  void worker_loop();
  void settle_locked(Process& p);
  void exit_locked(Process& p);
  void finish_gather_locked(Process& parent);
  void enqueue_locked(Process& p);
  void deadlock_locked();
  Pid adopt(std::unique_ptr<Process> p);

  RuntimeOptions opts_;
  ModuleCache modules_;
  FileStore store_;
  std::shared_ptr<const Chunk> main_;
  std::string main_hash_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Process>> procs_;
  std::deque<std::uint64_t> run_queue_;
  std::multimap<std::chrono::steady_clock::time_point, std::uint64_t> sleepers_;
  std::size_t running_ = 0;
  std::atomic<std::uint64_t> next_pid_{1};
  std::optional<std::uint64_t> first_pid_;
  RunReport report_;

  std::mutex echo_mu_;
};

// Compiles `source` as the main module and runs it to completion.
RunReport run_program(std::string_view source, RuntimeOptions options, const CompileOptions& compile = {});

// Executes `p` until it blocks or exits; sets p.status accordingly.
void run_slice(Process& p, Runtime& rt);

// Confidence of a value: the Uncertain score, else 1.
double confidence_of(const Value& v);

// Binary operator semantics including score propagation (product for
// arithmetic and comparison, min for and, max for or).
Value apply_binary(Op op, const Value& lhs, const Value& rhs);

}  // namespace turn
