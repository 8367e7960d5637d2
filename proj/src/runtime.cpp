#include "turn/runtime.hpp"

#include <algorithm>
#include <iostream>
#include <thread>

#include <spdlog/spdlog.h>

namespace turn {

namespace {

Value exit_signal(Pid from, const std::string& reason) {
  return Value(Map{{"type", Value("exit")}, {"from", Value(from)}, {"reason", Value(reason)}});
}

std::string exit_reason(const Process& p) {
  if (!p.fault) return "normal";
  return p.fault->kind() + ": " + p.fault->message();
}

}  // namespace

Runtime::Runtime(RuntimeOptions options)
    : opts_(std::move(options)),
      store_(opts_.store_dir.empty() ? FileStore::default_root() : opts_.store_dir) {
  if (!opts_.env) opts_.env = std::make_shared<ProcessEnvironment>();
  if (!opts_.http) opts_.http = std::make_shared<HttplibExecutor>();
  if (!opts_.echo) opts_.echo = [](const std::string& line) { std::cout << line << '\n'; };
  if (opts_.workers == 0) opts_.workers = 1;
}

Runtime::~Runtime() = default;

void Runtime::load(std::shared_ptr<const Chunk> main) {
  main_hash_ = chunk_hash(*main);
  main_ = std::move(main);
}

std::shared_ptr<const Chunk> Runtime::chunk_for(std::string_view module) {
  if (main_ && module == main_->module) return main_;
  return modules_.load(module);
}

void Runtime::echo(const std::string& line) {
  std::lock_guard lock(echo_mu_);
  opts_.echo(line);
}

Pid Runtime::adopt(std::unique_ptr<Process> p) {
  Pid pid = p->pid;
  std::lock_guard lock(mu_);
  if (!first_pid_) first_pid_ = pid.id;
  Process& ref = *p;
  procs_[pid.id] = std::move(p);
  enqueue_locked(ref);
  return pid;
}

Pid Runtime::start() {
  if (!main_) throw std::logic_error("Runtime::start before load");
  auto p = std::make_unique<Process>(Pid{next_pid_++}, opts_.working_capacity);
  const Function& fn = main_->functions.at(0);
  p->frames.push_back({main_, 0, 0, std::vector<Value>(fn.slot_count), Value(), 0});
  return adopt(std::move(p));
}

Pid Runtime::resume(const VmSnapshot& snap, Value injected) {
  if (!main_) throw std::logic_error("Runtime::resume before load");
  auto p = restore_process(snap, main_hash_, [this](std::string_view m) { return chunk_for(m); }, std::move(injected));
  std::uint64_t want = p->pid.id + 1;
  std::uint64_t cur = next_pid_.load();
  while (cur < want && !next_pid_.compare_exchange_weak(cur, want)) {
  }
  return adopt(std::move(p));
}

Pid Runtime::spawn(Process& parent, const Value& callee, std::vector<Value> args, bool linked,
                   std::optional<std::size_t> gather_index) {
  const Value& v = callee.unwrapped();
  if (!v.is(ValueKind::Turn)) throw type_error("cannot spawn " + std::string(kind_name(v.kind())));
  if (contains_identity(v))
    throw RuntimeFault("CapabilityError", "Identity handles cannot be captured by a spawned turn");
  for (const auto& a : args)
    if (contains_identity(a)) throw RuntimeFault("CapabilityError", "Identity handles cannot be passed to another process");

  Value closure = deep_copy(v);
  const Closure& c = closure.as_turn();
  auto chunk = chunk_for(c.module);
  const Function& fn = chunk->functions.at(c.function);
  if (args.size() != fn.arity)
    throw RuntimeFault("RuntimeError", "arity error: " + fn.name + " takes " + std::to_string(fn.arity) +
                                           " arguments, got " + std::to_string(args.size()));
  auto child = std::make_unique<Process>(Pid{next_pid_++}, opts_.working_capacity);
  Frame frame{chunk, c.function, 0, std::vector<Value>(fn.slot_count), closure, 0};
  for (std::size_t i = 0; i < args.size(); ++i) frame.slots[i] = deep_copy(args[i]);
  for (std::size_t i = 0; i < fn.capture_slots.size() && i < c.captures.size(); ++i)
    frame.slots[fn.capture_slots[i]] = c.captures[i];
  child->frames.push_back(std::move(frame));

  Pid pid = child->pid;
  std::lock_guard lock(mu_);
  if (linked) {
    child->links.insert(parent.pid.id);
    parent.links.insert(pid.id);
  }
  if (gather_index) child->gather_parent = std::make_pair(parent.pid.id, *gather_index);
  Process& ref = *child;
  procs_[pid.id] = std::move(child);
  enqueue_locked(ref);
  cv_.notify_one();
  return pid;
}

void Runtime::send(Pid to, Value v) {
  Value copy = deep_copy(v);
  std::lock_guard lock(mu_);
  auto it = procs_.find(to.id);
  if (it == procs_.end()) return;  // dead pid: silently dropped
  Process& target = *it->second;
  if (target.status == ProcessStatus::Exited) return;
  target.mailbox.push_back(std::move(copy));
  if (target.status == ProcessStatus::Receiving) {
    enqueue_locked(target);
    cv_.notify_one();
  }
}

std::optional<Value> Runtime::try_receive(Process& p) {
  std::lock_guard lock(mu_);
  if (p.mailbox.empty()) return std::nullopt;
  Value v = std::move(p.mailbox.front());
  p.mailbox.pop_front();
  return v;
}

void Runtime::enqueue_locked(Process& p) {
  p.status = ProcessStatus::Runnable;
  run_queue_.push_back(p.pid.id);
}

void Runtime::finish_gather_locked(Process& parent) {
  Gather g = std::move(*parent.gather);
  parent.gather.reset();
  for (auto& f : g.faults) {
    if (f) {
      parent.pending_fault = std::move(*f);
      enqueue_locked(parent);
      return;
    }
  }
  parent.pending_push = Value(List(std::move(g.results)));
  enqueue_locked(parent);
}

void Runtime::exit_locked(Process& p) {
  p.status = ProcessStatus::Exited;
  const bool first = first_pid_ && *first_pid_ == p.pid.id;
  if (first) {
    report_.result = p.result;
    report_.fault = p.fault;
    report_.fault_line = p.fault_line;
  } else if (p.fault && !p.gather_parent) {
    spdlog::warn("process {} exited: {}", p.pid.id, exit_reason(p));
  }
  const std::string reason = exit_reason(p);
  for (auto partner_id : p.links) {
    auto it = procs_.find(partner_id);
    if (it == procs_.end()) continue;
    Process& partner = *it->second;
    partner.links.erase(p.pid.id);
    partner.mailbox.push_back(exit_signal(p.pid, reason));
    if (partner.status == ProcessStatus::Receiving) enqueue_locked(partner);
  }
  p.links.clear();
  if (p.gather_parent) {
    auto it = procs_.find(p.gather_parent->first);
    if (it != procs_.end() && it->second->gather) {
      Process& parent = *it->second;
      Gather& g = *parent.gather;
      std::size_t i = p.gather_parent->second;
      if (p.fault)
        g.faults[i] = p.fault;
      else
        g.results[i] = p.result;
      if (--g.remaining == 0 && parent.status == ProcessStatus::Gathering) finish_gather_locked(parent);
    }
  }
  if (opts_.on_exit) opts_.on_exit(p);
  procs_.erase(p.pid.id);  // p is dangling after this
}

void Runtime::settle_locked(Process& p) {
  switch (p.status) {
    case ProcessStatus::Exited: exit_locked(p); return;
    case ProcessStatus::Receiving:
      if (!p.mailbox.empty()) enqueue_locked(p);
      return;
    case ProcessStatus::Sleeping: sleepers_.emplace(p.wake_at, p.pid.id); return;
    case ProcessStatus::Gathering:
      if (p.gather && p.gather->remaining == 0) finish_gather_locked(p);
      return;
    case ProcessStatus::Suspended: {
      try {
        std::string id = store_.persist(snapshot(p, main_hash_, opts_.source_path));
        report_.snapshots.push_back(id);
        if (first_pid_ && *first_pid_ == p.pid.id) report_.suspended = true;
        spdlog::debug("process {} suspended as {}", p.pid.id, id);
      } catch (const RuntimeFault& f) {
        p.fault = f;
        p.status = ProcessStatus::Exited;
        exit_locked(p);
        return;
      }
      if (p.gather_parent) {
        p.fault = RuntimeFault("RuntimeError", "a spawn_each turn suspended");
        p.status = ProcessStatus::Exited;
        exit_locked(p);
        return;
      }
      // Partners see a suspended process as gone without a signal.
      for (auto partner_id : p.links) {
        auto it = procs_.find(partner_id);
        if (it != procs_.end()) it->second->links.erase(p.pid.id);
      }
      if (opts_.on_exit) opts_.on_exit(p);
      procs_.erase(p.pid.id);
      return;
    }
    case ProcessStatus::Runnable:
    case ProcessStatus::Running: enqueue_locked(p); return;
  }
}

void Runtime::deadlock_locked() {
  std::vector<std::uint64_t> ids;
  for (const auto& [id, _] : procs_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) {
    auto it = procs_.find(id);
    if (it == procs_.end()) continue;
    Process& p = *it->second;
    p.links.clear();  // every partner is going down too
    p.gather_parent.reset();
    p.fault = RuntimeFault("DeadlockFault", "every process is blocked with nothing pending");
    exit_locked(p);
  }
}

void Runtime::worker_loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    while (!sleepers_.empty() && sleepers_.begin()->first <= now) {
      auto it = procs_.find(sleepers_.begin()->second);
      sleepers_.erase(sleepers_.begin());
      if (it != procs_.end() && it->second->status == ProcessStatus::Sleeping) enqueue_locked(*it->second);
    }
    if (!run_queue_.empty()) {
      std::uint64_t id = run_queue_.front();
      run_queue_.pop_front();
      auto it = procs_.find(id);
      if (it == procs_.end() || it->second->status != ProcessStatus::Runnable) continue;
      Process& p = *it->second;
      p.status = ProcessStatus::Running;
      ++running_;
      lock.unlock();
      run_slice(p, *this);
      lock.lock();
      --running_;
      settle_locked(p);
      cv_.notify_all();
      continue;
    }
    if (procs_.empty()) {
      cv_.notify_all();
      return;
    }
    if (running_ == 0 && sleepers_.empty()) {
      deadlock_locked();
      continue;
    }
    if (!sleepers_.empty())
      cv_.wait_until(lock, sleepers_.begin()->first);
    else
      cv_.wait(lock);
  }
}

RunReport Runtime::run() {
  if (opts_.workers <= 1) {
    worker_loop();
  } else {
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < opts_.workers; ++i) threads.emplace_back([this] { worker_loop(); });
    for (auto& t : threads) t.join();
  }
  std::cout.flush();
  std::lock_guard lock(mu_);
  return report_;
}

RunReport run_program(std::string_view source, RuntimeOptions options, const CompileOptions& compile) {
  auto chunk = std::make_shared<const Chunk>(compile_source(source, compile));
  Runtime rt(std::move(options));
  rt.load(chunk);
  rt.start();
  return rt.run();
}

}  // namespace turn
