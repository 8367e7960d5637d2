#include "turn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "turn/driver.hpp"
#include "turn/durable.hpp"
#include "turn/runtime.hpp"

namespace turn {

namespace {

using Clock = std::chrono::steady_clock;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Transcript {
  std::vector<std::string> lines;
  std::optional<RuntimeFault> fault;
};

// Runs a program against a scripted mock; echo lines are collected.
Transcript run_scripted(const std::string& source, std::vector<MockTransport::Step> steps,
                        std::shared_ptr<Environment> env = std::make_shared<MapEnvironment>(),
                        std::function<void(const Process&)> on_exit = {}) {
  Transcript t;
  RuntimeOptions opts;
  opts.env = env;
  opts.http = std::make_shared<CannedExecutor>();
  opts.engine = std::make_shared<InferenceEngine>(std::make_shared<MockDriver>(), MockTransport::scripted(std::move(steps)), env);
  opts.echo = [&t](const std::string& line) { t.lines.push_back(line); };
  opts.on_exit = std::move(on_exit);
  RunReport r = run_program(source, std::move(opts));
  t.fault = r.fault;
  return t;
}

bool mentions(const Value& v, const std::string& needle) { return encode_value(v).dump().find(needle) != std::string::npos; }

void suite_credentials(std::vector<ExperimentLine>& out) {
  const std::string sentinel = "sk_live_sentinel_7f3a";
  auto env = std::make_shared<MapEnvironment>();
  env->set("TURN_IDENTITY_STRIPE_TOKEN", sentinel);

  std::vector<Value> heap;
  auto t = run_scripted(R"(
let key = grant identity::oauth("stripe")
let other = grant identity::oauth("stripe")
echo key
echo confidence key
)", {}, env, [&heap](const Process& p) {
    for (const auto& f : p.frames) heap.insert(heap.end(), f.slots.begin(), f.slots.end());
    heap.insert(heap.end(), p.stack.begin(), p.stack.end());
  });

  bool echo_ok = !t.fault && !t.lines.empty() && t.lines[0] == "<identity stripe>";
  out.push_back({"E1-A", echo_ok, "echo of an oauth grant prints \"<identity stripe>\" and nothing secret", {}});

  bool heap_ok = heap.size() >= 2;
  for (const auto& v : heap) {
    if (mentions(v, sentinel)) heap_ok = false;
  }
  heap_ok = heap_ok && heap[0].is(ValueKind::Identity) && heap[0].as_identity().provider == "stripe" &&
            heap[0].as_identity().capability_class == "oauth";
  out.push_back({"E1-B", heap_ok, "bound value is Identity{stripe, oauth}; the token is absent from every slot", {}});

  Value wrapped = Value::uncertain(heap_ok ? heap[0] : Value(Identity{"stripe", "oauth"}), 0.5);
  bool certain = wrapped.is(ValueKind::Identity) && t.lines.size() > 1 && t.lines[1] == "1";
  out.push_back({"E1-C", certain, "an Identity never carries a confidence below 1", {}});

  bool independent = heap_ok && heap[1].is(ValueKind::Identity) && heap[1] == heap[0];
  // Each grant is a fresh value; nothing links the two handles at runtime.
  Value a = heap_ok ? heap[0] : Value();
  Value b = deep_copy(a);
  independent = independent && a == b;
  out.push_back({"E1-D", independent, "two grants of the same provider are separate handle values", {}});
}

void suite_confidence(std::vector<ExperimentLine>& out) {
  double c1 = confidence_of(Value(42.0));
  out.push_back({"E2-1", c1 == 1.0, "confidence(42) = " + fixed(c1, 1), {}});

  double c2 = confidence_of(Value::uncertain(Value(42.0), 0.73));
  out.push_back({"E2-2", c2 == 0.73, "confidence(Uncertain(42, 0.73)) = " + fixed(c2, 2), {}});

  double c3 = confidence_of(apply_binary(Op::Add, Value::uncertain(Value(10.0), 0.8), Value::uncertain(Value(5.0), 0.5)));
  out.push_back({"E2-3", std::abs(c3 - 0.4) < 1e-12, "Uncertain(10,0.8) + Uncertain(5,0.5) scores " + fixed(c3, 2) + " (product)", {}});

  double c4 = confidence_of(apply_binary(Op::And, Value::uncertain(Value(true), 0.9), Value::uncertain(Value(true), 0.5)));
  out.push_back({"E2-4", c4 == 0.5, "x and y with x~0.9, y~0.5 scores " + fixed(c4, 2) + " (minimum)", {}});

  const std::string program = R"(
struct Verdict { label: Str }
let v = infer Verdict { "classify the filing" }
if confidence v < 0.7 { echo "fallback" } else { echo "main" }
)";
  auto low = run_scripted(program, {{false, {{"label", "buy"}}, 0.45}});
  bool low_ok = !low.fault && low.lines == std::vector<std::string>{"fallback"};
  out.push_back({"E2-5", low_ok, "p=0.45 under the 0.70 threshold takes the fallback branch", {}});
  auto high = run_scripted(program, {{false, {{"label", "buy"}}, 0.92}});
  bool high_ok = !high.fault && high.lines == std::vector<std::string>{"main"};
  out.push_back({"E2-6", high_ok, "p=0.92 at or above 0.70 takes the main branch", {}});
}

void suite_context(std::vector<ExperimentLine>& out) {
  StructuredContext ctx;
  ctx.system("You are a careful analyst.");
  for (int i = 1; i <= 50; ++i) ctx.append("item " + std::to_string(i));
  auto flat = ctx.to_flat_vec();
  out.push_back({"E3-1", flat.front() == "You are a careful analyst.", "system prompt sits at index 0 of the flat context", {}});
  out.push_back({"E3-2", flat.back() == "item 50", "newest append is the last flat element", {}});

  StructuredContext full;
  full.system("sys");
  for (int i = 1; i <= 101; ++i) full.append("item " + std::to_string(i));
  bool demoted = full.p1().size() == 100 && full.p2().size() == 1 && full.p2().front() == "item 1";
  out.push_back({"E3-3", demoted, "101st append moves the oldest working item to episodic",
                 {"P1 size=" + std::to_string(full.p1().size()) + ", P2 size=" + std::to_string(full.p2().size())}});

  auto f = full.to_flat_vec();
  bool order = f.size() == 102 && f[0] == "sys" && f[1] == "item 1" && f[2] == "item 2" && f[101] == "item 101";
  out.push_back({"E3-4", order, "flat order is P0(0), P2(1), P1(2..101)", {}});

  std::vector<std::size_t> child_sizes;
  auto t = run_scripted(R"(
context.system("parent directive")
context.append("parent note")
let child = spawn turn() { return 1 }
)", {}, std::make_shared<MapEnvironment>(), [&child_sizes](const Process& p) {
    if (p.pid.id != 1) child_sizes.push_back(p.context.size());
  });
  bool isolated = !t.fault && child_sizes == std::vector<std::size_t>{0};
  out.push_back({"E3-5", isolated, "a spawned process starts with an empty context", {}});
}

void suite_memory(std::vector<ExperimentLine>& out) {
  const std::size_t ks[] = {1000, 10000, 100000};
  std::vector<MemoryTiming> times;
  for (std::size_t i = 0; i < 3; ++i) {
    times.push_back(time_memory(ks[i]));
    std::string k = std::to_string(ks[i]);
    std::string line = "K=" + k + " entries" + std::string(7 - k.size(), ' ') + "| write " + fixed(times[i].write_ns, 0) +
                       " ns/op | read " + fixed(times[i].read_ns, 0) + " ns/op";
    bool pass = times[i].write_ns > 0 && times[i].read_ns > 0;
    if (i == 2) {
      double wr = times[2].write_ns / times[0].write_ns;
      double rr = times[2].read_ns / times[0].read_ns;
      pass = pass && wr <= 3.0 && rr <= 3.0;
      line += "  (x" + fixed(std::max(wr, rr), 2) + " vs K=1000)";
    }
    out.push_back({"E4-" + std::to_string(i + 1), pass, line, {}});
  }

  auto t = run_scripted(R"(
let parent = self
spawn turn() {
  remember("shared", "from a")
  remember("only_a", 1)
  send parent, {who: "a", shared: recall("shared")}
}
spawn turn() {
  remember("shared", "from b")
  send parent, {who: "b", shared: recall("shared"), foreign: recall("only_a")}
}
let m1 = receive
let m2 = receive
echo m1.who + ":" + m1.shared
echo m2.who + ":" + m2.shared + ":" + call("str", m2.foreign)
)", {});
  bool isolated = !t.fault && t.lines == std::vector<std::string>{"a:from a", "b:from b:null"};
  out.push_back({"E4-4", isolated, "same key in two processes holds two values; foreign keys recall null", {}});

  Process empty(Pid{1});
  Process filled(Pid{1});
  const std::size_t n = 1000;
  for (std::size_t i = 0; i < n; ++i) filled.memory.remember("key_" + std::to_string(i), Value("value_" + std::to_string(i)));
  double per = static_cast<double>(serialize_snapshot(snapshot(filled, "h")).size() - serialize_snapshot(snapshot(empty, "h")).size()) /
               static_cast<double>(n);
  out.push_back({"E4-5", per > 0, "serialized footprint: " + fixed(per, 1) + " bytes/entry", {}});
}

Process memory_process(std::size_t entries) {
  Process p(Pid{7});
  p.context.system("You are the durable agent.");
  p.context.append("working note");
  for (std::size_t i = 0; i < entries; ++i) p.memory.remember("key_" + std::to_string(i), Value("value_" + std::to_string(i)));
  p.stack = {Value(1.0), Value("two"), Value(List{Value(3.0)})};
  return p;
}

void suite_durable(std::vector<ExperimentLine>& out, const std::filesystem::path& scratch) {
  FileStore store(scratch);
  const std::size_t sizes[] = {10, 500, 5000};
  for (std::size_t i = 0; i < 3; ++i) {
    Process p = memory_process(sizes[i]);
    auto start = Clock::now();
    VmSnapshot snap = snapshot(p, "h");
    std::string id = store.persist(snap);
    VmSnapshot back = store.load(id);
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
    std::size_t bytes = serialize_snapshot(snap).size();
    std::string k = std::to_string(sizes[i]);
    std::string line = "mem=" + k + " entries" + std::string(5 - k.size(), ' ') + "| state size=" + std::to_string(bytes) +
                       " B (" + fixed(bytes / 1024.0, 1) + " KB) | round-trip=" + std::to_string(us) + " us";
    out.push_back({"E5-" + std::to_string(i + 1), back == snap, line, {}});
  }

  Process p = memory_process(50);
  VmSnapshot snap = snapshot(p, "h");
  VmSnapshot back = deserialize_snapshot(serialize_snapshot(snap));
  bool fidelity = back == snap && back.pid == 7 && back.memory.size() == 50 && back.stack.size() == 3 &&
                  !back.p0.empty() && back.p0[0] == "You are the durable agent.";
  out.push_back({"E5-4", fidelity, "pid, ip, stack, 50 memory entries and the system prompt survive a round trip", {}});
}

}  // namespace

std::string format_line(const ExperimentLine& line) {
  std::string s = line.id + (line.pass ? " PASS: " : " FAIL: ") + line.detail;
  for (const auto& n : line.notes) s += "\n          " + n;
  return s;
}

MemoryTiming time_memory(std::size_t k, unsigned seed) {
  constexpr std::size_t kBatch = 250;
  // A bytecode loop over [slot 0, slot 1) that builds "key_" + str(i) and
  // remembers or recalls it, as a Turn program would. Reads take i from the
  // shuffled index list in slot 2. Timed per batch; the median is reported.
  auto chunk = std::make_shared<Chunk>();
  chunk->constants = {Value("key_"), Value(1.0)};
  chunk->names = {"str"};
  auto loop = [](bool read) {
    std::vector<Instruction> c;
    c.push_back({Op::LoadLocal, 0, 0, 0});
    c.push_back({Op::LoadLocal, 1, 0, 0});
    c.push_back({Op::CmpLt, 0, 0, 0});
    std::size_t exit_jump = c.size();
    c.push_back({Op::JumpIfFalse, 0, 0, 0});
    c.push_back({Op::Const, 0, 0, 0});
    if (read) {
      c.push_back({Op::LoadLocal, 2, 0, 0});
      c.push_back({Op::LoadLocal, 0, 0, 0});
      c.push_back({Op::Index, 0, 0, 0});
    } else {
      c.push_back({Op::LoadLocal, 0, 0, 0});
    }
    c.push_back({Op::CallTool, 0, 1, 0});
    c.push_back({Op::Add, 0, 0, 0});
    if (read) {
      c.push_back({Op::Recall, 0, 0, 0});
    } else {
      c.push_back({Op::LoadLocal, 0, 0, 0});
      c.push_back({Op::Remember, 0, 0, 0});
    }
    c.push_back({Op::Pop, 0, 0, 0});
    c.push_back({Op::LoadLocal, 0, 0, 0});
    c.push_back({Op::Const, 1, 0, 0});
    c.push_back({Op::Add, 0, 0, 0});
    c.push_back({Op::StoreLocal, 0, 0, 0});
    c.push_back({Op::Jump, 0, 0, 0});
    c[exit_jump].a = static_cast<std::uint32_t>(c.size());
    c.push_back({Op::Halt, 0, 0, 0});
    return c;
  };
  chunk->functions.push_back({"write", 0, 3, {}, loop(false)});
  chunk->functions.push_back({"read", 0, 3, {}, loop(true)});

  List order;
  {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    if (seed) std::shuffle(idx.begin(), idx.end(), std::mt19937(seed));
    for (auto i : idx) order.emplace_back(static_cast<double>(i));
  }
  Value order_value(std::move(order));

  RuntimeOptions opts;
  opts.env = std::make_shared<MapEnvironment>();
  opts.http = std::make_shared<CannedExecutor>();
  Runtime rt(std::move(opts));
  rt.load(chunk);
  Process p(Pid{1});

  auto time_batches = [&](std::uint32_t fn) {
    std::vector<double> per_op;
    for (std::size_t lo = 0; lo < k; lo += kBatch) {
      std::size_t hi = std::min(k, lo + kBatch);
      p.frames.clear();
      p.stack.clear();
      p.frames.push_back({chunk, fn, 0, {Value(static_cast<double>(lo)), Value(static_cast<double>(hi)), order_value}, Value(), 0});
      p.status = ProcessStatus::Running;
      auto t0 = Clock::now();
      run_slice(p, rt);
      auto dt = std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
      if (p.fault) throw *p.fault;
      per_op.push_back(dt / static_cast<double>(hi - lo));
    }
    std::nth_element(per_op.begin(), per_op.begin() + static_cast<std::ptrdiff_t>(per_op.size() / 2), per_op.end());
    return per_op[per_op.size() / 2];
  };
  MemoryTiming t;
  t.write_ns = time_batches(0);
  t.read_ns = time_batches(1);
  if (p.memory.size() != k) throw std::logic_error("memory benchmark wrote " + std::to_string(p.memory.size()) + " entries");
  return t;
}

std::vector<ExperimentLine> run_experiments(const std::filesystem::path& scratch,
                                            const std::function<void(const ExperimentLine&)>& on_line) {
  std::vector<ExperimentLine> out;
  auto run = [&](auto&& suite) {
    std::size_t before = out.size();
    try {
      suite();
    } catch (const std::exception& e) {
      out.push_back({"E?", false, std::string("suite aborted: ") + e.what(), {}});
    }
    if (on_line)
      for (std::size_t i = before; i < out.size(); ++i) on_line(out[i]);
  };
  run([&] { suite_credentials(out); });
  run([&] { suite_confidence(out); });
  run([&] { suite_context(out); });
  run([&] { suite_memory(out); });
  run([&] { suite_durable(out, scratch); });
  return out;
}

}  // namespace turn
