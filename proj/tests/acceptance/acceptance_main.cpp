// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures, so ctest reports any regression.
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"
#include "turn/compiler.hpp"
#include "turn/experiments.hpp"

namespace {

using namespace turn;
using Clock = std::chrono::steady_clock;
using Lines = std::vector<std::string>;

// Collects failed checks for one criterion.
struct Checks {
  std::vector<std::string> failed;
  std::vector<std::string> info;
  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
};

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

int failures = 0;

void criterion(int n, const std::string& title, double budget_s, const std::function<void(Checks&)>& body) {
  Checks c;
  auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failed.push_back(std::string("threw: ") + e.what());
  }
  double s = std::chrono::duration<double>(Clock::now() - t0).count();
  c.expect(s < budget_s, "took " + fixed(s, 2) + " s, budget " + fixed(budget_s, 0) + " s");
  bool pass = c.failed.empty();
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " " << n << " " << title << " (" << fixed(s, 2) << " s)";
  for (const auto& i : c.info) std::cout << " [" << i << "]";
  std::cout << "\n";
  for (const auto& f : c.failed) std::cout << "    - " << f << "\n";
  std::cout.flush();
}

bool mentions(const Value& v, const std::string& needle) { return encode_value(v).dump().find(needle) != std::string::npos; }

// ---- 1 ----
void confidence_algebra(Checks& c) {
  c.expect(confidence_of(Value(42.0)) == 1.0, "confidence(42) == 1.0");
  c.expect(confidence_of(Value::uncertain(Value(42.0), 0.73)) == 0.73, "confidence(Uncertain(42, 0.73)) == 0.73");
  double sum = confidence_of(apply_binary(Op::Add, Value::uncertain(Value(10.0), 0.8), Value::uncertain(Value(5.0), 0.5)));
  c.expect(std::abs(sum - 0.40) < 1e-12, "sum scores 0.40, got " + std::to_string(sum));
  double both =
      confidence_of(apply_binary(Op::And, Value::uncertain(Value(true), 0.9), Value::uncertain(Value(true), 0.5)));
  c.expect(both == 0.50, "and scores exactly 0.50");
  const char* src = R"(
struct Verdict { label: Str }
let v = infer Verdict { "classify" }
if confidence v < 0.7 {
  echo "fallback"
} else {
  echo "main"
}
)";
  testing::Setup low, high;
  low.script = {testing::reply({{"label", "x"}}, 0.45)};
  high.script = {testing::reply({{"label", "x"}}, 0.92)};
  c.expect(testing::echo_lines(src, low) == Lines{"fallback"}, "p=0.45 takes the fallback");
  c.expect(testing::echo_lines(src, high) == Lines{"main"}, "p=0.92 takes the main path");
}

// ---- 2 ----
void structured_context(Checks& c) {
  StructuredContext ctx;
  ctx.system("system prompt");
  for (int i = 1; i <= 101; ++i) ctx.append("item " + std::to_string(i));
  auto flat = ctx.to_flat_vec();
  c.expect(flat.front() == "system prompt", "flat[0] is the system prompt");
  c.expect(flat.back() == "item 101", "flat[last] is the newest append");
  c.expect(ctx.p1().size() == 100 && ctx.p2().size() == 1, "|P1|=100 and |P2|=1 after 101 appends");
  c.expect(!ctx.p2().empty() && ctx.p2().front() == "item 1", "item 1 was demoted");
  c.expect(flat.size() == 102 && flat[1] == "item 1" && flat[2] == "item 2" && flat[101] == "item 101",
           "order is P0 (0), P2 (1), P1 (2..101)");

  std::vector<std::size_t> child_sizes;
  testing::Setup s;
  s.on_exit = [&](const Process& p) {
    if (p.pid.id != 1) child_sizes.push_back(p.context.to_flat_vec().size());
  };
  auto o = testing::run(R"(
context.system("parent directive")
context.append("parent note")
spawn_link turn() { return 1 }
echo receive.reason
)", s);
  c.expect(o.ok() && o.out == Lines{"normal"}, "child program ran");
  c.expect(child_sizes == std::vector<std::size_t>{0}, "a spawned process starts with an empty flat context");
}

// ---- 3 ----
void memory_isolation(Checks& c) {
  auto out = testing::echo_lines(R"(
let me = self
spawn turn() {
  remember("shared", "from a")
  remember("only_a", 1)
  send me, "a done"
}
spawn turn() {
  remember("shared", "from b")
  send me, {shared: recall("shared"), foreign: recall("only_a")}
}
echo receive
let m = receive
echo m.shared
echo m.foreign
echo recall("shared")
)");
  c.expect(out == Lines{"a done", "from b", "null", "null"},
           "same-key writes stay private and a foreign key recalls null");

  time_memory(1000);  // warm up allocator and caches
  MemoryTiming small = time_memory(1000);
  MemoryTiming large = time_memory(100000);
  double wr = large.write_ns / small.write_ns, rr = large.read_ns / small.read_ns;
  c.info.push_back("write " + fixed(small.write_ns, 0) + "->" + fixed(large.write_ns, 0) + " ns (x" + fixed(wr, 2) +
                   "), read " + fixed(small.read_ns, 0) + "->" + fixed(large.read_ns, 0) + " ns (x" + fixed(rr, 2) + ")");
  c.expect(wr <= 3.0, "write latency ratio " + fixed(wr, 2) + " exceeds 3");
  c.expect(rr <= 3.0, "read latency ratio " + fixed(rr, 2) + " exceeds 3");

  Process empty(Pid{1}), filled(Pid{1});
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) filled.memory.remember("key_" + std::to_string(i), Value("value_" + std::to_string(i)));
  double per = static_cast<double>(serialize_snapshot(snapshot(filled, "h")).size() -
                                   serialize_snapshot(snapshot(empty, "h")).size()) /
               static_cast<double>(n);
  c.info.push_back("footprint " + fixed(per, 1) + " B/entry");
}

// ---- 4 ----
Process durable_process(std::size_t entries) {
  Process p(Pid{7});
  p.context.system("You are the durable agent.");
  p.context.append("working note");
  for (std::size_t i = 0; i < entries; ++i) p.memory.remember("key_" + std::to_string(i), Value("value_" + std::to_string(i)));
  p.stack = {Value(1.0), Value("two"), Value(List{Value(3.0)})};
  return p;
}

void durable_execution(Checks& c) {
  // fidelity through a real restore
  auto chunk = std::make_shared<const Chunk>(compile_source("let a = 1\nsuspend\necho a\n"));
  std::string hash = chunk_hash(*chunk);
  Process p = durable_process(50);
  p.frames.push_back({chunk, 0, 2, {Value(1.0)}, Value(), 0});
  VmSnapshot snap = snapshot(p, hash);
  std::string text = serialize_snapshot(snap);
  VmSnapshot back = deserialize_snapshot(text);
  c.expect(back == snap, "snapshot equals itself after a text round trip");
  auto restored = restore_process(back, hash, [&](std::string_view) { return chunk; }, Value());
  c.expect(restored->pid.id == 7, "pid preserved");
  c.expect(!restored->frames.empty() && restored->frames.back().ip == 2, "pc preserved");
  bool stack_ok = restored->stack.size() >= 3 && restored->stack[0] == Value(1.0) && restored->stack[1] == Value("two") &&
                  restored->stack[2] == Value(List{Value(3.0)});
  c.expect(stack_ok, "operand stack preserved");
  bool mem_ok = restored->memory.size() == 50;
  for (std::size_t i = 0; i < 50 && mem_ok; ++i)
    mem_ok = restored->memory.recall("key_" + std::to_string(i)) == Value("value_" + std::to_string(i));
  c.expect(mem_ok, "all 50 memory entries preserved");
  c.expect(restored->context.p0() == std::vector<std::string>{"You are the durable agent."}, "system prompt preserved");
  c.expect(serialize_snapshot(deserialize_snapshot(text)) == text, "encoding is canonical");

  // size is affine in entry count
  const double xs[] = {10, 500, 5000};
  double ys[3];
  for (int i = 0; i < 3; ++i) ys[i] = static_cast<double>(serialize_snapshot(snapshot(durable_process(static_cast<std::size_t>(xs[i])), "h")).size());
  double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (ys[0] + ys[1] + ys[2]) / 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  double r2 = sxy * sxy / (sxx * syy);
  double kb = ys[2] / 1024.0;
  c.info.push_back("sizes " + fixed(ys[0], 0) + "/" + fixed(ys[1], 0) + "/" + fixed(ys[2], 0) + " B, R^2=" + fixed(r2, 6) +
                   ", 5000 entries=" + fixed(kb, 1) + " KB");
  c.expect(r2 > 0.99, "affine fit R^2 " + fixed(r2, 6));
  c.expect(kb >= 203.4 * 0.5 && kb <= 203.4 * 1.5, "5000-entry snapshot " + fixed(kb, 1) + " KB outside 101.7..305.1");

  // run-suspend-resume equals the straight run
  auto read = [](const std::string& name) { return testing::read_file(std::string(TURN_PROGRAMS_DIR) + "/" + name); };
  std::string src = read("checkpoint.tn");
  std::string straight_src = src;
  for (auto at = straight_src.find("suspend"); at != std::string::npos; at = straight_src.find("suspend", at)) {
    // only the statement form; a word inside a comment or string stays
    bool stmt = (at == 0 || straight_src[at - 1] == '\n' || straight_src[at - 1] == ' ') &&
                (at + 7 == straight_src.size() || straight_src[at + 7] == '\n');
    if (stmt)
      straight_src.replace(at, 7, "null");
    else
      at += 7;
  }
  testing::Setup gen;
  gen.generator = true;
  auto straight = testing::run(straight_src, gen);
  c.expect(straight.ok() && !straight.report.suspended, "straight run completes");
  auto first = testing::run(src, gen);
  c.expect(first.report.suspended && first.report.snapshots.size() == 1, "first leg suspends once");
  if (first.report.snapshots.size() == 1) {
    testing::Setup again = gen;
    again.store = first.store;
    auto second = testing::resume(src, first.report.snapshots[0], again);
    Lines joined = first.out;
    joined.insert(joined.end(), second.out.begin(), second.out.end());
    c.expect(second.ok(), "resumed leg completes");
    c.expect(joined == straight.out, "suspend + resume transcript equals the straight run");
  }
}

// ---- 5 ----
void credential_opacity(Checks& c) {
  const std::string sentinel = "sk_live_sentinel_9c1e";
  testing::Setup s;
  s.env = {{"TURN_IDENTITY_STRIPE_TOKEN", sentinel}};
  auto http = std::make_shared<CannedExecutor>();
  http->set_default({200, R"({"ok":true})"});
  s.http = http;
  std::vector<Value> reachable;
  s.on_exit = [&](const Process& p) {
    for (const auto& f : p.frames) reachable.insert(reachable.end(), f.slots.begin(), f.slots.end());
    reachable.insert(reachable.end(), p.stack.begin(), p.stack.end());
    reachable.insert(reachable.end(), p.mailbox.begin(), p.mailbox.end());
    for (const auto& [k, v] : p.memory.entries()) reachable.push_back(v);
    reachable.push_back(p.result);
  };
  auto o = testing::run(R"(
let key = grant identity::oauth("stripe")
let other = grant identity::oauth("stripe")
echo key
remember("k", key)
let r = call("std/net.get", key, "https://api.example/charges")
context.append("charges: " + r.body)
let failed = "no"
try {
  call("std/json.stringify", {nested: [key]})
} catch (e) {
  failed = e.error
}
echo failed
let n = 0
try {
  echo "token=" + key
} catch (e) {
  n = 1
}
echo n
suspend
echo "resumed"
)", s);
  c.expect(o.ok() && o.report.suspended, "program ran to its suspend");
  c.expect(!o.out.empty() && o.out[0] == "<identity stripe>", "echo prints exactly <identity stripe>");
  c.expect(o.out.size() >= 2 && o.out[1] == "SerializationError", "stringify of a value holding an Identity faults");
  c.expect(o.out.size() >= 3 && o.out[2] == "1", "string coercion of a handle faults");
  bool clean = !reachable.empty();
  for (const auto& v : reachable) clean = clean && !mentions(v, sentinel);
  c.expect(clean, "sentinel absent from every reachable value");
  for (const auto& line : o.out) c.expect(line.find(sentinel) == std::string::npos, "sentinel absent from transcript");
  bool files_clean = !o.report.snapshots.empty();
  for (const auto& id : o.report.snapshots) {
    std::string text = testing::read_file(FileStore(o.store).path_for(id));
    files_clean = files_clean && !text.empty() && text.find(sentinel) == std::string::npos;
  }
  c.expect(files_clean, "sentinel absent from the snapshot file");
  auto reqs = http->requests();
  c.expect(reqs.size() == 1 && reqs[0].headers.at(0).second == "Bearer " + sentinel,
           "the host, and only the host, attached the credential");

  // independence: two grants are distinct handle objects
  std::vector<Value> handles;
  for (const auto& v : reachable)
    if (v.is(ValueKind::Identity)) handles.push_back(v);
  bool distinct = false;
  for (std::size_t i = 0; i < handles.size() && !distinct; ++i)
    for (std::size_t j = i + 1; j < handles.size(); ++j)
      if (std::get<std::shared_ptr<const Identity>>(handles[i].storage()) !=
          std::get<std::shared_ptr<const Identity>>(handles[j].storage()))
        distinct = true;
  c.expect(distinct, "two grants yield independent handles");
}

// ---- 6 ----
void cognitive_type_safety(Checks& c) {
  std::mt19937_64 rng(606);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  static const char* types[] = {"Num", "Str", "Bool", "List", "Map"};
  auto value_of = [&](const std::string& t, bool right) -> nlohmann::json {
    std::string u = t;
    while (!right && u == t) u = types[pick(5)];
    if (u == "Num") return pick(1000) / 4.0;
    if (u == "Str") return "s" + std::to_string(pick(9));
    if (u == "Bool") return pick(2) == 1;
    if (u == "List") return nlohmann::json::array({1, "a"});
    return nlohmann::json{{"k", 1}};
  };
  int typed_ok = 0, success_cases = 0, exhausted_ok = 0, exhausted_cases = 0;
  for (int i = 0; i < 200; ++i) {
    int n = 1 + pick(5);
    std::vector<std::pair<std::string, std::string>> fields;
    std::string src = "struct T { ";
    for (int f = 0; f < n; ++f) {
      fields.emplace_back("f" + std::to_string(f), types[pick(5)]);
      src += (f ? ", " : "") + fields.back().first + ": " + fields.back().second;
    }
    src += " }\ntry {\n  let v = infer T { \"go\" }\n";
    for (auto& [name, _] : fields) src += "  echo call(\"type_of\", v." + name + ")\n";
    src += "} catch (e) {\n  echo \"caught \" + e.error\n}\n";

    testing::Setup s;
    bool all_bad = i % 4 == 0;
    int bad = all_bad ? 3 : pick(3);
    for (int b = 0; b < bad; ++b) {
      if (pick(2)) {
        s.script.push_back(testing::malformed());
      } else {
        nlohmann::json r = nlohmann::json::object();
        for (auto& [name, t] : fields) r[name] = value_of(t, true);
        r[fields[static_cast<std::size_t>(pick(n))].first] = nullptr;  // wrong type
        s.script.push_back(testing::reply(r, 0.5));
      }
    }
    if (!all_bad) {
      nlohmann::json good = nlohmann::json::object();
      for (auto& [name, t] : fields) good[name] = value_of(t, true);
      s.script.push_back(testing::reply(good, 0.8));
    }
    auto o = testing::run(src, s);
    if (all_bad) {
      ++exhausted_cases;
      if (o.ok() && o.out == Lines{"caught InferError"} && o.mock->calls() == 3) ++exhausted_ok;
    } else {
      ++success_cases;
      Lines want;
      for (auto& f : fields) want.push_back(f.second);
      if (o.ok() && o.out == want && o.mock->calls() == static_cast<std::size_t>(bad + 1)) ++typed_ok;
    }
  }
  c.info.push_back(std::to_string(typed_ok) + "/" + std::to_string(success_cases) + " typed, " +
                   std::to_string(exhausted_ok) + "/" + std::to_string(exhausted_cases) + " exhausted at k=3");
  c.expect(typed_ok == success_cases, "every completed infer binds declared field types");
  c.expect(exhausted_ok == exhausted_cases, "every all-malformed script costs 3 calls and a catchable InferError");

  testing::Setup mmv;
  mmv.script = {testing::malformed(), testing::malformed(), testing::reply({{"score", 7}}, 0.9)};
  auto o = testing::run("struct S { score: Num }\nlet s = infer S { \"x\" }\necho s.score\n", mmv);
  c.expect(o.ok() && o.out == Lines{"7"} && o.mock->calls() == 3, "malformed, malformed, valid succeeds on call 3");
}

// ---- 7 ----
void pipeline_ordering(Checks& c) {
  testing::Setup s;
  s.fetcher = make_fetcher(TURN_FIXTURES_DIR);
  s.script = {testing::reply({{"status", "up"}, {"latency", 3}, {"hops", 2}, {"ok", true}, {"trace", nlohmann::json::array()},
                              {"origin", nlohmann::json::object()}},
                             0.9)};
  auto o = testing::run(R"(
let api = use schema::openapi("file://ping_openapi.json")
let p = infer GetPingResponse { "guess" }
echo p.status + " " + call("str", p.hops)
)", s);
  c.expect(o.ok() && o.out == Lines{"up 2"}, "infer on a struct synthesized from a file:// OpenAPI fixture");
  try {
    compile_source("let g = use schema::graphql(\"file://x.graphql\")\n");
    c.expect(false, "graphql compiled");
  } catch (const CompileError& e) {
    c.expect(e.kind() == "UnsupportedProtocol" && e.message().find("graphql") != std::string::npos,
             "graphql yields the unsupported-adapter compile error");
  }
}

// ---- 8 ----
std::string cli_output(const std::string& args, int& code) {
  std::string cmd = std::string(TURN_CLI) + " " + args + " 2>&1";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    code = -1;
    return out;
  }
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  int st = pclose(p);
  code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return out;
}

void actor_semantics(Checks& c) {
  auto crash = testing::echo_lines(R"(
spawn_link turn() { echo 1 / 0 }
spawn_link turn() { throw {error: "Boom", message: "second"} }
let a = receive
let b = receive
echo a.type + " " + b.type
send self, "marker"
echo receive
)");
  c.expect(crash == Lines{"exit exit", "marker"}, "each linked crash delivers exactly one exit message");

  auto each = testing::echo_lines(R"(
turn double(x) { return x * 2 }
turn seq(xs, i, acc) {
  if i == call("len", xs) { return acc }
  return seq(xs, i + 1, call("push", acc, double(xs[i])))
}
let par = spawn_each([1, 2, 3], turn(x) { return double(x) })
echo par
echo par == seq([1, 2, 3], 0, [])
)");
  c.expect(each == Lines{"[2, 4, 6]", "true"}, "spawn_each([1,2,3], double) = [2,4,6] and matches the sequential map");

  auto fifo = testing::echo_lines(R"(
let me = self
turn blast(to, i, n) {
  if i == n { return null }
  send to, i
  return blast(to, i + 1, n)
}
spawn turn() { blast(me, 0, 1000) }
turn drain(i, n, ok) {
  if i == n { return ok }
  return drain(i + 1, n, ok and receive == i)
}
echo drain(0, 1000, true)
)");
  c.expect(fifo == Lines{"true"}, "1000 messages arrive in send order");

  std::string first;
  bool same = true;
  for (int i = 0; i < 5; ++i) {
    int code = 0;
    std::string out = cli_output("run --driver mock --seed 42 --workers 1 " + std::string(TURN_PROGRAMS_DIR) + "/committee.tn", code);
    if (code != 0) same = false;
    if (i == 0)
      first = out;
    else if (out != first)
      same = false;
  }
  c.expect(same && !first.empty(), "committee transcript is byte-identical across 5 runs");
}

}  // namespace

int main() {
  criterion(1, "confidence algebra", 1, confidence_algebra);
  criterion(2, "structured context", 1, structured_context);
  criterion(3, "memory isolation and scale", 30, memory_isolation);
  criterion(4, "durable execution", 10, durable_execution);
  criterion(5, "credential opacity", 1, credential_opacity);
  criterion(6, "cognitive type safety", 10, cognitive_type_safety);
  criterion(7, "pipeline ordering", 1, pipeline_ordering);
  criterion(8, "actor semantics", 5, actor_semantics);
  std::cout << (8 - failures) << "/8 criteria passed\n";
  return failures;
}
