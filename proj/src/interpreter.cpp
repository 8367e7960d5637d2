#include <algorithm>
#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "turn/runtime.hpp"
#include "turn/traps.hpp"

namespace turn {

namespace {

constexpr std::size_t kMaxFrames = 200000;

double score(const Value& v) { return v.is(ValueKind::Uncertain) ? v.as_uncertain().p : 1.0; }

std::string kind_of(const Value& v) { return std::string(kind_name(v.kind())); }

std::string as_text(const Value& v) {
  const Value& u = v.unwrapped();
  return u.is(ValueKind::Str) ? u.as_str() : render(u);
}

double num(const Value& v, const char* what) {
  if (!v.is(ValueKind::Num)) throw type_error(std::string(what) + " expects Num, got " + kind_of(v));
  return v.as_num();
}

Value concat(const Value& a, const Value& b) {
  if (a.is(ValueKind::Identity) || b.is(ValueKind::Identity))
    throw RuntimeFault("CapabilityError", "Identity cannot be coerced to Str");
  return Value(as_text(a) + as_text(b));
}

Value inner_binary(Op op, const Value& a, const Value& b) {
  switch (op) {
    case Op::Add:
      if (a.is(ValueKind::Num) && b.is(ValueKind::Num)) return Value(a.as_num() + b.as_num());
      if (a.is(ValueKind::Str) || b.is(ValueKind::Str)) return concat(a, b);
      if (a.is(ValueKind::List) && b.is(ValueKind::List)) {
        List out = a.as_list();
        out.insert(out.end(), b.as_list().begin(), b.as_list().end());
        return Value(std::move(out));
      }
      throw type_error("cannot add " + kind_of(a) + " and " + kind_of(b));
    case Op::Sub: return Value(num(a, "-") - num(b, "-"));
    case Op::Mul: return Value(num(a, "*") * num(b, "*"));
    case Op::Div: {
      double d = num(b, "/");
      double n = num(a, "/");
      if (d == 0) throw RuntimeFault("RuntimeError", "division by zero");
      return Value(n / d);
    }
    case Op::CmpLt:
    case Op::CmpLe:
    case Op::CmpGt:
    case Op::CmpGe: {
      int c;
      if (a.is(ValueKind::Num) && b.is(ValueKind::Num)) {
        double x = a.as_num(), y = b.as_num();
        if (std::isnan(x) || std::isnan(y)) return Value(false);
        c = x < y ? -1 : (x > y ? 1 : 0);
      } else if (a.is(ValueKind::Str) && b.is(ValueKind::Str)) {
        c = a.as_str().compare(b.as_str());
      } else {
        throw type_error("cannot compare " + kind_of(a) + " and " + kind_of(b));
      }
      switch (op) {
        case Op::CmpLt: return Value(c < 0);
        case Op::CmpLe: return Value(c <= 0);
        case Op::CmpGt: return Value(c > 0);
        default: return Value(c >= 0);
      }
    }
    case Op::CmpEq: return Value(a == b);
    case Op::CmpNe: return Value(!(a == b));
    case Op::And:
    case Op::Or:
      if (!a.is(ValueKind::Bool) || !b.is(ValueKind::Bool))
        throw type_error(std::string(op == Op::And ? "and" : "or") + " expects Bool operands, got " + kind_of(a) +
                         " and " + kind_of(b));
      return Value(op == Op::And ? (a.as_bool() && b.as_bool()) : (a.as_bool() || b.as_bool()));
    default: throw RuntimeFault("RuntimeError", "not a binary operator");
  }
}

bool truthy(const Value& v) {
  const Value& u = v.unwrapped();
  if (!u.is(ValueKind::Bool)) throw type_error("condition must be Bool, got " + kind_of(u));
  return u.as_bool();
}

Value get_field(const Value& obj, const std::string& name) {
  const Value& u = obj.unwrapped();
  if (u.is(ValueKind::Struct)) {
    const Value* f = u.as_struct().find(name);
    if (!f) throw RuntimeFault("RuntimeError", "unknown field " + name + " on " + u.as_struct().type_name);
    return *f;
  }
  if (u.is(ValueKind::Map)) {
    auto it = u.as_map().find(name);
    return it == u.as_map().end() ? Value() : it->second;
  }
  throw type_error("cannot read field " + name + " of " + kind_of(u));
}

Value index_value(const Value& obj, const Value& key) {
  const Value& o = obj.unwrapped();
  const Value& k = key.unwrapped();
  auto position = [&](std::size_t size) -> std::size_t {
    double d = num(k, "index");
    if (d < 0 || d != std::floor(d) || d >= static_cast<double>(size))
      throw RuntimeFault("RuntimeError", "index " + format_number(d) + " out of range for length " + std::to_string(size));
    return static_cast<std::size_t>(d);
  };
  switch (o.kind()) {
    case ValueKind::List: return o.as_list()[position(o.as_list().size())];
    case ValueKind::Vec: return Value(o.as_vec()[position(o.as_vec().size())]);
    case ValueKind::Str: return Value(std::string(1, o.as_str()[position(o.as_str().size())]));
    case ValueKind::Map: {
      if (!k.is(ValueKind::Str)) throw type_error("map keys are Str, got " + kind_of(k));
      auto it = o.as_map().find(k.as_str());
      return it == o.as_map().end() ? Value() : it->second;
    }
    case ValueKind::Struct: {
      if (!k.is(ValueKind::Str)) throw type_error("struct fields are named by Str, got " + kind_of(k));
      return get_field(o, k.as_str());
    }
    default: throw type_error("cannot index " + kind_of(o));
  }
}

// Host tools that need no capability.
std::optional<Value> builtin_tool(const std::string& name, std::vector<Value>& args) {
  auto want = [&](std::size_t n) {
    if (args.size() != n)
      throw RuntimeFault("RuntimeError", "arity error: " + name + " takes " + std::to_string(n) + " arguments, got " +
                                             std::to_string(args.size()));
  };
  if (name == "len") {
    want(1);
    const Value& v = args[0].unwrapped();
    switch (v.kind()) {
      case ValueKind::Str: return Value(static_cast<double>(v.as_str().size()));
      case ValueKind::List: return Value(static_cast<double>(v.as_list().size()));
      case ValueKind::Map: return Value(static_cast<double>(v.as_map().size()));
      case ValueKind::Vec: return Value(static_cast<double>(v.as_vec().size()));
      case ValueKind::Struct: return Value(static_cast<double>(v.as_struct().fields.size()));
      default: throw type_error("len of " + kind_of(v));
    }
  }
  if (name == "str") {
    want(1);
    if (contains_identity(args[0])) throw RuntimeFault("CapabilityError", "Identity cannot be coerced to Str");
    return Value(as_text(args[0]));
  }
  if (name == "num") {
    want(1);
    const Value& v = args[0].unwrapped();
    if (v.is(ValueKind::Num)) return v;
    if (!v.is(ValueKind::Str)) throw type_error("num of " + kind_of(v));
    const std::string& s = v.as_str();
    double d = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw RuntimeFault("RuntimeError", "not a number: " + nlohmann::json(s).dump());
    return Value(d);
  }
  if (name == "type_of") {
    want(1);
    return Value(kind_of(args[0].unwrapped()));
  }
  if (name == "identity_class") {
    want(1);
    if (!args[0].is(ValueKind::Identity)) throw RuntimeFault("CapabilityError", "not an Identity handle");
    return Value(args[0].as_identity().capability_class);
  }
  if (name == "push") {
    want(2);
    const Value& l = args[0].unwrapped();
    if (!l.is(ValueKind::List)) throw type_error("push onto " + kind_of(l));
    List out = l.as_list();
    out.push_back(args[1]);
    return Value(std::move(out));
  }
  if (name == "keys") {
    want(1);
    const Value& v = args[0].unwrapped();
    List out;
    if (v.is(ValueKind::Map)) {
      for (const auto& [k, _] : v.as_map()) out.emplace_back(k);
    } else if (v.is(ValueKind::Struct)) {
      for (const auto& [k, _] : v.as_struct().fields) out.emplace_back(k);
    } else {
      throw type_error("keys of " + kind_of(v));
    }
    return Value(std::move(out));
  }
  if (name == "vec") {
    want(1);
    const Value& v = args[0].unwrapped();
    if (!v.is(ValueKind::List)) throw type_error("vec of " + kind_of(v));
    NumVec out;
    for (const auto& x : v.as_list()) out.push_back(num(x.unwrapped(), "vec"));
    return Value(std::move(out));
  }
  if (name == "range") {
    want(1);
    double n = num(args[0].unwrapped(), "range");
    List out;
    for (double i = 0; i < n; ++i) out.emplace_back(i);
    return Value(std::move(out));
  }
  return std::nullopt;
}

class Interp {
 public:
  Interp(Process& p, Runtime& rt) : p_(p), rt_(rt) {}

  void run() {
    if (p_.pending_fault) {
      RuntimeFault f = std::move(*p_.pending_fault);
      p_.pending_fault.reset();
      if (!unwind(f)) return;
    }
    if (p_.pending_push) {
      p_.stack.push_back(std::move(*p_.pending_push));
      p_.pending_push.reset();
    }
    for (;;) {
      try {
        if (!step()) return;
      } catch (const RuntimeFault& f) {
        if (!unwind(f)) return;
      } catch (const std::exception& e) {
        if (!unwind(RuntimeFault("RuntimeError", e.what()))) return;
      }
    }
  }

 private:
  Value pop() {
    if (p_.stack.empty()) throw RuntimeFault("RuntimeError", "internal: operand stack underflow");
    Value v = std::move(p_.stack.back());
    p_.stack.pop_back();
    return v;
  }
  std::vector<Value> pop_n(std::size_t n) {
    if (p_.stack.size() < n) throw RuntimeFault("RuntimeError", "internal: operand stack underflow");
    std::vector<Value> out(std::make_move_iterator(p_.stack.end() - static_cast<std::ptrdiff_t>(n)),
                           std::make_move_iterator(p_.stack.end()));
    p_.stack.resize(p_.stack.size() - n);
    return out;
  }
  void push(Value v) { p_.stack.push_back(std::move(v)); }

  bool unwind(const RuntimeFault& f) {
    if (p_.handlers.empty()) {
      if (!p_.frames.empty()) {
        const Frame& fr = p_.frames.back();
        const auto& code = fr.chunk->functions[fr.function].code;
        if (fr.ip > 0 && fr.ip <= code.size()) p_.fault_line = code[fr.ip - 1].line;
      }
      p_.fault = f;
      p_.status = ProcessStatus::Exited;
      return false;
    }
    TryHandler h = p_.handlers.back();
    p_.handlers.pop_back();
    p_.frames.resize(h.frame_depth);
    p_.stack.resize(h.stack_height);
    p_.stack.push_back(f.payload());
    p_.frames.back().ip = h.target;
    return true;
  }

  void exit_with(Value result) {
    p_.result = std::move(result);
    p_.status = ProcessStatus::Exited;
  }

  void enter(const Value& callee, std::vector<Value> args) {
    const Value& v = callee.unwrapped();
    if (!v.is(ValueKind::Turn)) throw type_error("cannot call " + kind_of(v));
    const Closure& c = v.as_turn();
    auto chunk = rt_.chunk_for(c.module);
    if (c.function >= chunk->functions.size()) throw RuntimeFault("RuntimeError", "internal: bad function index");
    const Function& fn = chunk->functions[c.function];
    if (args.size() != fn.arity)
      throw RuntimeFault("RuntimeError", "arity error: " + fn.name + " takes " + std::to_string(fn.arity) +
                                             " arguments, got " + std::to_string(args.size()));
    if (p_.frames.size() >= kMaxFrames) throw RuntimeFault("RuntimeError", "stack overflow");
    Frame frame{std::move(chunk), c.function, 0, std::vector<Value>(fn.slot_count), v, p_.stack.size()};
    for (std::size_t i = 0; i < args.size(); ++i) frame.slots[i] = std::move(args[i]);
    for (std::size_t i = 0; i < fn.capture_slots.size() && i < c.captures.size(); ++i)
      frame.slots[fn.capture_slots[i]] = c.captures[i];
    p_.frames.push_back(std::move(frame));
  }

  // Returns false when the process blocked or exited.
  bool call_tool(const std::string& name, std::vector<Value> args) {
    if (name.rfind("std/", 0) == 0) {
      auto dot = name.find('.');
      std::string module = name.substr(0, dot);
      std::string fn = dot == std::string::npos ? "" : name.substr(dot + 1);
      auto chunk = rt_.modules().load(module);
      auto it = chunk->exports.find(fn);
      if (it == chunk->exports.end()) throw RuntimeFault("RuntimeError", "module " + module + " has no function " + fn);
      enter(Value(Closure{module, it->second, {}}), std::move(args));
      return true;
    }
    if (is_trap(name)) {
      TrapHost host{*rt_.options().env, *rt_.options().http};
      TrapResult r = kernel_trap(name, args, host);
      push(std::move(r.value));
      if (r.sleep) {
        p_.wake_at = std::chrono::steady_clock::now() + *r.sleep;
        p_.status = ProcessStatus::Sleeping;
        return false;
      }
      return true;
    }
    if (auto v = builtin_tool(name, args)) {
      push(std::move(*v));
      return true;
    }
    throw RuntimeFault("RuntimeError", "unknown tool " + name);
  }

  void infer(const Chunk& chunk, std::uint32_t si) {
    Value prompt = pop();
    const StructDef& def = chunk.registry.all().at(si);
    const JsonSchema& schema = chunk.schema_json.at(si);
    auto engine = rt_.options().engine;
    if (!engine) throw RuntimeFault("DriverError", "no inference driver configured");
    InferenceRequest req{as_text(prompt), p_.context.to_flat_vec(), schema, std::nullopt};
    const int k = std::max(1, rt_.options().infer_attempts);
    std::vector<std::string> failures;
    for (int attempt = 1; attempt <= k; ++attempt) {
      std::string problem;
      try {
        InferenceResult r = engine->infer_once(req);
        if (r.confidence && !(*r.confidence >= 0.0 && *r.confidence <= 1.0)) {
          problem = "confidence " + format_number(*r.confidence) + " is outside [0, 1]";
        } else if (auto ok = validate(r.json, schema); !ok) {
          problem = ok.message;
        } else {
          push(Value::uncertain(bind_struct(r.json, def, chunk.registry), r.confidence.value_or(0.5)));
          return;
        }
      } catch (const DriverError& e) {
        problem = e.message();
      }
      spdlog::debug("infer {} attempt {} rejected: {}", def.name, attempt, problem);
      failures.push_back(problem);
      std::string note;
      for (const auto& f : failures) note += (note.empty() ? "" : "\n") + f;
      req.retry_note = note;
    }
    List attempts(failures.begin(), failures.end());
    std::string message = "infer " + def.name + " failed after " + std::to_string(k) + " attempts: " + failures.back();
    throw RuntimeFault("InferError", message,
                       Value(Map{{"error", Value("InferError")}, {"message", Value(message)}, {"attempts", Value(std::move(attempts))}}));
  }

  bool step() {
    Frame& fr = p_.frames.back();
    const Chunk& chunk = *fr.chunk;
    const Function& fn = chunk.functions[fr.function];
    if (fr.ip >= fn.code.size()) throw RuntimeFault("RuntimeError", "internal: fell off the end of " + fn.name);
    const Instruction in = fn.code[fr.ip++];
    switch (in.op) {
      case Op::Const: push(chunk.constants.at(in.a)); break;
      case Op::Pop: pop(); break;
      case Op::LoadLocal: push(fr.slots.at(in.a)); break;
      case Op::StoreLocal: fr.slots.at(in.a) = pop(); break;
      case Op::LoadFn: push(Value(Closure{chunk.module, in.a, {}})); break;
      case Op::LoadSelf: push(fr.closure); break;
      case Op::MakeClosure: {
        auto caps = pop_n(in.b);
        push(Value(Closure{chunk.module, in.a, std::move(caps)}));
        break;
      }
      case Op::MakeList: push(Value(List(pop_n(in.a)))); break;
      case Op::MakeMap: {
        auto xs = pop_n(static_cast<std::size_t>(in.a) * 2);
        Map m;
        for (std::size_t i = 0; i < xs.size(); i += 2) m[as_text(xs[i])] = std::move(xs[i + 1]);
        push(Value(std::move(m)));
        break;
      }
      case Op::MakeStruct: {
        const StructDef& def = chunk.registry.all().at(in.a);
        auto xs = pop_n(static_cast<std::size_t>(in.b) * 2);
        StructInstance s{def.name, {}};
        for (const auto& f : def.fields) {
          for (std::size_t i = 0; i < xs.size(); i += 2) {
            if (xs[i].as_str() != f.name) continue;
            if (!conforms(xs[i + 1], f.type))
              throw type_error("field " + def.name + "." + f.name + " expects " + f.type.name() + ", got " +
                               kind_of(xs[i + 1].unwrapped()));
            s.fields.emplace_back(f.name, xs[i + 1]);
          }
        }
        push(Value(std::move(s)));
        break;
      }
      case Op::GetField: push(get_field(pop(), chunk.names.at(in.a))); break;
      case Op::Index: {
        Value k = pop();
        Value o = pop();
        push(index_value(o, k));
        break;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::CmpLt:
      case Op::CmpLe:
      case Op::CmpGt:
      case Op::CmpGe:
      case Op::CmpEq:
      case Op::CmpNe:
      case Op::And:
      case Op::Or: {
        Value b = pop();
        Value a = pop();
        push(apply_binary(in.op, a, b));
        break;
      }
      case Op::Neg: {
        Value a = pop();
        push(Value::uncertain(Value(-num(a.unwrapped(), "-")), score(a)));
        break;
      }
      case Op::Not: {
        Value a = pop();
        const Value& u = a.unwrapped();
        if (!u.is(ValueKind::Bool)) throw type_error("not expects Bool, got " + kind_of(u));
        push(Value::uncertain(Value(!u.as_bool()), score(a)));
        break;
      }
      case Op::Jump: fr.ip = in.a; break;
      case Op::JumpIfFalse:
        if (!truthy(pop())) fr.ip = in.a;
        break;
      case Op::Call: {
        auto args = pop_n(in.a);
        Value callee = pop();
        enter(callee, std::move(args));
        break;
      }
      case Op::CallTool: {
        auto args = pop_n(in.b);
        return call_tool(chunk.names.at(in.a), std::move(args));
      }
      case Op::Echo: rt_.echo(render(pop())); break;
      case Op::Throw: throw RuntimeFault::thrown(pop());
      case Op::TryPush: p_.handlers.push_back({p_.frames.size(), p_.stack.size(), in.a}); break;
      case Op::TryPop:
        if (!p_.handlers.empty()) p_.handlers.pop_back();
        break;
      case Op::Return: {
        Value result = pop();
        std::size_t depth = p_.frames.size();
        std::size_t base = fr.stack_base;
        while (!p_.handlers.empty() && p_.handlers.back().frame_depth >= depth) p_.handlers.pop_back();
        p_.frames.pop_back();
        p_.stack.resize(std::min(base, p_.stack.size()));
        if (p_.frames.empty()) {
          exit_with(std::move(result));
          return false;
        }
        push(std::move(result));
        break;
      }
      case Op::Halt:
        p_.frames.back().ip--;  // stays parked on Halt
        exit_with(Value());
        return false;
      case Op::Infer: infer(chunk, in.a); break;
      case Op::Confidence: push(Value(confidence_of(pop()))); break;
      case Op::Spawn:
      case Op::SpawnLink: {
        Value body = pop();
        push(Value(rt_.spawn(p_, body, {}, in.op == Op::SpawnLink)));
        break;
      }
      case Op::SpawnEach: {
        Value body = pop();
        Value list = pop();
        const Value& l = list.unwrapped();
        if (!l.is(ValueKind::List)) throw type_error("spawn_each expects a List, got " + kind_of(l));
        const List& items = l.as_list();
        if (items.empty()) {
          push(Value(List{}));
          break;
        }
        p_.gather = Gather{items.size(), std::vector<Value>(items.size()),
                           std::vector<std::optional<RuntimeFault>>(items.size())};
        p_.status = ProcessStatus::Gathering;
        for (std::size_t i = 0; i < items.size(); ++i) {
          try {
            rt_.spawn(p_, body, {items[i]}, false, i);
          } catch (const RuntimeFault& f) {
            // Children already started still report back; this slot fails now.
            p_.gather->faults[i] = f;
            std::size_t missing = items.size() - i;
            p_.gather->remaining -= missing;
            for (std::size_t j = i + 1; j < items.size(); ++j) p_.gather->faults[j] = f;
            break;
          }
        }
        return false;
      }
      case Op::Send: {
        Value v = pop();
        Value to = pop();
        const Value& pid = to.unwrapped();
        if (!pid.is(ValueKind::Pid)) throw type_error("send expects a Pid, got " + kind_of(pid));
        if (contains_identity(v))
          throw RuntimeFault("CapabilityError", "Identity handles cannot be sent between processes");
        rt_.send(pid.as_pid(), std::move(v));
        break;
      }
      case Op::Receive:
        if (auto m = rt_.try_receive(p_)) {
          push(std::move(*m));
          break;
        }
        fr.ip--;  // retried when a message arrives
        p_.status = ProcessStatus::Receiving;
        return false;
      case Op::SelfPid: push(Value(p_.pid)); break;
      case Op::Remember: {
        Value v = pop();
        Value k = pop();
        const Value& key = k.unwrapped();
        if (!key.is(ValueKind::Str)) throw type_error("remember key must be Str, got " + kind_of(key));
        p_.memory.remember(key.as_str(), std::move(v));
        push(Value());
        break;
      }
      case Op::Recall: {
        Value k = pop();
        const Value& key = k.unwrapped();
        if (!key.is(ValueKind::Str)) throw type_error("recall key must be Str, got " + kind_of(key));
        push(p_.memory.recall(key.as_str()));
        break;
      }
      case Op::GrantIdentity: push(Value(Identity{chunk.names.at(in.b), chunk.names.at(in.a)})); break;
      case Op::Suspend: p_.status = ProcessStatus::Suspended; return false;
      case Op::ContextAppend:
        p_.context.append(as_text(pop()));
        push(Value());
        break;
      case Op::ContextSystem:
        p_.context.system(as_text(pop()));
        push(Value());
        break;
    }
    return true;
  }

  Process& p_;
  Runtime& rt_;
};

}  // namespace

double confidence_of(const Value& v) { return score(v); }

Value apply_binary(Op op, const Value& lhs, const Value& rhs) {
  Value r = inner_binary(op, lhs.unwrapped(), rhs.unwrapped());
  double p1 = score(lhs), p2 = score(rhs);
  double p;
  if (op == Op::And)
    p = std::min(p1, p2);
  else if (op == Op::Or)
    p = std::max(p1, p2);
  else
    p = p1 * p2;
  return Value::uncertain(std::move(r), p);
}

void run_slice(Process& p, Runtime& rt) { Interp(p, rt).run(); }

}  // namespace turn
