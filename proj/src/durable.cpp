#include "turn/durable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "turn/bytecode.hpp"

namespace turn {

using nlohmann::json;

std::string_view status_name(ProcessStatus s) {
  switch (s) {
    case ProcessStatus::Runnable: return "runnable";
    case ProcessStatus::Running: return "running";
    case ProcessStatus::Receiving: return "receiving";
    case ProcessStatus::Sleeping: return "sleeping";
    case ProcessStatus::Gathering: return "gathering";
    case ProcessStatus::Suspended: return "suspended";
    case ProcessStatus::Exited: return "exited";
  }
  return "?";
}

namespace {

// JSON has no NaN or infinities; those travel as strings.
json encode_number(double n) {
  if (std::isnan(n)) return "NaN";
  if (std::isinf(n)) return n > 0 ? "Infinity" : "-Infinity";
  return n;
}

}  // namespace

json encode_value(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return {{"t", "null"}};
    case ValueKind::Num: return {{"t", "num"}, {"v", encode_number(v.as_num())}};
    case ValueKind::Str: return {{"t", "str"}, {"v", v.as_str()}};
    case ValueKind::Bool: return {{"t", "bool"}, {"v", v.as_bool()}};
    case ValueKind::List: {
      json a = json::array();
      for (const auto& item : v.as_list()) a.push_back(encode_value(item));
      return {{"t", "list"}, {"v", std::move(a)}};
    }
    case ValueKind::Map: {
      json o = json::object();
      for (const auto& [k, item] : v.as_map()) o[k] = encode_value(item);
      return {{"t", "map"}, {"v", std::move(o)}};
    }
    case ValueKind::Struct: {
      json fields = json::array();
      for (const auto& [k, item] : v.as_struct().fields) fields.push_back(json::array({k, encode_value(item)}));
      return {{"t", "struct"}, {"name", v.as_struct().type_name}, {"fields", std::move(fields)}};
    }
    case ValueKind::Pid: return {{"t", "pid"}, {"v", v.as_pid().id}};
    case ValueKind::Vec: {
      json a = json::array();
      for (double x : v.as_vec()) a.push_back(encode_number(x));
      return {{"t", "vec"}, {"v", std::move(a)}};
    }
    case ValueKind::Identity:
      return {{"t", "identity"}, {"identity", v.as_identity().provider}, {"class", v.as_identity().capability_class}};
    case ValueKind::Turn: {
      json caps = json::array();
      for (const auto& c : v.as_turn().captures) caps.push_back(encode_value(c));
      return {{"t", "turn"}, {"module", v.as_turn().module}, {"fn", v.as_turn().function}, {"captures", std::move(caps)}};
    }
    case ValueKind::Uncertain:
      return {{"t", "uncertain"}, {"p", v.as_uncertain().p}, {"v", encode_value(v.as_uncertain().inner)}};
  }
  return nullptr;
}

namespace {

RuntimeFault corrupt(const std::string& what) { return RuntimeFault("StoreIoError", "corrupt snapshot: " + what); }

double decode_number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "NaN") return std::nan("");
    if (s == "Infinity") return INFINITY;
    if (s == "-Infinity") return -INFINITY;
  }
  throw corrupt("bad number " + j.dump());
}

json encode_list(const std::vector<Value>& xs) {
  json a = json::array();
  for (const auto& x : xs) a.push_back(encode_value(x));
  return a;
}

std::vector<Value> decode_list(const json& a) {
  std::vector<Value> out;
  for (const auto& x : a) out.push_back(decode_value(x));
  return out;
}

}  // namespace

Value decode_value(const json& j) {
  const std::string t = j.at("t").get<std::string>();
  if (t == "null") return Value();
  if (t == "num") return Value(decode_number(j.at("v")));
  if (t == "str") return Value(j.at("v").get<std::string>());
  if (t == "bool") return Value(j.at("v").get<bool>());
  if (t == "list") return Value(List(decode_list(j.at("v"))));
  if (t == "map") {
    Map m;
    for (const auto& [k, item] : j.at("v").items()) m.emplace(k, decode_value(item));
    return Value(std::move(m));
  }
  if (t == "struct") {
    StructInstance s{j.at("name").get<std::string>(), {}};
    for (const auto& f : j.at("fields")) s.fields.emplace_back(f.at(0).get<std::string>(), decode_value(f.at(1)));
    return Value(std::move(s));
  }
  if (t == "pid") return Value(Pid{j.at("v").get<std::uint64_t>()});
  if (t == "vec") {
    NumVec xs;
    for (const auto& x : j.at("v")) xs.push_back(decode_number(x));
    return Value(std::move(xs));
  }
  if (t == "identity") return Value(Identity{j.at("identity").get<std::string>(), j.at("class").get<std::string>()});
  if (t == "turn")
    return Value(Closure{j.at("module").get<std::string>(), j.at("fn").get<std::uint32_t>(), decode_list(j.at("captures"))});
  if (t == "uncertain") return Value::uncertain(decode_value(j.at("v")), j.at("p").get<double>());
  throw corrupt("unknown value tag " + t);
}

VmSnapshot snapshot(const Process& p, std::string chunk_hash, std::string source_path) {
  VmSnapshot s;
  s.chunk_hash = std::move(chunk_hash);
  s.source_path = std::move(source_path);
  s.pid = p.pid.id;
  s.ip = p.frames.empty() ? 0 : p.frames.back().ip;
  for (const auto& f : p.frames) s.frames.push_back({f.chunk->module, f.function, f.ip, f.slots, f.closure, f.stack_base});
  s.stack = p.stack;
  s.handlers = p.handlers;
  s.memory.assign(p.memory.entries().begin(), p.memory.entries().end());
  std::sort(s.memory.begin(), s.memory.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  s.p0 = p.context.p0();
  s.p2 = p.context.p2();
  s.p1 = p.context.p1();
  s.working_capacity = p.context.working_capacity();
  s.mailbox.assign(p.mailbox.begin(), p.mailbox.end());
  s.status = std::string(status_name(p.status));
  return s;
}

std::string serialize_snapshot(const VmSnapshot& s) {
  json j;
  j["version"] = 1;
  j["chunkHash"] = s.chunk_hash;
  j["sourcePath"] = s.source_path;
  j["pid"] = s.pid;
  j["ip"] = s.ip;
  json frames = json::array();
  for (const auto& f : s.frames) {
    frames.push_back({{"module", f.module},
                      {"fn", f.function},
                      {"ip", f.ip},
                      {"slots", encode_list(f.slots)},
                      {"closure", encode_value(f.closure)},
                      {"stackBase", f.stack_base}});
  }
  j["frames"] = std::move(frames);
  j["stack"] = encode_list(s.stack);
  json handlers = json::array();
  for (const auto& h : s.handlers) handlers.push_back({{"frameDepth", h.frame_depth}, {"stackHeight", h.stack_height}, {"target", h.target}});
  j["handlers"] = std::move(handlers);
  json mem = json::object();
  for (const auto& [k, v] : s.memory) mem[k] = encode_value(v);
  j["memory"] = std::move(mem);
  j["context"] = {{"p0", s.p0}, {"p2", s.p2}, {"p1", s.p1}, {"w", s.working_capacity}};
  j["mailbox"] = encode_list(s.mailbox);
  j["status"] = s.status;
  return j.dump();
}

VmSnapshot deserialize_snapshot(std::string_view text) {
  try {
    json j = json::parse(text);
    VmSnapshot s;
    s.chunk_hash = j.at("chunkHash").get<std::string>();
    s.source_path = j.value("sourcePath", "");
    s.pid = j.at("pid").get<std::uint64_t>();
    s.ip = j.at("ip").get<std::uint32_t>();
    for (const auto& f : j.at("frames")) {
      s.frames.push_back({f.at("module").get<std::string>(), f.at("fn").get<std::uint32_t>(), f.at("ip").get<std::uint32_t>(),
                          decode_list(f.at("slots")), decode_value(f.at("closure")), f.at("stackBase").get<std::size_t>()});
    }
    s.stack = decode_list(j.at("stack"));
    for (const auto& h : j.at("handlers"))
      s.handlers.push_back({h.at("frameDepth").get<std::size_t>(), h.at("stackHeight").get<std::size_t>(), h.at("target").get<std::uint32_t>()});
    for (const auto& [k, v] : j.at("memory").items()) s.memory.emplace_back(k, decode_value(v));
    const auto& ctx = j.at("context");
    s.p0 = ctx.at("p0").get<std::vector<std::string>>();
    s.p2 = ctx.at("p2").get<std::deque<std::string>>();
    s.p1 = ctx.at("p1").get<std::deque<std::string>>();
    s.working_capacity = ctx.value("w", kWorkingCapacity);
    s.mailbox = decode_list(j.at("mailbox"));
    s.status = j.at("status").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
}

std::unique_ptr<Process> restore_process(const VmSnapshot& s, const std::string& current_hash,
                                         const std::function<std::shared_ptr<const Chunk>(std::string_view)>& resolve,
                                         Value injected) {
  if (s.chunk_hash != current_hash)
    throw RuntimeFault("ChunkMismatchError", "snapshot was taken from different code (" + s.chunk_hash.substr(0, 12) +
                                                 " vs " + current_hash.substr(0, 12) + ")");
  auto p = std::make_unique<Process>(Pid{s.pid}, s.working_capacity);
  for (const auto& f : s.frames) {
    auto chunk = resolve(f.module);
    if (!chunk || f.function >= chunk->functions.size() || f.ip > chunk->functions[f.function].code.size())
      throw corrupt("frame does not match module " + f.module);
    p->frames.push_back({chunk, f.function, f.ip, f.slots, f.closure, f.stack_base});
  }
  p->stack = s.stack;
  p->handlers = s.handlers;
  for (const auto& [k, v] : s.memory) p->memory.remember(k, v);
  p->context = StructuredContext::restore(s.p0, s.p2, s.p1, s.working_capacity);
  p->mailbox.assign(s.mailbox.begin(), s.mailbox.end());
  p->status = ProcessStatus::Runnable;
  p->stack.push_back(std::move(injected));
  return p;
}

FileStore::FileStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FileStore::default_root() {
  if (const char* dir = std::getenv("TURN_STORE_DIR"); dir && *dir) return dir;
  return ".turn_store";
}

std::filesystem::path FileStore::path_for(const std::string& id) const { return root_ / (id + ".json"); }

std::string FileStore::persist(const VmSnapshot& snap) {
  std::string text = serialize_snapshot(snap);
  std::string id = "s" + sha256_hex(text).substr(0, 16);
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw RuntimeFault("StoreIoError", "cannot create " + root_.string() + ": " + ec.message());
  auto final_path = path_for(id);
  auto tmp = root_ / ("." + id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFault("StoreIoError", "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw RuntimeFault("StoreIoError", "write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw RuntimeFault("StoreIoError", "cannot move snapshot into place: " + ec.message());
  return id;
}

VmSnapshot FileStore::load(const std::string& id) const {
  auto path = path_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFault("StoreIoError", "no snapshot " + id + " in " + root_.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_snapshot(ss.str());
}

}  // namespace turn
