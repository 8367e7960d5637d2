#include "turn/traps.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

namespace turn {

namespace {

constexpr std::string_view kTraps[] = {
    "__sys_http_get",  "__sys_http_post", "__sys_fs_read",        "__sys_fs_write",        "__sys_env_get",
    "__sys_env_set",   "__sys_time_now",  "__sys_sleep",          "__sys_json_parse",      "__sys_json_stringify",
    "__sys_regex_matches", "__sys_regex_replace",
};

void arity(std::string_view name, const std::vector<Value>& args, std::size_t n) {
  if (args.size() != n)
    throw RuntimeFault("RuntimeError", "arity error: " + std::string(name) + " takes " + std::to_string(n) +
                                           " arguments, got " + std::to_string(args.size()));
}

const Identity& require_identity(std::string_view trap, const Value& v,
                                 std::initializer_list<std::string_view> classes) {
  if (!v.is(ValueKind::Identity))
    throw RuntimeFault("CapabilityError",
                       std::string(trap) + " needs an Identity handle, got " + std::string(kind_name(v.kind())));
  const Identity& id = v.as_identity();
  for (auto c : classes)
    if (id.capability_class == c) return id;
  throw RuntimeFault("CapabilityError", "wrong capability class " + id.capability_class + " for " + std::string(trap));
}

const std::string& str_arg(std::string_view trap, const Value& v, const char* what) {
  const Value& u = v.unwrapped();
  if (u.is(ValueKind::Identity))
    throw RuntimeFault("CapabilityError", "Identity cannot be coerced to Str");
  if (!u.is(ValueKind::Str)) throw type_error(std::string(trap) + " expects " + what + " to be Str");
  return u.as_str();
}

bool credential_var(const std::string& name) { return name.rfind("TURN_IDENTITY_", 0) == 0; }

Value http(std::string_view trap, const std::vector<Value>& args, TrapHost& host, bool post) {
  arity(trap, args, post ? 3 : 2);
  const Identity& id = require_identity(trap, args[0], {"network", "oauth"});
  const std::string& url = str_arg(trap, args[1], "the URL");
  std::string var = identity_env_var(id.provider);
  auto token = host.env.get(var);
  if (!token) throw RuntimeFault("CapabilityError", "no credential for identity " + id.provider + " (" + var + " is not set)");

  HttpRequest req;
  req.method = post ? "POST" : "GET";
  req.url = url;
  req.headers.emplace_back("Authorization", "Bearer " + *token);
  if (post) {
    const Value& body = args[2].unwrapped();
    req.body = body.is(ValueKind::Str) ? body.as_str() : to_json(body).dump();
    req.headers.emplace_back("Content-Type", "application/json");
  }
  HttpResponse res;
  try {
    res = host.http.execute(req);
  } catch (const RuntimeFault&) {
    throw;
  } catch (const std::exception& e) {
    throw RuntimeFault("IoError", std::string(e.what()));
  }
  return Value(Map{{"status", Value(static_cast<double>(res.status))}, {"body", Value(res.body)}});
}

std::regex compile_regex(const std::string& pattern) {
  try {
    return std::regex(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw RuntimeFault("RuntimeError", "bad regex " + pattern + ": " + e.what());
  }
}

}  // namespace

bool is_trap(std::string_view name) {
  for (auto t : kTraps)
    if (t == name) return true;
  return false;
}

std::string identity_env_var(const std::string& provider) {
  std::string out = "TURN_IDENTITY_";
  for (char c : provider) out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_';
  return out + "_TOKEN";
}

TrapResult kernel_trap(std::string_view name, const std::vector<Value>& args, TrapHost& host) {
  if (name == "__sys_http_get") return {http(name, args, host, false), {}};
  if (name == "__sys_http_post") return {http(name, args, host, true), {}};

  if (name == "__sys_fs_read") {
    arity(name, args, 2);
    require_identity(name, args[0], {"filesystem"});
    const std::string& path = str_arg(name, args[1], "the path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFault("IoError", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {Value(ss.str()), {}};
  }
  if (name == "__sys_fs_write") {
    arity(name, args, 3);
    require_identity(name, args[0], {"filesystem"});
    const std::string& path = str_arg(name, args[1], "the path");
    const std::string& data = str_arg(name, args[2], "the data");
    std::error_code ec;
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFault("IoError", "cannot write " + path);
    out << data;
    if (!out) throw RuntimeFault("IoError", "write to " + path + " failed");
    return {Value(), {}};
  }
  if (name == "__sys_env_get") {
    arity(name, args, 2);
    require_identity(name, args[0], {"environment"});
    const std::string& var = str_arg(name, args[1], "the variable name");
    if (credential_var(var)) throw RuntimeFault("CapabilityError", "credential variables are not accessible");
    auto v = host.env.get(var);
    return {v ? Value(*v) : Value(), {}};
  }
  if (name == "__sys_env_set") {
    arity(name, args, 3);
    require_identity(name, args[0], {"environment"});
    const std::string& var = str_arg(name, args[1], "the variable name");
    if (credential_var(var)) throw RuntimeFault("CapabilityError", "credential variables are not accessible");
    host.env.set(var, str_arg(name, args[2], "the value"));
    return {Value(), {}};
  }
  if (name == "__sys_time_now") {
    arity(name, args, 0);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::system_clock::now().time_since_epoch());
    return {Value(static_cast<double>(ms.count())), {}};
  }
  if (name == "__sys_sleep") {
    arity(name, args, 1);
    const Value& ms = args[0].unwrapped();
    if (!ms.is(ValueKind::Num)) throw type_error("__sys_sleep expects Num milliseconds");
    double n = ms.as_num() < 0 ? 0 : ms.as_num();
    return {Value(), std::chrono::milliseconds(static_cast<long long>(n))};
  }
  if (name == "__sys_json_parse") {
    arity(name, args, 1);
    const std::string& text = str_arg(name, args[0], "the text");
    try {
      return {from_json(nlohmann::json::parse(text)), {}};
    } catch (const nlohmann::json::exception& e) {
      throw RuntimeFault("SerializationError", std::string("invalid JSON: ") + e.what());
    }
  }
  if (name == "__sys_json_stringify") {
    arity(name, args, 1);
    return {Value(to_json(args[0]).dump()), {}};
  }
  if (name == "__sys_regex_matches") {
    arity(name, args, 2);
    std::regex re = compile_regex(str_arg(name, args[0], "the pattern"));
    return {Value(std::regex_search(str_arg(name, args[1], "the text"), re)), {}};
  }
  if (name == "__sys_regex_replace") {
    arity(name, args, 3);
    std::regex re = compile_regex(str_arg(name, args[0], "the pattern"));
    return {Value(std::regex_replace(str_arg(name, args[1], "the text"), re, str_arg(name, args[2], "the replacement"))),
            {}};
  }
  throw RuntimeFault("RuntimeError", "unknown kernel trap " + std::string(name));
}

}  // namespace turn
