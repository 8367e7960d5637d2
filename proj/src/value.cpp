#include "turn/value.hpp"

#include <charconv>
#include <cmath>

namespace turn {

std::string to_string(SourceLoc loc) {
  return "line " + std::to_string(loc.line) + ", column " + std::to_string(loc.column);
}

std::string_view kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Null: return "Null";
    case ValueKind::Num: return "Num";
    case ValueKind::Str: return "Str";
    case ValueKind::Bool: return "Bool";
    case ValueKind::List: return "List";
    case ValueKind::Map: return "Map";
    case ValueKind::Struct: return "Struct";
    case ValueKind::Pid: return "Pid";
    case ValueKind::Vec: return "Vec";
    case ValueKind::Identity: return "Identity";
    case ValueKind::Turn: return "Turn";
    case ValueKind::Uncertain: return "Uncertain";
  }
  return "?";
}

const Value* StructInstance::find(std::string_view field) const {
  for (const auto& [name, value] : fields) {
    if (name == field) return &value;
  }
  return nullptr;
}

Value Value::uncertain(Value inner, double p) {
  if (inner.is(ValueKind::Uncertain)) inner = Value(inner.as_uncertain().inner);
  if (p >= 1.0 || inner.is(ValueKind::Identity)) return inner;
  if (p < 0.0) p = 0.0;
  Value out;
  out.v_ = std::make_shared<const Uncertain>(Uncertain{std::move(inner), p});
  return out;
}

namespace {

[[noreturn]] void wrong_kind(const Value& v, ValueKind want) {
  throw type_error("expected " + std::string(kind_name(want)) + ", got " + std::string(kind_name(v.kind())));
}

template <typename T>
const T& get_or_throw(const Value::Storage& s, const Value& v, ValueKind want) {
  if (const auto* p = std::get_if<T>(&s)) return *p;
  wrong_kind(v, want);
}

}  // namespace

double Value::as_num() const { return get_or_throw<double>(v_, *this, ValueKind::Num); }
const std::string& Value::as_str() const { return get_or_throw<std::string>(v_, *this, ValueKind::Str); }
bool Value::as_bool() const { return get_or_throw<bool>(v_, *this, ValueKind::Bool); }
const List& Value::as_list() const {
  return *get_or_throw<std::shared_ptr<const List>>(v_, *this, ValueKind::List);
}
const Map& Value::as_map() const { return *get_or_throw<std::shared_ptr<const Map>>(v_, *this, ValueKind::Map); }
const StructInstance& Value::as_struct() const {
  return *get_or_throw<std::shared_ptr<const StructInstance>>(v_, *this, ValueKind::Struct);
}
Pid Value::as_pid() const { return get_or_throw<Pid>(v_, *this, ValueKind::Pid); }
const NumVec& Value::as_vec() const {
  return *get_or_throw<std::shared_ptr<const NumVec>>(v_, *this, ValueKind::Vec);
}
const Identity& Value::as_identity() const {
  return *get_or_throw<std::shared_ptr<const Identity>>(v_, *this, ValueKind::Identity);
}
const Closure& Value::as_turn() const {
  return *get_or_throw<std::shared_ptr<const Closure>>(v_, *this, ValueKind::Turn);
}
const Uncertain& Value::as_uncertain() const {
  return *get_or_throw<std::shared_ptr<const Uncertain>>(v_, *this, ValueKind::Uncertain);
}

const Value& Value::unwrapped() const {
  if (is(ValueKind::Uncertain)) return as_uncertain().inner;
  return *this;
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::Null: return true;
    case ValueKind::Num: return a.as_num() == b.as_num();
    case ValueKind::Str: return a.as_str() == b.as_str();
    case ValueKind::Bool: return a.as_bool() == b.as_bool();
    case ValueKind::List: return a.as_list() == b.as_list();
    case ValueKind::Map: return a.as_map() == b.as_map();
    case ValueKind::Struct:
      return a.as_struct().type_name == b.as_struct().type_name && a.as_struct().fields == b.as_struct().fields;
    case ValueKind::Pid: return a.as_pid() == b.as_pid();
    case ValueKind::Vec: return a.as_vec() == b.as_vec();
    // Handles carry no secret; equality is by provider name.
    case ValueKind::Identity: return a.as_identity().provider == b.as_identity().provider;
    case ValueKind::Turn: {
      const auto& x = a.as_turn();
      const auto& y = b.as_turn();
      return x.module == y.module && x.function == y.function && x.captures == y.captures;
    }
    case ValueKind::Uncertain:
      return a.as_uncertain().p == b.as_uncertain().p && a.as_uncertain().inner == b.as_uncertain().inner;
  }
  return false;
}

std::string format_number(double n) {
  if (std::isnan(n)) return "NaN";
  if (std::isinf(n)) return n > 0 ? "inf" : "-inf";
  if (n == 0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, n);
  return std::string(buf, end);
}

namespace {

void render_into(std::string& out, const Value& v, bool nested) {
  switch (v.kind()) {
    case ValueKind::Null: out += "null"; break;
    case ValueKind::Num: out += format_number(v.as_num()); break;
    case ValueKind::Str:
      if (nested) {
        out += nlohmann::json(v.as_str()).dump();
      } else {
        out += v.as_str();
      }
      break;
    case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case ValueKind::List: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_list()) {
        if (!first) out += ", ";
        first = false;
        render_into(out, item, true);
      }
      out += ']';
      break;
    }
    case ValueKind::Map: {
      out += '{';
      bool first = true;
      for (const auto& [k, item] : v.as_map()) {
        if (!first) out += ", ";
        first = false;
        out += k;
        out += ": ";
        render_into(out, item, true);
      }
      out += '}';
      break;
    }
    case ValueKind::Struct: {
      const auto& s = v.as_struct();
      out += s.type_name;
      out += " {";
      bool first = true;
      for (const auto& [k, item] : s.fields) {
        out += first ? " " : ", ";
        first = false;
        out += k;
        out += ": ";
        render_into(out, item, true);
      }
      out += s.fields.empty() ? "}" : " }";
      break;
    }
    case ValueKind::Pid: out += "<pid " + std::to_string(v.as_pid().id) + ">"; break;
    case ValueKind::Vec: out += "<vec len=" + std::to_string(v.as_vec().size()) + ">"; break;
    case ValueKind::Identity: out += "<identity " + v.as_identity().provider + ">"; break;
    case ValueKind::Turn: out += "<turn>"; break;
    case ValueKind::Uncertain: render_into(out, v.as_uncertain().inner, nested); break;
  }
}

}  // namespace

std::string render(const Value& v) {
  std::string out;
  render_into(out, v, false);
  return out;
}

bool contains_identity(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Identity: return true;
    case ValueKind::List:
      for (const auto& item : v.as_list())
        if (contains_identity(item)) return true;
      return false;
    case ValueKind::Map:
      for (const auto& [k, item] : v.as_map())
        if (contains_identity(item)) return true;
      return false;
    case ValueKind::Struct:
      for (const auto& [k, item] : v.as_struct().fields)
        if (contains_identity(item)) return true;
      return false;
    case ValueKind::Turn:
      for (const auto& item : v.as_turn().captures)
        if (contains_identity(item)) return true;
      return false;
    case ValueKind::Uncertain: return contains_identity(v.as_uncertain().inner);
    default: return false;
  }
}

Value deep_copy(const Value& v) {
  switch (v.kind()) {
    case ValueKind::List: {
      List out;
      out.reserve(v.as_list().size());
      for (const auto& item : v.as_list()) out.push_back(deep_copy(item));
      return Value(std::move(out));
    }
    case ValueKind::Map: {
      Map out;
      for (const auto& [k, item] : v.as_map()) out.emplace(k, deep_copy(item));
      return Value(std::move(out));
    }
    case ValueKind::Struct: {
      StructInstance out{v.as_struct().type_name, {}};
      for (const auto& [k, item] : v.as_struct().fields) out.fields.emplace_back(k, deep_copy(item));
      return Value(std::move(out));
    }
    case ValueKind::Vec: return Value(NumVec(v.as_vec()));
    case ValueKind::Turn: {
      Closure out{v.as_turn().module, v.as_turn().function, {}};
      for (const auto& item : v.as_turn().captures) out.captures.push_back(deep_copy(item));
      return Value(std::move(out));
    }
    case ValueKind::Uncertain:
      return Value::uncertain(deep_copy(v.as_uncertain().inner), v.as_uncertain().p);
    default: return v;
  }
}

RuntimeFault::RuntimeFault(std::string kind, std::string message)
    : Error(kind, message), payload_(Map{{"error", Value(kind)}, {"message", Value(message)}}) {}

RuntimeFault::RuntimeFault(std::string kind, std::string message, Value payload)
    : Error(std::move(kind), std::move(message)), payload_(std::move(payload)) {}

RuntimeFault RuntimeFault::thrown(Value v) {
  std::string kind = "Thrown";
  std::string message = render(v);
  if (v.is(ValueKind::Map)) {
    const auto& m = v.as_map();
    if (auto it = m.find("error"); it != m.end() && it->second.is(ValueKind::Str)) kind = it->second.as_str();
    if (auto it = m.find("message"); it != m.end() && it->second.is(ValueKind::Str)) message = it->second.as_str();
  }
  return RuntimeFault(std::move(kind), std::move(message), std::move(v));
}

RuntimeFault type_error(std::string message) { return RuntimeFault("RuntimeError", "type error: " + message); }

nlohmann::json to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Num: {
      double n = v.as_num();
      if (std::isfinite(n) && std::trunc(n) == n && std::fabs(n) < 9007199254740992.0)
        return static_cast<std::int64_t>(n);
      if (!std::isfinite(n)) throw RuntimeFault("SerializationError", "non-finite number cannot be serialized to JSON");
      return n;
    }
    case ValueKind::Str: return v.as_str();
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::List: {
      auto out = nlohmann::json::array();
      for (const auto& item : v.as_list()) out.push_back(to_json(item));
      return out;
    }
    case ValueKind::Map: {
      auto out = nlohmann::json::object();
      for (const auto& [k, item] : v.as_map()) out[k] = to_json(item);
      return out;
    }
    case ValueKind::Struct: {
      auto out = nlohmann::json::object();
      for (const auto& [k, item] : v.as_struct().fields) out[k] = to_json(item);
      return out;
    }
    case ValueKind::Vec: return nlohmann::json(v.as_vec());
    case ValueKind::Uncertain: return to_json(v.as_uncertain().inner);
    case ValueKind::Identity:
      throw RuntimeFault("SerializationError", "Identity handle cannot be serialized to JSON");
    case ValueKind::Pid: throw RuntimeFault("SerializationError", "Pid cannot be serialized to JSON");
    case ValueKind::Turn: throw RuntimeFault("SerializationError", "turn value cannot be serialized to JSON");
  }
  return nullptr;
}

Value from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return Value();
    case nlohmann::json::value_t::boolean: return Value(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
    case nlohmann::json::value_t::number_float: return Value(j.get<double>());
    case nlohmann::json::value_t::string: return Value(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      List out;
      out.reserve(j.size());
      for (const auto& item : j) out.push_back(from_json(item));
      return Value(std::move(out));
    }
    case nlohmann::json::value_t::object: {
      Map out;
      for (const auto& [k, item] : j.items()) out.emplace(k, from_json(item));
      return Value(std::move(out));
    }
    default: return Value();
  }
}

}  // namespace turn
