#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "turn/error.hpp"

namespace turn {

class Value;

struct Pid {
  std::uint64_t id = 0;
  auto operator<=>(const Pid&) const = default;
};

// Opaque capability handle. Carries the provider name and capability class
// only; the credential itself lives in the host environment.
struct Identity {
  std::string provider;
  std::string capability_class;
};

using List = std::vector<Value>;
using Map = std::map<std::string, Value, std::less<>>;
using NumVec = std::vector<double>;

struct StructInstance {
  std::string type_name;
  std::vector<std::pair<std::string, Value>> fields;

  const Value* find(std::string_view field) const;
};

// A turn value: a compiled function plus the bindings it captured by copy.
struct Closure {
  std::string module;
  std::uint32_t function = 0;
  std::vector<Value> captures;
};

struct Uncertain;

enum class ValueKind { Null, Num, Str, Bool, List, Map, Struct, Pid, Vec, Identity, Turn, Uncertain };

std::string_view kind_name(ValueKind kind);

// Tagged runtime value. Aggregates are immutable once built and shared by
// pointer, so copying a Value never exposes aliasing to Turn code.
class Value {
 public:
  using Storage = std::variant<std::monostate, double, std::string, bool, std::shared_ptr<const List>,
                               std::shared_ptr<const Map>, std::shared_ptr<const StructInstance>, Pid,
                               std::shared_ptr<const NumVec>, std::shared_ptr<const Identity>, std::shared_ptr<const Closure>,
                               std::shared_ptr<const Uncertain>>;

  Value() = default;
  Value(std::nullptr_t) {}
  Value(double n) : v_(n) {}
  Value(int n) : v_(static_cast<double>(n)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(bool b) : v_(b) {}
  Value(List items) : v_(std::make_shared<const List>(std::move(items))) {}
  Value(Map entries) : v_(std::make_shared<const Map>(std::move(entries))) {}
  Value(StructInstance s) : v_(std::make_shared<const StructInstance>(std::move(s))) {}
  Value(Pid p) : v_(p) {}
  Value(NumVec v) : v_(std::make_shared<const NumVec>(std::move(v))) {}
  Value(Identity id) : v_(std::make_shared<const Identity>(std::move(id))) {}
  Value(Closure c) : v_(std::make_shared<const Closure>(std::move(c))) {}

  // Wraps `inner` with score p. Scores of exactly 1 yield the plain value and
  // an already-uncertain inner is unwrapped first, so wrappers never nest.
  // Identity values are certain by construction and are never wrapped.
  static Value uncertain(Value inner, double p);

  ValueKind kind() const noexcept { return static_cast<ValueKind>(v_.index()); }
  bool is(ValueKind k) const noexcept { return kind() == k; }
  bool is_null() const noexcept { return is(ValueKind::Null); }

  double as_num() const;
  const std::string& as_str() const;
  bool as_bool() const;
  const List& as_list() const;
  const Map& as_map() const;
  const StructInstance& as_struct() const;
  Pid as_pid() const;
  const NumVec& as_vec() const;
  const Identity& as_identity() const;
  const Closure& as_turn() const;
  const Uncertain& as_uncertain() const;

  // Strips an Uncertain wrapper if present.
  const Value& unwrapped() const;

  const Storage& storage() const noexcept { return v_; }

 private:
  Storage v_;
};

struct Uncertain {
  Value inner;
  double p = 1.0;
};

bool operator==(const Value& a, const Value& b);

// Echo rendering. Identity prints as "<identity NAME>", Uncertain prints its
// inner value, numbers use the shortest round-trip decimal form.
std::string render(const Value& v);
std::string format_number(double n);

// True if an Identity handle appears anywhere inside v.
bool contains_identity(const Value& v);

// Rebuilds v with no shared structure.
Value deep_copy(const Value& v);

// Error raised inside the VM. `payload` is the value a `catch` binds: the
// thrown value for `throw`, or {"error": kind, "message": text} otherwise.
class RuntimeFault : public Error {
 public:
  RuntimeFault(std::string kind, std::string message);
  RuntimeFault(std::string kind, std::string message, Value payload);

  const Value& payload() const noexcept { return payload_; }

  // Fault produced by `throw v`. Maps with an "error" key keep that kind.
  static RuntimeFault thrown(Value v);

 private:
  Value payload_;
};

RuntimeFault type_error(std::string message);

// Conversions between Turn values and user-facing JSON (`std/json`, inference
// output binding). Integral numbers below 2^53 serialize as JSON integers.
// Throws SerializationError on Identity, Turn and Pid values.
nlohmann::json to_json(const Value& v);
Value from_json(const nlohmann::json& j);

}  // namespace turn
