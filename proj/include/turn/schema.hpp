#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "turn/error.hpp"
#include "turn/value.hpp"

namespace turn {

using JsonSchema = nlohmann::ordered_json;

enum class TypeKind { Num, Str, Bool, List, Map, StructRef, Pid, Identity, Vec };

struct TypeTag {
  TypeKind kind = TypeKind::Map;
  std::string ref;  // struct name for StructRef

  // Maps a source type name: the builtin names, otherwise a struct reference.
  static TypeTag from_name(std::string_view name);
  std::string name() const;
  bool operator==(const TypeTag&) const = default;
};

struct FieldDef {
  std::string name;
  TypeTag type;
  bool operator==(const FieldDef&) const = default;
};

struct StructDef {
  std::string name;
  std::vector<FieldDef> fields;
  bool operator==(const StructDef&) const = default;
};

// Raised for schema generation failures (SchemaCycleError,
// UnsupportedFieldType, UnknownStruct).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Declaration-ordered set of struct definitions with unique names.
class StructRegistry {
 public:
  // Returns false if the name is already taken.
  bool add(StructDef def);
  const StructDef* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::vector<StructDef>& all() const noexcept { return defs_; }
  std::size_t size() const noexcept { return defs_.size(); }

 private:
  std::vector<StructDef> defs_;
};

// Builds the JSON Schema for `def`: an object whose properties follow the
// declared field order and whose "required" list names every field.
JsonSchema generate_schema(const StructDef& def, const StructRegistry& registry);

// Compact serialization used for embedding and byte-equality checks.
std::string canonical(const JsonSchema& schema);

struct ValidationResult {
  bool ok = true;
  std::string message;

  static ValidationResult success() { return {}; }
  static ValidationResult failure(std::string msg) { return {false, std::move(msg)}; }
  explicit operator bool() const noexcept { return ok; }
};

// Checks `response` against a generated schema. Additional properties are
// allowed; the message names the first missing or mistyped field.
ValidationResult validate(const nlohmann::json& response, const JsonSchema& schema);

// Converts a validated response into a struct instance: declared fields are
// copied in declaration order, struct-typed fields recursively, extra keys are
// dropped.
Value bind_struct(const nlohmann::json& response, const StructDef& def, const StructRegistry& registry);

// True if `v` (unwrapped) inhabits `type`.
bool conforms(const Value& v, const TypeTag& type);

}  // namespace turn
