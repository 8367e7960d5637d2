#include "turn/schema.hpp"

#include <set>

namespace turn {

TypeTag TypeTag::from_name(std::string_view name) {
  if (name == "Num") return {TypeKind::Num, {}};
  if (name == "Str") return {TypeKind::Str, {}};
  if (name == "Bool") return {TypeKind::Bool, {}};
  if (name == "List") return {TypeKind::List, {}};
  if (name == "Map") return {TypeKind::Map, {}};
  if (name == "Pid") return {TypeKind::Pid, {}};
  if (name == "Identity") return {TypeKind::Identity, {}};
  if (name == "Vec") return {TypeKind::Vec, {}};
  return {TypeKind::StructRef, std::string(name)};
}

std::string TypeTag::name() const {
  switch (kind) {
    case TypeKind::Num: return "Num";
    case TypeKind::Str: return "Str";
    case TypeKind::Bool: return "Bool";
    case TypeKind::List: return "List";
    case TypeKind::Map: return "Map";
    case TypeKind::StructRef: return ref;
    case TypeKind::Pid: return "Pid";
    case TypeKind::Identity: return "Identity";
    case TypeKind::Vec: return "Vec";
  }
  return "?";
}

bool StructRegistry::add(StructDef def) {
  if (find(def.name)) return false;
  defs_.push_back(std::move(def));
  return true;
}

const StructDef* StructRegistry::find(std::string_view name) const {
  for (const auto& d : defs_)
    if (d.name == name) return &d;
  return nullptr;
}

std::optional<std::size_t> StructRegistry::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < defs_.size(); ++i)
    if (defs_[i].name == name) return i;
  return std::nullopt;
}

namespace {

JsonSchema schema_for(const StructDef& def, const StructRegistry& registry, std::vector<std::string>& stack) {
  for (const auto& open : stack) {
    if (open == def.name) {
      std::string chain;
      for (const auto& s : stack) chain += s + " -> ";
      throw SchemaError("SchemaCycleError", "recursive struct reference " + chain + def.name);
    }
  }
  stack.push_back(def.name);
  JsonSchema props = JsonSchema::object();
  JsonSchema required = JsonSchema::array();
  for (const auto& f : def.fields) {
    JsonSchema field;
    switch (f.type.kind) {
      case TypeKind::Num: field = {{"type", "number"}}; break;
      case TypeKind::Str: field = {{"type", "string"}}; break;
      case TypeKind::Bool: field = {{"type", "boolean"}}; break;
      case TypeKind::List: field = {{"type", "array"}}; break;
      case TypeKind::Map: field = {{"type", "object"}}; break;
      case TypeKind::StructRef: {
        const StructDef* inner = registry.find(f.type.ref);
        if (!inner) throw SchemaError("UnknownStruct", "unknown struct " + f.type.ref + " in field " + def.name + "." + f.name);
        field = schema_for(*inner, registry, stack);
        break;
      }
      case TypeKind::Pid:
      case TypeKind::Identity:
      case TypeKind::Vec:
        throw SchemaError("UnsupportedFieldType",
                          "field " + def.name + "." + f.name + " has type " + f.type.name() + ", which has no JSON Schema");
    }
    props[f.name] = std::move(field);
    required.push_back(f.name);
  }
  stack.pop_back();
  JsonSchema out = JsonSchema::object();
  out["type"] = "object";
  out["properties"] = std::move(props);
  out["required"] = std::move(required);
  return out;
}

bool matches_type(const nlohmann::json& j, const std::string& type) {
  if (type == "number") return j.is_number();
  if (type == "string") return j.is_string();
  if (type == "boolean") return j.is_boolean();
  if (type == "array") return j.is_array();
  if (type == "object") return j.is_object();
  return false;
}

ValidationResult validate_at(const nlohmann::json& value, const JsonSchema& schema, const std::string& path) {
  const std::string type = schema.value("type", "object");
  if (!matches_type(value, type)) {
    std::string where = path.empty() ? "response" : path;
    return ValidationResult::failure(where + ": expected " + type);
  }
  if (type != "object" || !schema.contains("required")) return ValidationResult::success();
  const auto& props = schema["properties"];
  for (const auto& key : schema["required"]) {
    const std::string name = key.get<std::string>();
    const std::string field_path = path.empty() ? name : path + "." + name;
    auto it = value.find(name);
    if (it == value.end()) return ValidationResult::failure("missing required field " + field_path);
    if (props.contains(name)) {
      auto sub = validate_at(*it, props[name], field_path);
      if (!sub) return sub;
    }
  }
  return ValidationResult::success();
}

Value bind_field(const nlohmann::json& j, const TypeTag& type, const StructRegistry& registry) {
  if (type.kind == TypeKind::StructRef) {
    const StructDef* inner = registry.find(type.ref);
    if (!inner) throw SchemaError("UnknownStruct", "unknown struct " + type.ref);
    return bind_struct(j, *inner, registry);
  }
  return from_json(j);
}

}  // namespace

JsonSchema generate_schema(const StructDef& def, const StructRegistry& registry) {
  std::set<std::string> seen;
  for (const auto& f : def.fields) {
    if (!seen.insert(f.name).second)
      throw SchemaError("DuplicateField", "duplicate field " + f.name + " in struct " + def.name);
  }
  std::vector<std::string> stack;
  return schema_for(def, registry, stack);
}

std::string canonical(const JsonSchema& schema) { return schema.dump(); }

ValidationResult validate(const nlohmann::json& response, const JsonSchema& schema) {
  return validate_at(response, schema, "");
}

Value bind_struct(const nlohmann::json& response, const StructDef& def, const StructRegistry& registry) {
  StructInstance out{def.name, {}};
  out.fields.reserve(def.fields.size());
  for (const auto& f : def.fields) out.fields.emplace_back(f.name, bind_field(response.at(f.name), f.type, registry));
  return Value(std::move(out));
}

bool conforms(const Value& raw, const TypeTag& type) {
  const Value& v = raw.unwrapped();
  switch (type.kind) {
    case TypeKind::Num: return v.is(ValueKind::Num);
    case TypeKind::Str: return v.is(ValueKind::Str);
    case TypeKind::Bool: return v.is(ValueKind::Bool);
    case TypeKind::List: return v.is(ValueKind::List);
    case TypeKind::Map: return v.is(ValueKind::Map);
    case TypeKind::StructRef: return v.is(ValueKind::Struct) && v.as_struct().type_name == type.ref;
    case TypeKind::Pid: return v.is(ValueKind::Pid);
    case TypeKind::Identity: return v.is(ValueKind::Identity);
    case TypeKind::Vec: return v.is(ValueKind::Vec);
  }
  return false;
}

}  // namespace turn
