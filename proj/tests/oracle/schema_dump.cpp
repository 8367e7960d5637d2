// Reads {"structs": [{"name", "fields": [[name, type], ...]}], "target", "docs": [...]}
// on stdin; prints {"schema": <generated>, "accepts": [bool per doc]}.
#include <iostream>
#include <iterator>

#include "turn/schema.hpp"

int main() {
  using nlohmann::json;
  std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  json in = json::parse(text);
  turn::StructRegistry reg;
  for (const auto& s : in["structs"]) {
    turn::StructDef d{s["name"].get<std::string>(), {}};
    for (const auto& f : s["fields"]) d.fields.push_back({f[0].get<std::string>(), turn::TypeTag::from_name(f[1].get<std::string>())});
    reg.add(std::move(d));
  }
  const turn::StructDef* target = reg.find(in["target"].get<std::string>());
  if (!target) {
    std::cerr << "unknown target\n";
    return 2;
  }
  try {
    turn::JsonSchema schema = turn::generate_schema(*target, reg);
    json out;
    out["schema"] = json::parse(turn::canonical(schema));
    out["accepts"] = json::array();
    for (const auto& d : in["docs"]) out["accepts"].push_back(turn::validate(d, schema).ok);
    std::cout << out.dump() << '\n';
  } catch (const turn::SchemaError& e) {
    std::cout << json{{"error", e.kind()}}.dump() << '\n';
  }
  return 0;
}
