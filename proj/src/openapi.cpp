#include "turn/openapi.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "turn/parser.hpp"

namespace turn {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string http_fetch(const std::string& url) {
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end + 3);
  std::string base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client cli(base);
  cli.set_follow_location(true);
  cli.set_connection_timeout(10);
  auto res = cli.Get(path);
  if (!res) throw std::runtime_error("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw std::runtime_error("GET " + url + " returned status " + std::to_string(res->status));
  return res->body;
}

bool starts_with(const std::string& s, std::string_view p) { return s.compare(0, p.size(), p) == 0; }

std::string quote(const std::string& s) { return json(s).dump(); }

TypeTag property_type(const json& prop) {
  if (!prop.is_object() || prop.contains("$ref")) return {TypeKind::Map, {}};
  std::string t = prop.value("type", "");
  if (t == "number" || t == "integer") return {TypeKind::Num, {}};
  if (t == "string") return {TypeKind::Str, {}};
  if (t == "boolean") return {TypeKind::Bool, {}};
  if (t == "array") return {TypeKind::List, {}};
  return {TypeKind::Map, {}};
}

// Follows a single "#/components/schemas/X" reference.
const json* resolve_ref(const json& doc, const json& schema) {
  if (!schema.is_object()) return nullptr;
  if (!schema.contains("$ref")) return &schema;
  const auto& ref = schema["$ref"];
  if (!ref.is_string()) return nullptr;
  const std::string prefix = "#/components/schemas/";
  std::string r = ref.get<std::string>();
  if (!starts_with(r, prefix)) return nullptr;
  auto comps = doc.find("components");
  if (comps == doc.end() || !comps->contains("schemas")) return nullptr;
  const auto& schemas = (*comps)["schemas"];
  auto it = schemas.find(r.substr(prefix.size()));
  if (it == schemas.end() || !it->is_object()) return nullptr;
  return &*it;
}

// "/customers/{id}/orders" -> "base" + "/customers/" + str(params["id"]) + "/orders"
std::string url_expr(const std::string& base, const std::string& path) {
  std::string out = quote(base);
  std::size_t i = 0;
  std::string lit;
  while (i < path.size()) {
    if (path[i] == '{') {
      auto close = path.find('}', i);
      if (close != std::string::npos) {
        std::string name = path.substr(i + 1, close - i - 1);
        out += " + " + quote(lit) + " + call(\"str\", params[" + quote(name) + "])";
        lit.clear();
        i = close + 1;
        continue;
      }
    }
    lit += path[i++];
  }
  if (!lit.empty()) out += " + " + quote(lit);
  return out;
}

}  // namespace

Fetcher make_fetcher(std::filesystem::path base_dir, bool allow_net) {
  return [base_dir = std::move(base_dir), allow_net](const std::string& url) -> std::string {
    if (starts_with(url, "http://") || starts_with(url, "https://")) {
      if (!allow_net) throw std::runtime_error("fetching " + url + " needs --allow-net");
      return http_fetch(url);
    }
    std::string path = starts_with(url, "file://") ? url.substr(7) : url;
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return read_file(p);
  };
}

std::string upper_camel(const std::string& id) {
  std::string out;
  bool up = true;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      up = true;
      continue;
    }
    out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return out;
}

Absorbed absorb_openapi_document(const std::string& document, SourceLoc loc) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw CompileError("SchemaParseError", loc, std::string("document is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("openapi") || !doc["openapi"].is_string() ||
      !starts_with(doc["openapi"].get<std::string>(), "3."))
    throw CompileError("SchemaParseError", loc, "document is not an OpenAPI 3.x description");

  std::string base;
  if (doc.contains("servers") && doc["servers"].is_array() && !doc["servers"].empty())
    base = doc["servers"][0].value("url", "");
  while (!base.empty() && base.back() == '/') base.pop_back();

  Absorbed out;
  std::string entries;
  const json empty = json::object();
  const json& paths = doc.contains("paths") && doc["paths"].is_object() ? doc["paths"] : empty;
  for (const auto& [path, item] : paths.items()) {
    if (!item.is_object()) continue;
    for (const auto& [method, op] : item.items()) {
      if (!op.is_object() || !op.contains("operationId") || !op["operationId"].is_string()) continue;
      const json* schema = nullptr;
      try {
        schema = &op.at("responses").at("200").at("content").at("application/json").at("schema");
      } catch (const json::exception&) {
        continue;
      }
      const std::string op_id = op["operationId"].get<std::string>();

      StructDef def{upper_camel(op_id) + "Response", {}};
      if (const json* resolved = resolve_ref(doc, *schema); resolved && resolved->contains("properties")) {
        for (const auto& [name, prop] : (*resolved)["properties"].items()) def.fields.push_back({name, property_type(prop)});
      }
      out.structs.push_back(std::move(def));

      std::string body;
      std::string url = url_expr(base, path);
      if (method == "get") {
        body = "return call(\"std/net.get\", handle, " + url + ")";
      } else if (method == "post") {
        body = "return call(\"std/net.post\", handle, " + url + ", call(\"std/json.stringify\", params[\"body\"]))";
      } else {
        body = "throw {error: \"UnsupportedOperation\", message: " + quote("method " + method + " is not supported") + "}";
      }
      if (!entries.empty()) entries += ",\n";
      entries += "    " + quote(op_id) + ": turn(handle, params) {\n      " + body + "\n    }";
    }
  }

  std::string src = "(turn() {\n  return {\n" + entries + "\n  }\n})()\n";
  ast::Program prog = parse_source(src);
  auto& stmts = prog.root->as<ast::Block>()->stmts;
  out.replacement = std::move(stmts.at(0));
  // Generated nodes report the `use schema` location.
  std::function<void(ast::NodePtr&)> relocate = [&](ast::NodePtr& n) {
    n->loc = loc;
    ast::for_each_child(*n, relocate);
  };
  relocate(out.replacement);
  return out;
}

Absorbed absorb_openapi(const ast::Node& node, const Fetcher& fetcher) {
  const auto* use = node.as<ast::UseSchema>();
  if (!use) throw CompileError("SchemaError", node.loc, "not a use schema node");
  if (use->protocol != "openapi")
    throw CompileError("UnsupportedProtocol", node.loc,
                       "unsupported schema protocol: " + use->protocol + " (adapters in development)");
  std::string text;
  try {
    text = fetcher(use->url);
  } catch (const std::exception& e) {
    throw CompileError("SchemaFetchError", node.loc, "cannot fetch " + use->url + ": " + e.what());
  }
  return absorb_openapi_document(text, node.loc);
}

ExpandedProgram expand_schemas(ast::Program program, const Fetcher& fetcher) {
  std::vector<StructDef> synthesized;
  std::function<void(ast::NodePtr&)> walk = [&](ast::NodePtr& n) {
    if (n->is<ast::UseSchema>()) {
      Absorbed a = absorb_openapi(*n, fetcher);
      for (auto& s : a.structs) synthesized.push_back(std::move(s));
      n = std::move(a.replacement);
      return;
    }
    ast::for_each_child(*n, walk);
  };
  if (program.root) walk(program.root);
  return ExpandedProgram(std::move(program), std::move(synthesized));
}

}  // namespace turn
