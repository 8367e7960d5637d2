#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "turn/ast.hpp"
#include "turn/schema.hpp"

namespace turn {

// Resolves a schema URL to document text. Throws on failure; the expansion
// pass reports that as SchemaFetchError at the `use schema` location.
using Fetcher = std::function<std::string(const std::string& url)>;

// Reads `file://` URLs and plain paths; relative paths resolve against
// `base_dir`. With `allow_net`, http(s) URLs are fetched over the network,
// otherwise they are refused.
Fetcher make_fetcher(std::filesystem::path base_dir = {}, bool allow_net = false);

struct Absorbed {
  ast::NodePtr replacement;  // expression evaluating to Map{operationId -> turn}
  std::vector<StructDef> structs;
};

// Expands a `use schema::openapi(url)` node. Non-openapi protocols raise the
// unsupported-adapter compile error.
Absorbed absorb_openapi(const ast::Node& use_schema, const Fetcher& fetcher);

// Same, from already-fetched document text.
Absorbed absorb_openapi_document(const std::string& document, SourceLoc loc);

// "get_customer" / "getCustomer" -> "GetCustomer"
std::string upper_camel(const std::string& id);

// A program whose `use schema` nodes have all been replaced. Only
// expand_schemas produces one, so analysis cannot run before expansion.
class ExpandedProgram {
 public:
  ast::Program& program() noexcept { return program_; }
  const ast::Program& program() const noexcept { return program_; }
  const std::vector<StructDef>& synthesized() const noexcept { return synthesized_; }

 private:
  friend ExpandedProgram expand_schemas(ast::Program program, const Fetcher& fetcher);
  ExpandedProgram(ast::Program p, std::vector<StructDef> s) : program_(std::move(p)), synthesized_(std::move(s)) {}

  ast::Program program_;
  std::vector<StructDef> synthesized_;
};

ExpandedProgram expand_schemas(ast::Program program, const Fetcher& fetcher);

}  // namespace turn
