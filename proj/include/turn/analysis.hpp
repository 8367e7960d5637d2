#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "turn/ast.hpp"
#include "turn/openapi.hpp"
#include "turn/schema.hpp"

namespace turn {

// One compiled function body. Index 0 is the program's top level.
struct FunctionEntry {
  std::string name;
  std::uint32_t arity = 0;
  const ast::FunctionInfo* info = nullptr;
  const ast::Node* body = nullptr;  // Block
  SourceLoc loc;
};

// A program with every name, struct and function slot resolved. Produced
// only by analyze().
class AnalyzedProgram {
 public:
  const ast::Program& program() const noexcept { return program_; }
  const StructRegistry& registry() const noexcept { return registry_; }
  const std::vector<FunctionEntry>& functions() const noexcept { return functions_; }
  // Top-level named turns by name.
  const std::map<std::string, std::uint32_t>& exports() const noexcept { return exports_; }

 private:
  friend AnalyzedProgram analyze(ExpandedProgram expanded);
  AnalyzedProgram() = default;

  ast::Program program_;
  std::unique_ptr<ast::FunctionInfo> main_info_;
  StructRegistry registry_;
  std::vector<FunctionEntry> functions_;
  std::map<std::string, std::uint32_t> exports_;
};

// Throws AnalysisError (or CompileError for schema problems) on the first
// problem found.
AnalyzedProgram analyze(ExpandedProgram expanded);

}  // namespace turn
