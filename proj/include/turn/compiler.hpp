#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "turn/analysis.hpp"
#include "turn/bytecode.hpp"
#include "turn/openapi.hpp"

namespace turn {

Chunk compile(const AnalyzedProgram& program, std::string module = "main");

struct CompileOptions {
  std::string module = "main";
  Fetcher fetcher;  // defaults to make_fetcher() when empty
};

// lex -> parse -> expand schemas -> analyze -> compile
Chunk compile_source(std::string_view source, const CompileOptions& options = {});

}  // namespace turn
