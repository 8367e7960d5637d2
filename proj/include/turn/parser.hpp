#pragma once

#include <string_view>
#include <vector>

#include "turn/ast.hpp"
#include "turn/lexer.hpp"

namespace turn {

// Parses a token stream (ending in End) into the top-level Block. The first
// error aborts with ParseError.
ast::Program parse(const std::vector<Token>& tokens);

// tokenize + parse.
ast::Program parse_source(std::string_view source);

// Renders an AST back to Turn source that re-parses to a structurally
// identical tree.
std::string print_source(const ast::Node& node);

}  // namespace turn
