#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "turn/error.hpp"

namespace turn {

enum class TokenKind { Keyword, Identifier, Number, String, Punct, Operator, End };

std::string_view token_kind_name(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::End;
  std::string lexeme;  // exact source slice
  std::string text;    // decoded string literal contents; equals lexeme otherwise
  int line = 1;
  int column = 1;
  std::size_t offset = 0;
  bool newline_before = false;

  bool is(TokenKind k, std::string_view s) const { return kind == k && lexeme == s; }
  bool is_keyword(std::string_view s) const { return is(TokenKind::Keyword, s); }
  bool is_punct(std::string_view s) const { return is(TokenKind::Punct, s); }
  bool is_op(std::string_view s) const { return is(TokenKind::Operator, s); }
};

bool is_keyword(std::string_view word);

// Splits Turn source into tokens. The returned list always ends with an End
// token. Comments run from `//` to end of line.
std::vector<Token> tokenize(std::string_view source);

}  // namespace turn
