#include "turn/lexer.hpp"

#include <array>
#include <cctype>

namespace turn {

namespace {

constexpr std::array kKeywords = {
    "struct", "let",    "infer", "confidence", "context", "call",  "remember", "recall",  "spawn",
    "spawn_link", "spawn_each", "send", "receive", "self",  "grant",  "identity", "suspend", "use",
    "schema", "turn",   "if",    "else",       "try",     "catch", "throw",    "true",    "false",
    "null",   "and",    "or",    "not",        "return",  "echo",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool newline = false;
    while (true) {
      newline = skip_trivia() || newline;
      Token tok;
      tok.line = line_;
      tok.column = column_;
      tok.offset = pos_;
      tok.newline_before = newline || out.empty();
      newline = false;
      if (at_end()) {
        tok.kind = TokenKind::End;
        out.push_back(std::move(tok));
        return out;
      }
      lex_one(tok);
      tok.lexeme = std::string(src_.substr(tok.offset, pos_ - tok.offset));
      if (tok.kind != TokenKind::String) tok.text = tok.lexeme;
      out.push_back(std::move(tok));
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

  void advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++column_;
    }
  }

  // Returns true if a newline was crossed.
  bool skip_trivia() {
    bool newline = false;
    while (!at_end()) {
      char c = peek();
      if (c == '\n') {
        newline = true;
        advance();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
    return newline;
  }

  void lex_one(Token& tok) {
    char c = peek();
    if (ident_start(c)) {
      while (!at_end() && ident_char(peek())) advance();
      std::string_view word = src_.substr(tok.offset, pos_ - tok.offset);
      tok.kind = is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier;
      return;
    }
    if (digit(c)) {
      lex_number(tok);
      return;
    }
    if (c == '"') {
      lex_string(tok);
      return;
    }
    // two-character tokens first
    static constexpr std::array<std::string_view, 5> kTwo = {"::", "==", "!=", "<=", ">="};
    for (auto two : kTwo) {
      if (c == two[0] && peek(1) == two[1]) {
        advance();
        advance();
        tok.kind = two == "::" ? TokenKind::Punct : TokenKind::Operator;
        return;
      }
    }
    switch (c) {
      case '(': case ')': case '{': case '}': case '[': case ']': case ',': case ':': case ';': case '.':
        advance();
        tok.kind = TokenKind::Punct;
        return;
      case '=': case '+': case '-': case '*': case '/': case '<': case '>':
        advance();
        tok.kind = TokenKind::Operator;
        return;
      default:
        break;
    }
    std::string shown = (static_cast<unsigned char>(c) < 0x80 && std::isprint(static_cast<unsigned char>(c)))
                            ? std::string("'") + c + "'"
                            : "byte 0x" + hex(static_cast<unsigned char>(c));
    throw LexError({line_, column_}, "illegal character " + shown);
  }

  static std::string hex(unsigned char c) {
    static constexpr char digits[] = "0123456789abcdef";
    return {digits[c >> 4], digits[c & 15]};
  }

  void lex_number(Token& tok) {
    tok.kind = TokenKind::Number;
    while (digit(peek())) advance();
    if (peek() == '.' && digit(peek(1))) {
      advance();
      while (digit(peek())) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      while (digit(peek())) advance();
    }
  }

  void lex_string(Token& tok) {
    tok.kind = TokenKind::String;
    SourceLoc start{line_, column_};
    advance();  // opening quote
    std::string text;
    while (true) {
      if (at_end() || peek() == '\n') throw LexError(start, "unterminated string literal");
      char c = peek();
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        SourceLoc esc{line_, column_};
        advance();
        if (at_end()) throw LexError(start, "unterminated string literal");
        char e = peek();
        switch (e) {
          case 'n': text += '\n'; break;
          case 't': text += '\t'; break;
          case '"': text += '"'; break;
          case '\\': text += '\\'; break;
          default: throw LexError(esc, std::string("unknown escape sequence \\") + e);
        }
        advance();
        continue;
      }
      text += c;
      advance();
    }
    tok.text = std::move(text);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

}  // namespace

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Number: return "number";
    case TokenKind::String: return "string";
    case TokenKind::Punct: return "punctuation";
    case TokenKind::Operator: return "operator";
    case TokenKind::End: return "end of input";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  for (auto kw : kKeywords)
    if (word == kw) return true;
  return false;
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace turn
