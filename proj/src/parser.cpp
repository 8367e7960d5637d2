#include "turn/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace turn {

namespace {

using namespace ast;

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

  Program program() {
    SourceLoc loc = here();
    NodeList stmts;
    while (!peek().is(TokenKind::End, "")) {
      if (peek().kind == TokenKind::End) break;
      if (match_punct(";")) continue;
      stmts.push_back(statement());
    }
    return Program{make(loc, Block{std::move(stmts)})};
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  SourceLoc here() const { return {peek().line, peek().column}; }
  bool at_end() const { return peek().kind == TokenKind::End; }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::End) return "end of input";
    return std::string(token_kind_name(t.kind)) + " '" + t.lexeme + "'";
  }

  [[noreturn]] void fail(std::string expected) const {
    throw ParseError(here(), std::move(expected), describe(peek()));
  }

  bool match_punct(std::string_view p) {
    if (peek().is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool match_keyword(std::string_view k) {
    if (peek().is_keyword(k)) {
      next();
      return true;
    }
    return false;
  }
  void expect_punct(std::string_view p) {
    if (!match_punct(p)) fail("'" + std::string(p) + "'");
  }
  void expect_keyword(std::string_view k) {
    if (!match_keyword(k)) fail("'" + std::string(k) + "'");
  }
  std::string expect_identifier(std::string_view what = "identifier") {
    if (peek().kind != TokenKind::Identifier) fail(std::string(what));
    return next().lexeme;
  }
  // Field and map-key positions accept keywords too (`err.error`, `m.type`).
  std::string expect_name(std::string_view what) {
    if (peek().kind != TokenKind::Identifier && peek().kind != TokenKind::Keyword) fail(std::string(what));
    return next().lexeme;
  }
  std::string expect_string(std::string_view what) {
    if (peek().kind != TokenKind::String) fail(std::string(what));
    return next().text;
  }

  // ---- statements ----------------------------------------------------------

  NodePtr statement() {
    NodePtr stmt;
    bool ends_with_block = false;
    const Token& t = peek();
    if (t.is_keyword("struct")) {
      stmt = struct_decl();
      ends_with_block = true;
    } else if (t.is_keyword("let")) {
      stmt = let_stmt();
    } else if (t.is_keyword("turn") && peek(1).kind == TokenKind::Identifier) {
      stmt = turn_decl();
      ends_with_block = true;
    } else if (t.is_keyword("if")) {
      stmt = if_stmt();
      ends_with_block = true;
    } else if (t.is_keyword("try")) {
      stmt = try_stmt();
      ends_with_block = true;
    } else if (t.is_keyword("throw")) {
      SourceLoc loc = here();
      next();
      stmt = make(loc, Throw{expression()});
    } else if (t.is_keyword("return")) {
      SourceLoc loc = here();
      next();
      NodePtr value;
      if (!at_end() && !peek().is_punct("}") && !peek().is_punct(";") && !peek().newline_before) value = expression();
      stmt = make(loc, Return{std::move(value)});
    } else if (t.is_keyword("echo")) {
      SourceLoc loc = here();
      next();
      stmt = make(loc, Echo{expression()});
    } else if (t.is_keyword("send")) {
      SourceLoc loc = here();
      next();
      NodePtr pid = expression();
      expect_punct(",");
      stmt = make(loc, Send{std::move(pid), expression()});
    } else if (t.kind == TokenKind::Identifier && peek(1).is_op("=")) {
      SourceLoc loc = here();
      std::string name = next().lexeme;
      next();
      stmt = make(loc, Assign{std::move(name), expression(), {}});
    } else {
      stmt = expression();
    }
    terminate(ends_with_block);
    return stmt;
  }

  void terminate(bool ends_with_block) {
    if (match_punct(";")) return;
    if (at_end() || peek().is_punct("}") || peek().newline_before || ends_with_block) return;
    fail("end of statement");
  }

  NodePtr block() {
    SourceLoc loc = here();
    expect_punct("{");
    NodeList stmts;
    while (!peek().is_punct("}")) {
      if (at_end()) fail("'}'");
      if (match_punct(";")) continue;
      stmts.push_back(statement());
    }
    next();
    return make(loc, Block{std::move(stmts)});
  }

  NodePtr struct_decl() {
    SourceLoc loc = here();
    expect_keyword("struct");
    std::string name = expect_identifier("struct name");
    expect_punct("{");
    std::vector<FieldDecl> fields;
    while (!peek().is_punct("}")) {
      std::string field = expect_name("field name");
      expect_punct(":");
      std::string type = expect_identifier("type name");
      fields.push_back({std::move(field), std::move(type)});
      if (!match_punct(",") && !match_punct(";") && !peek().is_punct("}")) {
        if (!peek().newline_before) fail("',' or '}'");
      }
    }
    next();
    return make(loc, StructDecl{std::move(name), std::move(fields)});
  }

  NodePtr let_stmt() {
    SourceLoc loc = here();
    expect_keyword("let");
    std::string name = expect_identifier("variable name");
    if (!peek().is_op("=")) fail("'='");
    next();
    return make(loc, Let{std::move(name), expression(), 0});
  }

  std::vector<Param> params() {
    expect_punct("(");
    std::vector<Param> out;
    while (!peek().is_punct(")")) {
      Param p;
      p.name = expect_identifier("parameter name");
      if (match_punct(":")) p.type = expect_identifier("type name");
      out.push_back(std::move(p));
      if (!match_punct(",")) break;
    }
    expect_punct(")");
    return out;
  }

  NodePtr turn_decl() {
    SourceLoc loc = here();
    expect_keyword("turn");
    std::string name = expect_identifier("turn name");
    auto ps = params();
    auto body = block();
    return make(loc, TurnDecl{std::move(name), std::move(ps), std::move(body), {}, false, 0});
  }

  NodePtr turn_lit() {
    SourceLoc loc = here();
    expect_keyword("turn");
    auto ps = params();
    auto body = block();
    return make(loc, TurnLit{std::move(ps), std::move(body), {}});
  }

  NodePtr if_stmt() {
    SourceLoc loc = here();
    expect_keyword("if");
    NodePtr cond = expression(/*allow_struct=*/false);
    NodePtr then_block = block();
    NodePtr else_branch;
    if (match_keyword("else")) {
      else_branch = peek().is_keyword("if") ? if_stmt() : block();
    }
    return make(loc, If{std::move(cond), std::move(then_block), std::move(else_branch)});
  }

  NodePtr try_stmt() {
    SourceLoc loc = here();
    expect_keyword("try");
    NodePtr body = block();
    expect_keyword("catch");
    std::string err;
    if (match_punct("(")) {
      err = expect_identifier("catch variable");
      expect_punct(")");
    } else {
      err = expect_identifier("catch variable");
    }
    NodePtr handler = block();
    return make(loc, TryCatch{std::move(body), std::move(err), std::move(handler), 0});
  }

  // ---- expressions ---------------------------------------------------------

  NodePtr expression(bool allow_struct = true) {
    bool saved = allow_struct_;
    allow_struct_ = allow_struct;
    NodePtr e = or_expr();
    allow_struct_ = saved;
    return e;
  }

  // Parenthesised contexts always allow struct literals again.
  NodePtr nested_expression() { return expression(true); }

  NodePtr binary_level(NodePtr (Parser::*operand)(), std::initializer_list<std::pair<std::string_view, BinaryOp>> ops,
                       bool chain) {
    NodePtr lhs = (this->*operand)();
    while (true) {
      const Token& t = peek();
      const std::pair<std::string_view, BinaryOp>* hit = nullptr;
      for (const auto& entry : ops) {
        bool kw = entry.first == "and" || entry.first == "or";
        if ((kw && t.is_keyword(entry.first)) || (!kw && t.is_op(entry.first))) hit = &entry;
      }
      if (!hit) return lhs;
      SourceLoc loc = here();
      next();
      NodePtr rhs = (this->*operand)();
      lhs = make(loc, Binary{hit->second, std::move(lhs), std::move(rhs)});
      if (!chain) return lhs;
    }
  }

  NodePtr or_expr() { return binary_level(&Parser::and_expr, {{"or", BinaryOp::Or}}, true); }
  NodePtr and_expr() { return binary_level(&Parser::cmp_expr, {{"and", BinaryOp::And}}, true); }
  NodePtr cmp_expr() {
    return binary_level(&Parser::add_expr,
                        {{"<", BinaryOp::Lt},
                         {"<=", BinaryOp::Le},
                         {">", BinaryOp::Gt},
                         {">=", BinaryOp::Ge},
                         {"==", BinaryOp::Eq},
                         {"!=", BinaryOp::Ne}},
                        false);
  }
  NodePtr add_expr() {
    return binary_level(&Parser::mul_expr, {{"+", BinaryOp::Add}, {"-", BinaryOp::Sub}}, true);
  }
  NodePtr mul_expr() {
    return binary_level(&Parser::unary_expr, {{"*", BinaryOp::Mul}, {"/", BinaryOp::Div}}, true);
  }

  NodePtr unary_expr() {
    SourceLoc loc = here();
    if (peek().is_op("-")) {
      next();
      return make(loc, Unary{UnaryOp::Neg, unary_expr()});
    }
    if (match_keyword("not")) return make(loc, Unary{UnaryOp::Not, unary_expr()});
    if (match_keyword("confidence")) return make(loc, Confidence{unary_expr()});
    return postfix_expr();
  }

  NodePtr postfix_expr() {
    NodePtr e = primary();
    while (true) {
      SourceLoc loc = here();
      if (peek().is_punct(".")) {
        next();
        std::string field = expect_name("field name");
        e = make(loc, FieldAccess{std::move(e), std::move(field)});
      } else if (peek().is_punct("(") && !peek().newline_before) {
        auto args = call_args();
        e = make(loc, Call{std::move(e), std::move(args)});
      } else if (peek().is_punct("[") && !peek().newline_before) {
        next();
        NodePtr idx = nested_expression();
        expect_punct("]");
        e = make(loc, Index{std::move(e), std::move(idx)});
      } else {
        return e;
      }
    }
  }

  NodeList call_args() {
    expect_punct("(");
    NodeList args;
    while (!peek().is_punct(")")) {
      args.push_back(nested_expression());
      if (!match_punct(",")) break;
    }
    expect_punct(")");
    return args;
  }

  bool struct_literal_ahead() const {
    if (!allow_struct_) return false;
    const Token& name = peek();
    if (name.kind != TokenKind::Identifier || !std::isupper(static_cast<unsigned char>(name.lexeme[0]))) return false;
    if (!peek(1).is_punct("{")) return false;
    if (peek(2).is_punct("}")) return true;
    return (peek(2).kind == TokenKind::Identifier || peek(2).kind == TokenKind::Keyword) && peek(3).is_punct(":");
  }

  NodePtr primary() {
    SourceLoc loc = here();
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number: {
        next();
        return make(loc, Literal{std::strtod(t.lexeme.c_str(), nullptr)});
      }
      case TokenKind::String: {
        next();
        return make(loc, Literal{t.text});
      }
      case TokenKind::Identifier: {
        if (struct_literal_ahead()) return struct_lit();
        next();
        return make(loc, Identifier{t.lexeme, {}});
      }
      case TokenKind::Punct: {
        if (t.is_punct("(")) {
          next();
          NodePtr e = nested_expression();
          expect_punct(")");
          return e;
        }
        if (t.is_punct("[")) return list_lit();
        if (t.is_punct("{")) return map_lit();
        break;
      }
      case TokenKind::Keyword: return keyword_expr();
      default: break;
    }
    fail("expression");
  }

  NodePtr keyword_expr() {
    SourceLoc loc = here();
    const Token& t = peek();
    if (match_keyword("true")) return make(loc, Literal{true});
    if (match_keyword("false")) return make(loc, Literal{false});
    if (match_keyword("null")) return make(loc, Literal{});
    if (match_keyword("self")) return make(loc, SelfPid{});
    if (match_keyword("receive")) return make(loc, Receive{});
    if (match_keyword("suspend")) return make(loc, Suspend{});
    if (t.is_keyword("turn")) return turn_lit();
    if (match_keyword("infer")) {
      std::string type = expect_identifier("struct name after 'infer'");
      expect_punct("{");
      NodePtr prompt = nested_expression();
      match_punct(";");
      expect_punct("}");
      return make(loc, Infer{std::move(type), std::move(prompt), 0});
    }
    if (match_keyword("context")) {
      expect_punct(".");
      std::string method = expect_name("'append' or 'system'");
      expect_punct("(");
      NodePtr arg = nested_expression();
      expect_punct(")");
      if (method == "append") return make(loc, ContextAppend{std::move(arg)});
      if (method == "system") return make(loc, ContextSystem{std::move(arg)});
      throw ParseError(loc, "'append' or 'system'", "'" + method + "'");
    }
    if (match_keyword("remember")) {
      expect_punct("(");
      NodePtr key = nested_expression();
      expect_punct(",");
      NodePtr value = nested_expression();
      expect_punct(")");
      return make(loc, Remember{std::move(key), std::move(value)});
    }
    if (match_keyword("recall")) {
      expect_punct("(");
      NodePtr key = nested_expression();
      expect_punct(")");
      return make(loc, Recall{std::move(key)});
    }
    if (match_keyword("call")) {
      expect_punct("(");
      std::string tool = expect_string("tool name string");
      NodeList args;
      while (match_punct(",")) args.push_back(nested_expression());
      expect_punct(")");
      return make(loc, CallTool{std::move(tool), std::move(args)});
    }
    if (t.is_keyword("spawn") || t.is_keyword("spawn_link")) {
      bool linked = t.is_keyword("spawn_link");
      next();
      NodePtr body;
      if (peek().is_keyword("turn")) {
        body = turn_lit();
      } else if (peek().is_punct("{")) {
        SourceLoc bl = here();
        body = make(bl, TurnLit{{}, block(), {}});
      } else {
        fail("turn literal or block after spawn");
      }
      return make(loc, Spawn{linked, std::move(body)});
    }
    if (match_keyword("spawn_each")) {
      expect_punct("(");
      NodePtr list = nested_expression();
      expect_punct(",");
      NodePtr body = nested_expression();
      expect_punct(")");
      return make(loc, SpawnEach{std::move(list), std::move(body)});
    }
    if (match_keyword("grant")) {
      expect_keyword("identity");
      expect_punct("::");
      std::string cls = expect_identifier("capability class");
      expect_punct("(");
      std::string provider = expect_string("provider name string");
      expect_punct(")");
      return make(loc, GrantIdentity{std::move(cls), std::move(provider)});
    }
    if (match_keyword("use")) {
      expect_keyword("schema");
      expect_punct("::");
      std::string protocol = expect_identifier("schema protocol");
      expect_punct("(");
      std::string url = expect_string("schema URL string");
      expect_punct(")");
      return make(loc, UseSchema{std::move(protocol), std::move(url)});
    }
    fail("expression");
  }

  NodePtr list_lit() {
    SourceLoc loc = here();
    expect_punct("[");
    NodeList items;
    while (!peek().is_punct("]")) {
      items.push_back(nested_expression());
      if (!match_punct(",")) break;
    }
    expect_punct("]");
    return make(loc, ListLit{std::move(items)});
  }

  NodePtr map_lit() {
    SourceLoc loc = here();
    expect_punct("{");
    std::vector<std::pair<std::string, NodePtr>> entries;
    while (!peek().is_punct("}")) {
      std::string key = peek().kind == TokenKind::String ? next().text : expect_name("map key");
      expect_punct(":");
      entries.emplace_back(std::move(key), nested_expression());
      if (!match_punct(",")) break;
    }
    expect_punct("}");
    return make(loc, MapLit{std::move(entries)});
  }

  NodePtr struct_lit() {
    SourceLoc loc = here();
    std::string type = next().lexeme;
    expect_punct("{");
    std::vector<std::pair<std::string, NodePtr>> inits;
    while (!peek().is_punct("}")) {
      std::string field = expect_name("field name");
      expect_punct(":");
      inits.emplace_back(std::move(field), nested_expression());
      if (!match_punct(",")) break;
    }
    expect_punct("}");
    return make(loc, StructLit{std::move(type), std::move(inits), 0});
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
  bool allow_struct_ = true;
};

}  // namespace

ast::Program parse(const std::vector<Token>& tokens) {
  if (tokens.empty() || tokens.back().kind != TokenKind::End)
    throw ParseError({1, 1}, "token list terminated by end of input", "unterminated token list");
  return Parser(tokens).program();
}

ast::Program parse_source(std::string_view source) { return parse(tokenize(source)); }

}  // namespace turn
