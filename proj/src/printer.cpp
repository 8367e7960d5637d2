#include <json.hpp>

#include "turn/parser.hpp"
#include "turn/value.hpp"

namespace turn {

namespace {

using namespace ast;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

class Printer {
 public:
  std::string run(const Node& n) {
    if (const auto* b = n.as<Block>()) {
      for (const auto& s : b->stmts) stmt(*s);
    } else {
      stmt(n);
    }
    return std::move(out_);
  }

 private:
  void indent() { out_.append(depth_ * 2, ' '); }

  void stmt(const Node& n) {
    indent();
    stmt_body(n);
    out_ += '\n';
  }

  void block(const Node& n) {
    out_ += "{\n";
    ++depth_;
    for (const auto& s : n.as<Block>()->stmts) stmt(*s);
    --depth_;
    indent();
    out_ += '}';
  }

  void params(const std::vector<Param>& ps) {
    out_ += '(';
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (i) out_ += ", ";
      out_ += ps[i].name;
      if (!ps[i].type.empty()) out_ += ": " + ps[i].type;
    }
    out_ += ')';
  }

  void if_chain(const If& i) {
    out_ += "if ";
    expr(*i.cond);
    out_ += ' ';
    block(*i.then_block);
    if (i.else_branch) {
      out_ += " else ";
      if (const auto* nested = i.else_branch->as<If>()) {
        if_chain(*nested);
      } else {
        block(*i.else_branch);
      }
    }
  }

  void stmt_body(const Node& n) {
    std::visit(overloaded{
                   [&](const StructDecl& s) {
                     out_ += "struct " + s.name + " {";
                     for (std::size_t i = 0; i < s.fields.size(); ++i) {
                       out_ += i ? ", " : " ";
                       out_ += s.fields[i].name + ": " + s.fields[i].type;
                     }
                     out_ += s.fields.empty() ? "}" : " }";
                   },
                   [&](const Let& l) {
                     out_ += "let " + l.name + " = ";
                     expr(*l.value);
                   },
                   [&](const Assign& a) {
                     out_ += a.name + " = ";
                     expr(*a.value);
                   },
                   [&](const TurnDecl& t) {
                     out_ += "turn " + t.name;
                     params(t.params);
                     out_ += ' ';
                     block(*t.body);
                   },
                   [&](const If& i) { if_chain(i); },
                   [&](const TryCatch& t) {
                     out_ += "try ";
                     block(*t.body);
                     out_ += " catch (" + t.err_name + ") ";
                     block(*t.handler);
                   },
                   [&](const Throw& t) {
                     out_ += "throw ";
                     expr(*t.value);
                   },
                   [&](const Return& r) {
                     out_ += "return";
                     if (r.value) {
                       out_ += ' ';
                       expr(*r.value);
                     }
                   },
                   [&](const Echo& e) {
                     out_ += "echo ";
                     expr(*e.value);
                   },
                   [&](const Send& s) {
                     out_ += "send ";
                     expr(*s.pid);
                     out_ += ", ";
                     expr(*s.value);
                   },
                   [&](const Block&) { block(n); },
                   [&](const auto&) { expr(n); },
               },
               n.v);
  }

  void args(const NodeList& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out_ += ", ";
      expr(*xs[i]);
    }
  }

  void str(const std::string& s) { out_ += nlohmann::json(s).dump(); }

  void expr(const Node& n) {
    std::visit(overloaded{
                   [&](const TurnLit& t) {
                     out_ += "turn";
                     params(t.params);
                     out_ += ' ';
                     block(*t.body);
                   },
                   [&](const Infer& i) {
                     out_ += "infer " + i.type_name + " { ";
                     expr(*i.prompt);
                     out_ += " }";
                   },
                   [&](const Confidence& c) {
                     out_ += "(confidence ";
                     expr(*c.value);
                     out_ += ')';
                   },
                   [&](const ContextAppend& c) {
                     out_ += "context.append(";
                     expr(*c.value);
                     out_ += ')';
                   },
                   [&](const ContextSystem& c) {
                     out_ += "context.system(";
                     expr(*c.value);
                     out_ += ')';
                   },
                   [&](const CallTool& c) {
                     out_ += "call(";
                     str(c.tool);
                     for (const auto& a : c.args) {
                       out_ += ", ";
                       expr(*a);
                     }
                     out_ += ')';
                   },
                   [&](const Call& c) {
                     expr(*c.callee);
                     out_ += '(';
                     args(c.args);
                     out_ += ')';
                   },
                   [&](const Remember& r) {
                     out_ += "remember(";
                     expr(*r.key);
                     out_ += ", ";
                     expr(*r.value);
                     out_ += ')';
                   },
                   [&](const Recall& r) {
                     out_ += "recall(";
                     expr(*r.key);
                     out_ += ')';
                   },
                   [&](const Spawn& s) {
                     out_ += s.linked ? "spawn_link " : "spawn ";
                     expr(*s.body);
                   },
                   [&](const SpawnEach& s) {
                     out_ += "spawn_each(";
                     expr(*s.list);
                     out_ += ", ";
                     expr(*s.body);
                     out_ += ')';
                   },
                   [&](const Receive&) { out_ += "receive"; },
                   [&](const SelfPid&) { out_ += "self"; },
                   [&](const GrantIdentity& g) {
                     out_ += "grant identity::" + g.capability_class + "(";
                     str(g.provider);
                     out_ += ')';
                   },
                   [&](const Suspend&) { out_ += "suspend"; },
                   [&](const UseSchema& u) {
                     out_ += "use schema::" + u.protocol + "(";
                     str(u.url);
                     out_ += ')';
                   },
                   [&](const FieldAccess& f) {
                     expr(*f.object);
                     out_ += "." + f.field;
                   },
                   [&](const Index& i) {
                     expr(*i.object);
                     out_ += '[';
                     expr(*i.index);
                     out_ += ']';
                   },
                   [&](const Binary& b) {
                     out_ += '(';
                     expr(*b.lhs);
                     out_ += ' ';
                     out_ += op_symbol(b.op);
                     out_ += ' ';
                     expr(*b.rhs);
                     out_ += ')';
                   },
                   [&](const Unary& u) {
                     out_ += u.op == UnaryOp::Neg ? "(-" : "(not ";
                     expr(*u.operand);
                     out_ += ')';
                   },
                   [&](const Literal& l) {
                     std::visit(overloaded{
                                    [&](std::monostate) { out_ += "null"; },
                                    [&](double d) { out_ += format_number(d); },
                                    [&](const std::string& s) { str(s); },
                                    [&](bool b) { out_ += b ? "true" : "false"; },
                                },
                                l.value);
                   },
                   [&](const ListLit& l) {
                     out_ += '[';
                     args(l.items);
                     out_ += ']';
                   },
                   [&](const MapLit& m) {
                     out_ += '{';
                     for (std::size_t i = 0; i < m.entries.size(); ++i) {
                       if (i) out_ += ", ";
                       str(m.entries[i].first);
                       out_ += ": ";
                       expr(*m.entries[i].second);
                     }
                     out_ += '}';
                   },
                   [&](const StructLit& s) {
                     out_ += "(" + s.type_name + " {";
                     for (std::size_t i = 0; i < s.inits.size(); ++i) {
                       out_ += i ? ", " : " ";
                       out_ += s.inits[i].first + ": ";
                       expr(*s.inits[i].second);
                     }
                     out_ += s.inits.empty() ? "})" : " })";
                   },
                   [&](const Identifier& i) { out_ += i.name; },
                   [&](const auto&) {
                     // statement nodes never appear in expression position
                     out_ += "null";
                   },
               },
               n.v);
  }

  std::string out_;
  std::size_t depth_ = 0;
};

}  // namespace

std::string print_source(const ast::Node& node) { return Printer().run(node); }

}  // namespace turn
