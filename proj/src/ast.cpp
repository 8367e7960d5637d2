#include "turn/ast.hpp"

#include <json.hpp>

#include "turn/value.hpp"

namespace turn::ast {

std::string_view op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
  }
  return "?";
}

std::string_view op_symbol(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "not"; }

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::string_view kNames[] = {
    "Block",     "StructDecl",  "Let",           "Assign",        "TurnDecl", "TurnLit",  "If",
    "TryCatch",  "Throw",       "Return",        "Echo",          "Send",     "Infer",    "Confidence",
    "ContextAppend", "ContextSystem", "CallTool", "Call",         "Remember", "Recall",   "Spawn",
    "SpawnEach", "Receive",     "SelfPid",       "GrantIdentity", "Suspend",  "UseSchema", "FieldAccess",
    "Index",     "Binary",      "Unary",         "Literal",       "ListLit",  "MapLit",   "StructLit",
    "Identifier",
};
static_assert(std::size(kNames) == std::variant_size_v<NodeVariant>);

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

void dump_into(std::string& out, const Node* n);

void dump_list(std::string& out, const NodeList& xs) {
  out += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    dump_into(out, xs[i].get());
  }
  out += ']';
}

void dump_params(std::string& out, const std::vector<Param>& ps) {
  out += '[';
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ' ';
    out += ps[i].name;
    if (!ps[i].type.empty()) out += ":" + ps[i].type;
  }
  out += ']';
}

void dump_into(std::string& out, const Node* n) {
  if (!n) {
    out += "nil";
    return;
  }
  out += '(';
  out += node_name(*n);
  auto sp = [&] { out += ' '; };
  auto child = [&](const NodePtr& c) {
    sp();
    dump_into(out, c.get());
  };
  std::visit(overloaded{
                 [&](const Block& b) { sp(); dump_list(out, b.stmts); },
                 [&](const StructDecl& s) {
                   out += " " + s.name + " [";
                   for (std::size_t i = 0; i < s.fields.size(); ++i) {
                     if (i) out += ' ';
                     out += s.fields[i].name + ":" + s.fields[i].type;
                   }
                   out += ']';
                 },
                 [&](const Let& l) { out += " " + l.name; child(l.value); },
                 [&](const Assign& a) { out += " " + a.name; child(a.value); },
                 [&](const TurnDecl& t) { out += " " + t.name + " "; dump_params(out, t.params); child(t.body); },
                 [&](const TurnLit& t) { sp(); dump_params(out, t.params); child(t.body); },
                 [&](const If& i) { child(i.cond); child(i.then_block); child(i.else_branch); },
                 [&](const TryCatch& t) { child(t.body); out += " " + t.err_name; child(t.handler); },
                 [&](const Throw& t) { child(t.value); },
                 [&](const Return& r) { child(r.value); },
                 [&](const Echo& e) { child(e.value); },
                 [&](const Send& s) { child(s.pid); child(s.value); },
                 [&](const Infer& i) { out += " " + i.type_name; child(i.prompt); },
                 [&](const Confidence& c) { child(c.value); },
                 [&](const ContextAppend& c) { child(c.value); },
                 [&](const ContextSystem& c) { child(c.value); },
                 [&](const CallTool& c) { out += " " + quote(c.tool) + " "; dump_list(out, c.args); },
                 [&](const Call& c) { child(c.callee); sp(); dump_list(out, c.args); },
                 [&](const Remember& r) { child(r.key); child(r.value); },
                 [&](const Recall& r) { child(r.key); },
                 [&](const Spawn& s) { out += s.linked ? " linked" : " plain"; child(s.body); },
                 [&](const SpawnEach& s) { child(s.list); child(s.body); },
                 [&](const Receive&) {},
                 [&](const SelfPid&) {},
                 [&](const GrantIdentity& g) { out += " " + g.capability_class + " " + quote(g.provider); },
                 [&](const Suspend&) {},
                 [&](const UseSchema& u) { out += " " + u.protocol + " " + quote(u.url); },
                 [&](const FieldAccess& f) { child(f.object); out += " " + f.field; },
                 [&](const Index& i) { child(i.object); child(i.index); },
                 [&](const Binary& b) { out += " "; out += op_symbol(b.op); child(b.lhs); child(b.rhs); },
                 [&](const Unary& u) { out += " "; out += op_symbol(u.op); child(u.operand); },
                 [&](const Literal& l) {
                   std::visit(overloaded{
                                  [&](std::monostate) { out += " null"; },
                                  [&](double d) { out += " " + format_number(d); },
                                  [&](const std::string& s) { out += " " + quote(s); },
                                  [&](bool b) { out += b ? " true" : " false"; },
                              },
                              l.value);
                 },
                 [&](const ListLit& l) { sp(); dump_list(out, l.items); },
                 [&](const MapLit& m) {
                   for (const auto& [k, v] : m.entries) {
                     out += " " + quote(k);
                     child(v);
                   }
                 },
                 [&](const StructLit& s) {
                   out += " " + s.type_name;
                   for (const auto& [k, v] : s.inits) {
                     out += " " + k;
                     child(v);
                   }
                 },
                 [&](const Identifier& i) { out += " " + i.name; },
             },
             n->v);
  out += ')';
}

}  // namespace

void for_each_child(Node& n, const std::function<void(NodePtr&)>& f) {
  auto one = [&](NodePtr& c) {
    if (c) f(c);
  };
  auto many = [&](NodeList& cs) {
    for (auto& c : cs) one(c);
  };
  std::visit(overloaded{
                 [&](Block& b) { many(b.stmts); },
                 [&](StructDecl&) {},
                 [&](Let& l) { one(l.value); },
                 [&](Assign& a) { one(a.value); },
                 [&](TurnDecl& t) { one(t.body); },
                 [&](TurnLit& t) { one(t.body); },
                 [&](If& i) { one(i.cond); one(i.then_block); one(i.else_branch); },
                 [&](TryCatch& t) { one(t.body); one(t.handler); },
                 [&](Throw& t) { one(t.value); },
                 [&](Return& r) { one(r.value); },
                 [&](Echo& e) { one(e.value); },
                 [&](Send& s) { one(s.pid); one(s.value); },
                 [&](Infer& i) { one(i.prompt); },
                 [&](Confidence& c) { one(c.value); },
                 [&](ContextAppend& c) { one(c.value); },
                 [&](ContextSystem& c) { one(c.value); },
                 [&](CallTool& c) { many(c.args); },
                 [&](Call& c) { one(c.callee); many(c.args); },
                 [&](Remember& r) { one(r.key); one(r.value); },
                 [&](Recall& r) { one(r.key); },
                 [&](Spawn& s) { one(s.body); },
                 [&](SpawnEach& s) { one(s.list); one(s.body); },
                 [&](Receive&) {},
                 [&](SelfPid&) {},
                 [&](GrantIdentity&) {},
                 [&](Suspend&) {},
                 [&](UseSchema&) {},
                 [&](FieldAccess& fa) { one(fa.object); },
                 [&](Index& i) { one(i.object); one(i.index); },
                 [&](Binary& b) { one(b.lhs); one(b.rhs); },
                 [&](Unary& u) { one(u.operand); },
                 [&](Literal&) {},
                 [&](ListLit& l) { many(l.items); },
                 [&](MapLit& m) {
                   for (auto& e : m.entries) one(e.second);
                 },
                 [&](StructLit& s) {
                   for (auto& e : s.inits) one(e.second);
                 },
                 [&](Identifier&) {},
             },
             n.v);
}

std::string_view node_name(const Node& n) { return kNames[n.v.index()]; }

std::string dump(const Node& n) {
  std::string out;
  dump_into(out, &n);
  return out;
}

}  // namespace turn::ast
