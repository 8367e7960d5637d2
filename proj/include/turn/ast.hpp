#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "turn/error.hpp"

namespace turn::ast {

struct Node;
using NodePtr = std::unique_ptr<Node>;
using NodeList = std::vector<NodePtr>;

// Resolution of a name, filled in by analysis.
struct VarRef {
  enum class Kind { Unresolved, Local, Function, Self };
  Kind kind = Kind::Unresolved;
  std::uint32_t index = 0;  // slot for Local, function index for Function
};

// Per-function layout, filled in by analysis. Slots 0..arity-1 hold the
// arguments; captured bindings are copied into `capture_slots` on entry.
struct FunctionInfo {
  std::uint32_t index = 0;
  std::uint32_t slot_count = 0;
  std::vector<std::uint32_t> capture_slots;  // slot inside this function
  std::vector<VarRef> capture_sources;       // where the creator reads each capture
};

struct FieldDecl {
  std::string name;
  std::string type;
  bool operator==(const FieldDecl&) const = default;
};

struct Param {
  std::string name;
  std::string type;  // optional annotation, parsed but not enforced
  bool operator==(const Param&) const = default;
};

enum class BinaryOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnaryOp { Neg, Not };

std::string_view op_symbol(BinaryOp op);
std::string_view op_symbol(UnaryOp op);

struct Block { NodeList stmts; };
struct StructDecl { std::string name; std::vector<FieldDecl> fields; };
struct Let { std::string name; NodePtr value; std::uint32_t slot = 0; };
struct Assign { std::string name; NodePtr value; VarRef target; };
struct TurnDecl { std::string name; std::vector<Param> params; NodePtr body; FunctionInfo info; bool hoisted = false; std::uint32_t slot = 0; };
struct TurnLit { std::vector<Param> params; NodePtr body; FunctionInfo info; };
struct If { NodePtr cond; NodePtr then_block; NodePtr else_branch; };
struct TryCatch { NodePtr body; std::string err_name; NodePtr handler; std::uint32_t err_slot = 0; };
struct Throw { NodePtr value; };
struct Return { NodePtr value; };  // value may be null
struct Echo { NodePtr value; };
struct Send { NodePtr pid; NodePtr value; };
struct Infer { std::string type_name; NodePtr prompt; std::uint32_t struct_index = 0; };
struct Confidence { NodePtr value; };
struct ContextAppend { NodePtr value; };
struct ContextSystem { NodePtr value; };
struct CallTool { std::string tool; NodeList args; };
struct Call { NodePtr callee; NodeList args; };
struct Remember { NodePtr key; NodePtr value; };
struct Recall { NodePtr key; };
struct Spawn { bool linked = false; NodePtr body; };
struct SpawnEach { NodePtr list; NodePtr body; };
struct Receive {};
struct SelfPid {};
struct GrantIdentity { std::string capability_class; std::string provider; };
struct Suspend {};
struct UseSchema { std::string protocol; std::string url; };
struct FieldAccess { NodePtr object; std::string field; };
struct Index { NodePtr object; NodePtr index; };
struct Binary { BinaryOp op; NodePtr lhs; NodePtr rhs; };
struct Unary { UnaryOp op; NodePtr operand; };
struct Literal { std::variant<std::monostate, double, std::string, bool> value; };
struct ListLit { NodeList items; };
struct MapLit { std::vector<std::pair<std::string, NodePtr>> entries; };
struct StructLit { std::string type_name; std::vector<std::pair<std::string, NodePtr>> inits; std::uint32_t struct_index = 0; };
struct Identifier { std::string name; VarRef ref; };

using NodeVariant =
    std::variant<Block, StructDecl, Let, Assign, TurnDecl, TurnLit, If, TryCatch, Throw, Return, Echo, Send, Infer,
                 Confidence, ContextAppend, ContextSystem, CallTool, Call, Remember, Recall, Spawn, SpawnEach, Receive,
                 SelfPid, GrantIdentity, Suspend, UseSchema, FieldAccess, Index, Binary, Unary, Literal, ListLit,
                 MapLit, StructLit, Identifier>;

struct Node {
  SourceLoc loc;
  NodeVariant v;

  template <typename T>
  T* as() { return std::get_if<T>(&v); }
  template <typename T>
  const T* as() const { return std::get_if<T>(&v); }
  template <typename T>
  bool is() const { return std::holds_alternative<T>(v); }
};

template <typename T>
NodePtr make(SourceLoc loc, T node) {
  return std::make_unique<Node>(Node{loc, NodeVariant(std::move(node))});
}

// Calls f on every direct child slot of n (null optional children skipped).
void for_each_child(Node& n, const std::function<void(NodePtr&)>& f);

// Name of the node's variant ("Let", "Infer", ...).
std::string_view node_name(const Node& n);

// Location-free S-expression dump; two trees are structurally identical iff
// their dumps are equal.
std::string dump(const Node& n);

// A parsed source file: the top-level Block.
struct Program {
  NodePtr root;
};

}  // namespace turn::ast
