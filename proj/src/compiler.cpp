#include "turn/compiler.hpp"

#include <cstring>

#include "turn/parser.hpp"

namespace turn {

namespace {

using namespace ast;

bool is_statement(const Node& n) {
  return n.is<Block>() || n.is<StructDecl>() || n.is<Let>() || n.is<Assign>() || n.is<TurnDecl>() || n.is<If>() ||
         n.is<TryCatch>() || n.is<Throw>() || n.is<Return>() || n.is<Echo>() || n.is<Send>();
}

class Emitter {
 public:
  explicit Emitter(Chunk& chunk) : chunk_(chunk) {}

  void function(const FunctionEntry& entry, bool is_main) {
    Function fn;
    fn.name = entry.name;
    fn.arity = entry.arity;
    fn.slot_count = entry.info->slot_count;
    fn.capture_slots = entry.info->capture_slots;
    code_ = &fn.code;
    const auto& stmts = entry.body->as<Block>()->stmts;
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      const Node& s = *stmts[i];
      if (!is_main && i + 1 == stmts.size() && !is_statement(s)) {
        expr(s);  // trailing expression is the turn's value
        emit(Op::Return, s.loc);
        break;
      }
      statement(s);
    }
    int end_line = entry.body->loc.line;
    if (is_main) {
      emit(Op::Halt, end_line);
    } else if (fn.code.empty() || fn.code.back().op != Op::Return) {
      emit(Op::Const, end_line, constant(Value()));
      emit(Op::Return, end_line);
    }
    chunk_.functions.push_back(std::move(fn));
  }

 private:
  std::uint32_t here() const { return static_cast<std::uint32_t>(code_->size()); }

  std::size_t emit(Op op, int line, std::uint32_t a = 0, std::uint32_t b = 0) {
    code_->push_back({op, a, b, line});
    return code_->size() - 1;
  }
  std::size_t emit(Op op, SourceLoc loc, std::uint32_t a = 0, std::uint32_t b = 0) { return emit(op, loc.line, a, b); }
  void patch(std::size_t at) { (*code_)[at].a = here(); }

  std::uint32_t constant(const Value& v) {
    for (std::size_t i = 0; i < chunk_.constants.size(); ++i) {
      const Value& c = chunk_.constants[i];
      if (c.kind() != v.kind()) continue;
      if (v.is(ValueKind::Num)) {
        double x = c.as_num(), y = v.as_num();
        if (std::memcmp(&x, &y, sizeof x) == 0) return static_cast<std::uint32_t>(i);
      } else if (c == v) {
        return static_cast<std::uint32_t>(i);
      }
    }
    chunk_.constants.push_back(v);
    return static_cast<std::uint32_t>(chunk_.constants.size() - 1);
  }

  std::uint32_t name(const std::string& n) {
    for (std::size_t i = 0; i < chunk_.names.size(); ++i)
      if (chunk_.names[i] == n) return static_cast<std::uint32_t>(i);
    chunk_.names.push_back(n);
    return static_cast<std::uint32_t>(chunk_.names.size() - 1);
  }

  void load(const VarRef& r, SourceLoc loc) {
    switch (r.kind) {
      case VarRef::Kind::Local: emit(Op::LoadLocal, loc, r.index); break;
      case VarRef::Kind::Function: emit(Op::LoadFn, loc, r.index); break;
      case VarRef::Kind::Self: emit(Op::LoadSelf, loc); break;
      case VarRef::Kind::Unresolved: throw AnalysisError(loc, "internal: unresolved reference");
    }
  }

  void closure(const FunctionInfo& info, SourceLoc loc) {
    for (const auto& src : info.capture_sources) load(src, loc);
    emit(Op::MakeClosure, loc, info.index, static_cast<std::uint32_t>(info.capture_sources.size()));
  }

  void statement(const Node& n) {
    const SourceLoc loc = n.loc;
    if (auto* b = n.as<Block>()) {
      for (const auto& s : b->stmts) statement(*s);
    } else if (n.is<StructDecl>()) {
    } else if (auto* l = n.as<Let>()) {
      expr(*l->value);
      emit(Op::StoreLocal, loc, l->slot);
    } else if (auto* a = n.as<Assign>()) {
      expr(*a->value);
      emit(Op::StoreLocal, loc, a->target.index);
    } else if (auto* t = n.as<TurnDecl>()) {
      if (!t->hoisted) {
        closure(t->info, loc);
        emit(Op::StoreLocal, loc, t->slot);
      }
    } else if (auto* i = n.as<If>()) {
      expr(*i->cond);
      auto to_else = emit(Op::JumpIfFalse, loc);
      statement(*i->then_block);
      if (i->else_branch) {
        auto to_end = emit(Op::Jump, loc);
        patch(to_else);
        statement(*i->else_branch);
        patch(to_end);
      } else {
        patch(to_else);
      }
    } else if (auto* tc = n.as<TryCatch>()) {
      auto push = emit(Op::TryPush, loc);
      statement(*tc->body);
      emit(Op::TryPop, loc);
      auto to_end = emit(Op::Jump, loc);
      patch(push);
      emit(Op::StoreLocal, tc->handler->loc, tc->err_slot);
      statement(*tc->handler);
      patch(to_end);
    } else if (auto* th = n.as<Throw>()) {
      expr(*th->value);
      emit(Op::Throw, loc);
    } else if (auto* r = n.as<Return>()) {
      if (r->value)
        expr(*r->value);
      else
        emit(Op::Const, loc, constant(Value()));
      emit(Op::Return, loc);
    } else if (auto* e = n.as<Echo>()) {
      expr(*e->value);
      emit(Op::Echo, loc);
    } else if (auto* s = n.as<Send>()) {
      expr(*s->pid);
      expr(*s->value);
      emit(Op::Send, loc);
    } else {
      expr(n);
      emit(Op::Pop, loc);
    }
  }

  void exprs(const NodeList& xs) {
    for (const auto& x : xs) expr(*x);
  }

  void expr(const Node& n) {
    const SourceLoc loc = n.loc;
    if (auto* lit = n.as<Literal>()) {
      Value v = std::visit([](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return Value();
        else
          return Value(x);
      }, lit->value);
      emit(Op::Const, loc, constant(v));
    } else if (auto* id = n.as<Identifier>()) {
      load(id->ref, loc);
    } else if (auto* t = n.as<TurnLit>()) {
      closure(t->info, loc);
    } else if (auto* b = n.as<Binary>()) {
      expr(*b->lhs);
      expr(*b->rhs);
      static constexpr Op ops[] = {Op::Add,   Op::Sub,   Op::Mul,   Op::Div,   Op::CmpLt, Op::CmpLe,
                                   Op::CmpGt, Op::CmpGe, Op::CmpEq, Op::CmpNe, Op::And,   Op::Or};
      emit(ops[static_cast<int>(b->op)], loc);
    } else if (auto* u = n.as<Unary>()) {
      expr(*u->operand);
      emit(u->op == UnaryOp::Neg ? Op::Neg : Op::Not, loc);
    } else if (auto* c = n.as<Confidence>()) {
      expr(*c->value);
      emit(Op::Confidence, loc);
    } else if (auto* fa = n.as<FieldAccess>()) {
      expr(*fa->object);
      emit(Op::GetField, loc, name(fa->field));
    } else if (auto* ix = n.as<Index>()) {
      expr(*ix->object);
      expr(*ix->index);
      emit(Op::Index, loc);
    } else if (auto* l = n.as<ListLit>()) {
      exprs(l->items);
      emit(Op::MakeList, loc, static_cast<std::uint32_t>(l->items.size()));
    } else if (auto* m = n.as<MapLit>()) {
      for (const auto& [k, v] : m->entries) {
        emit(Op::Const, loc, constant(Value(k)));
        expr(*v);
      }
      emit(Op::MakeMap, loc, static_cast<std::uint32_t>(m->entries.size()));
    } else if (auto* s = n.as<StructLit>()) {
      for (const auto& [k, v] : s->inits) {
        emit(Op::Const, loc, constant(Value(k)));
        expr(*v);
      }
      emit(Op::MakeStruct, loc, s->struct_index, static_cast<std::uint32_t>(s->inits.size()));
    } else if (auto* call = n.as<Call>()) {
      expr(*call->callee);
      exprs(call->args);
      emit(Op::Call, loc, static_cast<std::uint32_t>(call->args.size()));
    } else if (auto* ct = n.as<CallTool>()) {
      exprs(ct->args);
      emit(Op::CallTool, loc, name(ct->tool), static_cast<std::uint32_t>(ct->args.size()));
    } else if (auto* inf = n.as<Infer>()) {
      expr(*inf->prompt);
      emit(Op::Infer, loc, inf->struct_index);
    } else if (auto* ca = n.as<ContextAppend>()) {
      expr(*ca->value);
      emit(Op::ContextAppend, loc);
    } else if (auto* cs = n.as<ContextSystem>()) {
      expr(*cs->value);
      emit(Op::ContextSystem, loc);
    } else if (auto* rem = n.as<Remember>()) {
      expr(*rem->key);
      expr(*rem->value);
      emit(Op::Remember, loc);
    } else if (auto* rec = n.as<Recall>()) {
      expr(*rec->key);
      emit(Op::Recall, loc);
    } else if (auto* sp = n.as<Spawn>()) {
      expr(*sp->body);
      emit(sp->linked ? Op::SpawnLink : Op::Spawn, loc);
    } else if (auto* se = n.as<SpawnEach>()) {
      expr(*se->list);
      expr(*se->body);
      emit(Op::SpawnEach, loc);
    } else if (n.is<Receive>()) {
      emit(Op::Receive, loc);
    } else if (n.is<SelfPid>()) {
      emit(Op::SelfPid, loc);
    } else if (n.is<Suspend>()) {
      emit(Op::Suspend, loc);
    } else if (auto* g = n.as<GrantIdentity>()) {
      emit(Op::GrantIdentity, loc, name(g->capability_class), name(g->provider));
    } else {
      throw AnalysisError(loc, "internal: " + std::string(node_name(n)) + " is not an expression");
    }
  }

  Chunk& chunk_;
  std::vector<Instruction>* code_ = nullptr;
};

}  // namespace

Chunk compile(const AnalyzedProgram& program, std::string module) {
  Chunk chunk;
  chunk.module = std::move(module);
  chunk.registry = program.registry();
  for (const auto& def : chunk.registry.all()) {
    try {
      JsonSchema s = generate_schema(def, chunk.registry);
      chunk.schemas.push_back(canonical(s));
      chunk.schema_json.push_back(std::move(s));
    } catch (const SchemaError&) {
      chunk.schemas.emplace_back();
      chunk.schema_json.emplace_back();
    }
  }
  // Leading underscore keeps a top-level turn module-private.
  for (const auto& [name, idx] : program.exports())
    if (name.empty() || name[0] != '_') chunk.exports.emplace(name, idx);
  Emitter e(chunk);
  const auto& fns = program.functions();
  for (std::size_t i = 0; i < fns.size(); ++i) e.function(fns[i], i == 0);
  return chunk;
}

Chunk compile_source(std::string_view source, const CompileOptions& options) {
  ast::Program parsed = parse_source(source);
  ExpandedProgram expanded = expand_schemas(std::move(parsed), options.fetcher ? options.fetcher : make_fetcher());
  AnalyzedProgram analyzed = analyze(std::move(expanded));
  return compile(analyzed, options.module);
}

}  // namespace turn
