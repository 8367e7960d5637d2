#include "turn/analysis.hpp"

#include <optional>
#include <set>

namespace turn {

namespace {

using namespace ast;

constexpr std::string_view kStdModules[] = {"net", "fs", "json", "time", "env", "regex", "math"};

bool is_builtin_type(std::string_view name) {
  return TypeTag::from_name(name).kind != TypeKind::StructRef;
}

struct FnScope {
  FnScope* parent = nullptr;  // lexical parent; null for the top level and hoisted turns
  bool hoisted = false;
  FunctionInfo* info = nullptr;
  std::string self_name;
  std::string display_name;
  std::vector<std::map<std::string, std::uint32_t>> blocks;
  std::map<std::string, std::uint32_t> captures;
  std::uint32_t next_slot = 0;

  std::optional<std::uint32_t> local(const std::string& name) const {
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    auto c = captures.find(name);
    if (c != captures.end()) return c->second;
    return std::nullopt;
  }
  std::uint32_t bind(const std::string& name) {
    std::uint32_t slot = next_slot++;
    blocks.back()[name] = slot;
    return slot;
  }
};

class Analyzer {
 public:
  Analyzer(StructRegistry& registry, std::vector<FunctionEntry>& functions, std::map<std::string, std::uint32_t>& exports)
      : registry_(registry), functions_(functions), exports_(exports) {}

  void collect_structs(Node& root, const std::vector<StructDef>& synthesized) {
    std::vector<std::pair<const StructDecl*, SourceLoc>> decls;
    std::function<void(NodePtr&)> walk = [&](NodePtr& n) {
      if (auto* s = n->as<StructDecl>()) decls.emplace_back(s, n->loc);
      for_each_child(*n, walk);
    };
    for_each_child(root, walk);

    for (const auto& [decl, loc] : decls) {
      if (is_builtin_type(decl->name)) throw AnalysisError(loc, "struct " + decl->name + " redefines a builtin type");
      StructDef def{decl->name, {}};
      std::set<std::string> seen;
      for (const auto& f : decl->fields) {
        if (!seen.insert(f.name).second) throw AnalysisError(loc, "duplicate field " + f.name + " in struct " + decl->name);
        def.fields.push_back({f.name, TypeTag::from_name(f.type)});
      }
      if (!registry_.add(std::move(def))) throw AnalysisError(loc, "duplicate struct " + decl->name);
      locs_[decl->name] = loc;
    }
    for (const auto& def : synthesized) {
      if (!registry_.add(def)) throw AnalysisError({}, "duplicate struct " + def.name);
    }
    for (const auto& def : registry_.all()) {
      for (const auto& f : def.fields) {
        if (f.type.kind == TypeKind::StructRef && !registry_.find(f.type.ref))
          throw AnalysisError(locs_[def.name], "unknown type " + f.type.ref + " for field " + def.name + "." + f.name);
      }
    }
  }

  void run(Node& root, FunctionInfo& main_info) {
    functions_.push_back({"main", 0, &main_info, &root, root.loc});
    auto& stmts = root.as<Block>()->stmts;
    for (auto& s : stmts) {
      auto* t = s->as<TurnDecl>();
      if (!t) continue;
      if (exports_.count(t->name)) throw AnalysisError(s->loc, "duplicate turn " + t->name);
      t->hoisted = true;
      t->info.index = static_cast<std::uint32_t>(functions_.size());
      exports_[t->name] = t->info.index;
      functions_.push_back({t->name, static_cast<std::uint32_t>(t->params.size()), &t->info, t->body.get(), s->loc});
    }
    FnScope scope;
    scope.info = &main_info;
    scope.display_name = "main";
    scope.blocks.emplace_back();
    main_ = &scope;
    for (auto& s : stmts) visit(s, scope);
    main_info.slot_count = scope.next_slot;
    main_ = nullptr;
  }

 private:
  std::optional<VarRef> resolve(FnScope& f, const std::string& name) {
    if (auto slot = f.local(name)) return VarRef{VarRef::Kind::Local, *slot};
    if (!f.self_name.empty() && f.self_name == name) return VarRef{VarRef::Kind::Self, 0};
    if (f.parent) {
      if (auto outer = resolve(*f.parent, name)) {
        if (outer->kind == VarRef::Kind::Function) return outer;
        std::uint32_t slot = f.next_slot++;
        f.captures[name] = slot;
        f.info->capture_slots.push_back(slot);
        f.info->capture_sources.push_back(*outer);
        return VarRef{VarRef::Kind::Local, slot};
      }
      return std::nullopt;
    }
    auto g = exports_.find(name);
    if (g != exports_.end()) return VarRef{VarRef::Kind::Function, g->second};
    return std::nullopt;
  }

  VarRef resolve_or_fail(FnScope& f, const std::string& name, SourceLoc loc) {
    if (auto r = resolve(f, name)) return *r;
    if (f.hoisted || hoisted_ancestor(f)) {
      if (main_ && main_->local(name))
        throw AnalysisError(loc, "top-level binding " + name + " is not visible inside turn " + f.display_name +
                                     "; pass it as an argument");
    }
    throw AnalysisError(loc, "unknown variable " + name);
  }

  static bool hoisted_ancestor(const FnScope& f) {
    for (const FnScope* p = f.parent; p; p = p->parent)
      if (p->hoisted) return true;
    return false;
  }

  std::uint32_t new_function(const std::string& name, std::size_t arity, FunctionInfo& info, const NodePtr& body,
                             SourceLoc loc) {
    info.index = static_cast<std::uint32_t>(functions_.size());
    functions_.push_back({name, static_cast<std::uint32_t>(arity), &info, body.get(), loc});
    return info.index;
  }

  void analyze_function(FunctionInfo& info, const std::vector<Param>& params, NodePtr& body, FnScope* parent,
                        bool hoisted, std::string self_name, std::string display, SourceLoc loc) {
    FnScope scope;
    scope.parent = parent;
    scope.hoisted = hoisted;
    scope.info = &info;
    scope.self_name = std::move(self_name);
    scope.display_name = std::move(display);
    scope.blocks.emplace_back();
    for (const auto& p : params) {
      if (scope.blocks.back().count(p.name)) throw AnalysisError(loc, "duplicate parameter " + p.name);
      scope.bind(p.name);
    }
    visit(body, scope);
    info.slot_count = scope.next_slot;
  }

  void visit(NodePtr& n, FnScope& f) {
    Node& node = *n;
    if (auto* b = node.as<Block>()) {
      f.blocks.emplace_back();
      for (auto& s : b->stmts) visit(s, f);
      f.blocks.pop_back();
    } else if (auto* l = node.as<Let>()) {
      visit(l->value, f);
      l->slot = f.bind(l->name);
    } else if (auto* a = node.as<Assign>()) {
      visit(a->value, f);
      VarRef r = resolve_or_fail(f, a->name, node.loc);
      if (r.kind != VarRef::Kind::Local) throw AnalysisError(node.loc, "cannot assign to turn " + a->name);
      a->target = r;
    } else if (auto* t = node.as<TurnDecl>()) {
      if (t->hoisted) {
        analyze_function(t->info, t->params, t->body, nullptr, true, "", t->name, node.loc);
      } else {
        new_function(t->name, t->params.size(), t->info, t->body, node.loc);
        analyze_function(t->info, t->params, t->body, &f, false, t->name, t->name, node.loc);
        t->slot = f.bind(t->name);
      }
    } else if (auto* t = node.as<TurnLit>()) {
      std::string name = "turn@" + std::to_string(node.loc.line);
      new_function(name, t->params.size(), t->info, t->body, node.loc);
      analyze_function(t->info, t->params, t->body, &f, false, "", name, node.loc);
    } else if (auto* tc = node.as<TryCatch>()) {
      visit(tc->body, f);
      f.blocks.emplace_back();
      tc->err_slot = f.bind(tc->err_name);
      visit(tc->handler, f);
      f.blocks.pop_back();
    } else if (auto* inf = node.as<Infer>()) {
      auto idx = registry_.index_of(inf->type_name);
      if (!idx) throw AnalysisError(node.loc, "unknown struct " + inf->type_name);
      inf->struct_index = static_cast<std::uint32_t>(*idx);
      try {
        generate_schema(registry_.all()[*idx], registry_);
      } catch (const SchemaError& e) {
        throw CompileError(e.kind(), node.loc, e.message());
      }
      visit(inf->prompt, f);
    } else if (auto* sl = node.as<StructLit>()) {
      auto idx = registry_.index_of(sl->type_name);
      if (!idx) throw AnalysisError(node.loc, "unknown struct " + sl->type_name);
      sl->struct_index = static_cast<std::uint32_t>(*idx);
      const StructDef& def = registry_.all()[*idx];
      std::set<std::string> given;
      for (const auto& [name, _] : sl->inits) {
        bool declared = false;
        for (const auto& fd : def.fields) declared |= fd.name == name;
        if (!declared) throw AnalysisError(node.loc, "struct " + def.name + " has no field " + name);
        if (!given.insert(name).second) throw AnalysisError(node.loc, "field " + name + " initialized twice");
      }
      for (const auto& fd : def.fields) {
        if (!given.count(fd.name)) throw AnalysisError(node.loc, "struct " + def.name + " literal is missing field " + fd.name);
      }
      for (auto& [_, v] : sl->inits) visit(v, f);
    } else if (auto* id = node.as<Identifier>()) {
      id->ref = resolve_or_fail(f, id->name, node.loc);
    } else if (auto* ct = node.as<CallTool>()) {
      check_tool(ct->tool, node.loc);
      for (auto& a : ct->args) visit(a, f);
    } else if (auto* sp = node.as<Spawn>()) {
      if (auto* lit = sp->body->as<TurnLit>(); lit && !lit->params.empty())
        throw AnalysisError(node.loc, "spawned turn must take no parameters");
      visit(sp->body, f);
    } else if (auto* se = node.as<SpawnEach>()) {
      if (auto* lit = se->body->as<TurnLit>(); lit && lit->params.size() != 1)
        throw AnalysisError(node.loc, "spawn_each turn must take exactly one parameter");
      for_each_child(node, [&](NodePtr& c) { visit(c, f); });
    } else if (node.is<UseSchema>()) {
      throw AnalysisError(node.loc, "use schema was not expanded");
    } else {
      for_each_child(node, [&](NodePtr& c) { visit(c, f); });
    }
  }

  static void check_tool(const std::string& tool, SourceLoc loc) {
    if (tool.rfind("std/", 0) != 0) return;
    auto dot = tool.find('.');
    std::string mod = tool.substr(4, dot == std::string::npos ? std::string::npos : dot - 4);
    bool known = false;
    for (auto m : kStdModules) known |= m == mod;
    if (!known) throw AnalysisError(loc, "unknown standard module std/" + mod);
    if (dot == std::string::npos || dot + 1 == tool.size())
      throw AnalysisError(loc, "tool " + tool + " does not name a function");
  }

  StructRegistry& registry_;
  std::vector<FunctionEntry>& functions_;
  std::map<std::string, std::uint32_t>& exports_;
  std::map<std::string, SourceLoc> locs_;
  FnScope* main_ = nullptr;
};

}  // namespace

AnalyzedProgram analyze(ExpandedProgram expanded) {
  AnalyzedProgram out;
  out.program_ = std::move(expanded.program());
  out.main_info_ = std::make_unique<FunctionInfo>();
  if (!out.program_.root || !out.program_.root->is<Block>()) throw AnalysisError({}, "program root is not a block");
  Analyzer a(out.registry_, out.functions_, out.exports_);
  a.collect_structs(*out.program_.root, expanded.synthesized());
  a.run(*out.program_.root, *out.main_info_);
  return out;
}

}  // namespace turn
