#include <gtest/gtest.h>

#include "support.hpp"
#include "turn/compiler.hpp"
#include "turn/stdlib.hpp"

namespace turn {
namespace {

std::string error_of(const std::string& src) {
  try {
    compile_source(src);
  } catch (const CompileError& e) {
    return e.kind() + "@" + std::to_string(e.loc().line) + ": " + e.message();
  }
  return "ok";
}

TEST(Compiler, DisassemblyShape) {
  Chunk c = compile_source("let x = 1 + 2\necho x\n");
  EXPECT_EQ(disassemble(c),
            "0000 CONST 1\n"
            "0001 CONST 2\n"
            "0002 ADD\n"
            "0003 STORE_LOCAL 0\n"
            "0004 LOAD_LOCAL 0\n"
            "0005 ECHO\n"
            "0006 HALT\n");
}

TEST(Compiler, InferEmbedsSchema) {
  Chunk c = compile_source("struct S { a: Num }\nlet s = infer S { \"p\" }\n");
  std::string d = disassemble(c);
  std::string schema = R"({"type":"object","properties":{"a":{"type":"number"}},"required":["a"]})";
  EXPECT_NE(d.find("INFER S schema=<" + std::to_string(schema.size()) + " bytes>"), std::string::npos) << d;
  ASSERT_EQ(c.schemas.size(), 1u);
  EXPECT_EQ(c.schemas[0], schema);
}

TEST(Compiler, FunctionsAndExports) {
  Chunk c = compile_source("turn add(a, b) { return a + b }\nturn _hidden() { return 1 }\necho add(1, 2)\n");
  ASSERT_EQ(c.functions.size(), 3u);
  EXPECT_EQ(c.functions[1].name, "add");
  EXPECT_EQ(c.functions[1].arity, 2u);
  EXPECT_EQ(c.exports.count("add"), 1u);
  EXPECT_EQ(c.exports.count("_hidden"), 0u);
  EXPECT_NE(disassemble(c).find("== fn 1 add (arity 2) =="), std::string::npos);
}

TEST(Compiler, HashIsStableAndSensitive) {
  const char* src = "struct S { a: Num }\nturn f(x) { return x * 2 }\necho f(3)\n";
  EXPECT_EQ(chunk_hash(compile_source(src)), chunk_hash(compile_source(src)));
  EXPECT_EQ(serialize_chunk(compile_source(src)), serialize_chunk(compile_source(src)));
  EXPECT_NE(chunk_hash(compile_source(src)), chunk_hash(compile_source("struct S { a: Num }\nturn f(x) { return x * 3 }\necho f(3)\n")));
  EXPECT_EQ(chunk_hash(compile_source(src)).size(), 64u);
}

TEST(Compiler, SuspendStatementPopsItsValue) {
  std::string d = disassemble(compile_source("suspend\necho 1\n"));
  EXPECT_NE(d.find("SUSPEND\n0001 POP"), std::string::npos) << d;
}

TEST(Analysis, Errors) {
  EXPECT_EQ(error_of("echo y"), "AnalysisError@1: unknown variable y");
  EXPECT_EQ(error_of("let s = infer Q { \"x\" }"), "AnalysisError@1: unknown struct Q");
  EXPECT_EQ(error_of("struct A { x: Num }\nstruct A { y: Num }"), "AnalysisError@2: duplicate struct A");
  EXPECT_EQ(error_of("struct A { x: Nope }"), "AnalysisError@1: unknown type Nope for field A.x");
  EXPECT_EQ(error_of("let k = 1\nturn f() { return k }"),
            "AnalysisError@2: top-level binding k is not visible inside turn f; pass it as an argument");
  EXPECT_EQ(error_of("struct R { a: R }\nlet r = infer R { \"x\" }").substr(0, 18), "SchemaCycleError@2");
  EXPECT_EQ(error_of("struct P { who: Pid }\nlet r = infer P { \"x\" }").substr(0, 22), "UnsupportedFieldType@2");
  EXPECT_EQ(error_of("let x = spawn turn(a) { return a }").substr(0, 13), "AnalysisError");
  EXPECT_EQ(error_of("let x = call(\"std/nope.f\")").substr(0, 13), "AnalysisError");
}

TEST(Analysis, StructOnlyUsedAsLiteralNeedsNoSchema) {
  Chunk c = compile_source("struct Pair { who: Pid, n: Num }\nlet p = Pair { who: self, n: 1 }\necho p.n\n");
  ASSERT_EQ(c.schemas.size(), 1u);
  EXPECT_TRUE(c.schemas[0].empty());
}

TEST(Analysis, NestedTurnsCaptureByCopy) {
  auto out = testing::echo_lines(R"(
let n = 1
let f = turn() { return n + 10 }
n = 5
echo f()
turn make(k) {
  return turn(x) { return x * k }
}
let triple = make(3)
echo triple(7)
)");
  EXPECT_EQ(out, (std::vector<std::string>{"11", "21"}));
}

TEST(Stdlib, EveryModuleCompiles) {
  ModuleCache cache;
  for (const auto& [name, src] : stdlib_sources()) {
    auto chunk = cache.load(name);
    EXPECT_EQ(chunk->module, name);
    EXPECT_FALSE(chunk->exports.empty()) << name;
  }
  std::size_t n = cache.compilations();
  cache.load("std/net");
  EXPECT_EQ(cache.compilations(), n);
  EXPECT_THROW(cache.load("std/nope"), RuntimeFault);
}

}  // namespace
}  // namespace turn
