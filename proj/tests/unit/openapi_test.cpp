#include <gtest/gtest.h>

#include "support.hpp"
#include "turn/compiler.hpp"
#include "turn/openapi.hpp"
#include "turn/parser.hpp"

namespace turn {
namespace {

using nlohmann::json;

const std::string kFixtures = TURN_FIXTURES_DIR;

Fetcher fixtures() { return make_fetcher(kFixtures); }

CompileError compile_error(const std::string& src, Fetcher f = fixtures()) {
  try {
    compile_source(src, {"main", std::move(f)});
  } catch (const CompileError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a compile error";
  return CompileError("none", {}, "");
}

TEST(OpenApi, UpperCamel) {
  EXPECT_EQ(upper_camel("get_customer"), "GetCustomer");
  EXPECT_EQ(upper_camel("getCustomer"), "GetCustomer");
  EXPECT_EQ(upper_camel("list-all items"), "ListAllItems");
}

TEST(OpenApi, SynthesizesResponseStructs) {
  Absorbed a = absorb_openapi_document(testing::read_file(kFixtures + "/ping_openapi.json"), {3, 11});
  ASSERT_EQ(a.structs.size(), 3u);
  const StructDef* ping = nullptr;
  for (const auto& s : a.structs)
    if (s.name == "GetPingResponse") ping = &s;
  ASSERT_NE(ping, nullptr);
  std::vector<std::pair<std::string, std::string>> fields;
  for (const auto& f : ping->fields) fields.emplace_back(f.name, f.type.name());
  // properties of the referenced component, typed by JSON Schema type
  EXPECT_EQ(fields, (std::vector<std::pair<std::string, std::string>>{
                        {"hops", "Num"}, {"latency", "Num"}, {"ok", "Bool"}, {"origin", "Map"}, {"status", "Str"}, {"trace", "List"}}));
  EXPECT_EQ(a.replacement->loc, (SourceLoc{3, 11}));
}

TEST(OpenApi, GeneratedClientCallsThroughStdNet) {
  auto http = std::make_shared<CannedExecutor>();
  http->add("GET", "https://ping.example/api/ping/db-1", {200, R"({"status":"up"})"});
  http->add("POST", "https://ping.example/api/reports", {200, R"({"id":"r9"})"});
  testing::Setup setup;
  setup.http = http;
  setup.fetcher = fixtures();
  setup.env = {{"TURN_IDENTITY_PINGER_TOKEN", "tok-123"}};
  auto o = testing::run(R"(
let api = use schema::openapi("file://ping_openapi.json")
let key = grant identity::network("pinger")
let r = api.get_ping(key, {host: "db-1"})
echo call("str", r.status) + " " + r.body
let p = api.createReport(key, {body: {title: "weekly"}})
echo p.body
try {
  api.purgeReports(key, {})
} catch (e) {
  echo e.error
}
)", setup);
  ASSERT_TRUE(o.ok()) << o.fault_kind() << ": " << o.fault_message();
  EXPECT_EQ(o.out, (std::vector<std::string>{R"(200 {"status":"up"})", R"({"id":"r9"})", "UnsupportedOperation"}));
  auto reqs = http->requests();
  ASSERT_EQ(reqs.size(), 2u);
  EXPECT_EQ(reqs[1].body, R"({"title":"weekly"})");
  bool bearer = false;
  for (const auto& [k, v] : reqs[0].headers) bearer = bearer || (k == "Authorization" && v == "Bearer tok-123");
  EXPECT_TRUE(bearer);
}

// The struct an infer targets may come from a schema that is only known after
// expansion; analysis must see it.
TEST(OpenApi, InferTargetsSynthesizedStruct) {
  testing::Setup setup;
  setup.fetcher = fixtures();
  setup.script = {testing::reply({{"status", "up"}, {"latency", 12.5}, {"hops", 3}, {"ok", true}, {"trace", {"a"}},
                                  {"origin", {{"region", "eu"}}}},
                                 0.8)};
  auto o = testing::run(R"(
let api = use schema::openapi("ping_openapi.json")
let guess = infer GetPingResponse { "predict the ping" }
echo guess.status + " " + call("str", guess.latency) + " " + guess.origin.region
)", setup);
  ASSERT_TRUE(o.ok()) << o.fault_message();
  EXPECT_EQ(o.out, std::vector<std::string>{"up 12.5 eu"});
  auto log = o.mock->call_log();
  ASSERT_EQ(log.size(), 1u);
}

TEST(OpenApi, GraphqlIsAnUnsupportedAdapter) {
  auto e = compile_error("let api = use schema::graphql(\"file://x.graphql\")\n");
  EXPECT_EQ(e.kind(), "UnsupportedProtocol");
  EXPECT_EQ(e.message(), "unsupported schema protocol: graphql (adapters in development)");
  EXPECT_EQ(e.loc(), (SourceLoc{1, 11}));
}

TEST(OpenApi, FetchAndParseErrors) {
  EXPECT_EQ(compile_error("let a = use schema::openapi(\"missing.json\")").kind(), "SchemaFetchError");
  EXPECT_EQ(compile_error("let a = use schema::openapi(\"swagger2.json\")").kind(), "SchemaParseError");
  auto net = compile_error("let a = use schema::openapi(\"https://example.invalid/api.json\")");
  EXPECT_EQ(net.kind(), "SchemaFetchError");
  EXPECT_NE(net.message().find("--allow-net"), std::string::npos);
}

TEST(OpenApi, ExpansionLeavesNoUseSchemaNodes) {
  auto prog = parse_source("let api = use schema::openapi(\"ping_openapi.json\")\necho 1\n");
  ExpandedProgram ex = expand_schemas(std::move(prog), fixtures());
  EXPECT_EQ(ast::dump(*ex.program().root).find("UseSchema"), std::string::npos);
  EXPECT_EQ(ex.synthesized().size(), 3u);
}

TEST(OpenApi, DuplicateSynthesizedStructIsACompileError) {
  auto e = compile_error("struct GetPingResponse { x: Num }\nlet api = use schema::openapi(\"ping_openapi.json\")\n");
  EXPECT_EQ(e.kind(), "AnalysisError");
  EXPECT_NE(e.message().find("GetPingResponse"), std::string::npos);
}

}  // namespace
}  // namespace turn
