#include <gtest/gtest.h>

#include "support.hpp"
#include "turn/traps.hpp"

namespace turn {
namespace {

using Lines = std::vector<std::string>;

TEST(Traps, IdentityEnvVarNaming) {
  EXPECT_EQ(identity_env_var("stripe"), "TURN_IDENTITY_STRIPE_TOKEN");
  EXPECT_EQ(identity_env_var("my-api.v2"), "TURN_IDENTITY_MY_API_V2_TOKEN");
}

TEST(Traps, HttpInjectsBearerFromHostEnvironment) {
  MapEnvironment env(std::map<std::string, std::string>{{"TURN_IDENTITY_STRIPE_TOKEN", "sk_test_1"}});
  CannedExecutor http;
  http.add("POST", "https://api.example/charge", {201, "ok"});
  TrapHost host{env, http};
  TrapResult r = kernel_trap("__sys_http_post",
                             {Value(Identity{"stripe", "oauth"}), Value("https://api.example/charge"), Value(Map{{"amount", Value(5)}})},
                             host);
  EXPECT_EQ(r.value.as_map().at("status").as_num(), 201);
  auto req = http.requests().at(0);
  EXPECT_EQ(req.headers.at(0), (std::pair<std::string, std::string>{"Authorization", "Bearer sk_test_1"}));
  EXPECT_EQ(req.body, R"({"amount":5})");
}

TEST(Traps, CapabilityChecks) {
  MapEnvironment env;
  CannedExecutor http;
  TrapHost host{env, http};
  auto kind = [&](std::string_view name, std::vector<Value> args) {
    try {
      kernel_trap(name, args, host);
    } catch (const RuntimeFault& f) {
      return f.kind() + ": " + f.message();
    }
    return std::string("ok");
  };
  EXPECT_EQ(kind("__sys_http_get", {Value("not an id"), Value("https://x")}),
            "CapabilityError: __sys_http_get needs an Identity handle, got Str");
  EXPECT_EQ(kind("__sys_http_get", {Value(Identity{"disk", "filesystem"}), Value("https://x")}),
            "CapabilityError: wrong capability class filesystem for __sys_http_get");
  EXPECT_EQ(kind("__sys_http_get", {Value(Identity{"stripe", "oauth"}), Value("https://x")}),
            "CapabilityError: no credential for identity stripe (TURN_IDENTITY_STRIPE_TOKEN is not set)");
  EXPECT_EQ(kind("__sys_env_get", {Value(Identity{"e", "environment"}), Value("TURN_IDENTITY_STRIPE_TOKEN")}),
            "CapabilityError: credential variables are not accessible");
  EXPECT_EQ(kind("__sys_env_set", {Value(Identity{"e", "environment"}), Value("TURN_IDENTITY_X_TOKEN"), Value("v")}),
            "CapabilityError: credential variables are not accessible");
  EXPECT_EQ(kind("__sys_json_stringify", {Value(List{Value(Identity{"s", "oauth"})})}).substr(0, 18), "SerializationError");
  EXPECT_EQ(kind("__sys_regex_matches", {Value("("), Value("x")}).substr(0, 12), "RuntimeError");
  EXPECT_EQ(kind("__sys_nope", {}), "RuntimeError: unknown kernel trap __sys_nope");
  EXPECT_TRUE(http.requests().empty());
}

TEST(StdEnv, ReadsOrdinaryVariablesOnly) {
  testing::Setup s;
  s.env = {{"REGION", "eu"}, {"TURN_IDENTITY_STRIPE_TOKEN", "sk_live_x"}};
  auto o = testing::run(R"(
let env = grant identity::environment("host")
echo call("std/env.get", env, "REGION")
echo call("std/env.get", env, "UNSET")
call("std/env.set", env, "MODE", "fast")
echo call("std/env.get", env, "MODE")
try {
  echo call("std/env.get", env, "TURN_IDENTITY_STRIPE_TOKEN")
} catch (e) {
  echo e.error + ": " + e.message
}
try {
  echo call("std/env.get", grant identity::network("x"), "REGION")
} catch (e) {
  echo e.message
}
)", s);
  ASSERT_TRUE(o.ok()) << o.fault_message();
  EXPECT_EQ(o.out, (Lines{"eu", "null", "fast", "CapabilityError: credential variables are not accessible",
                          "wrong capability class network for std/env"}));
  EXPECT_EQ(o.env->get("MODE"), "fast");
}

TEST(StdFs, ReadWriteInTempDir) {
  auto dir = testing::temp_dir("fs");
  std::string path = (dir / "sub" / "note.txt").string();
  auto o = testing::run("let fs = grant identity::filesystem(\"local\")\ncall(\"std/fs.write\", fs, \"" + path +
                        "\", \"hello\")\necho call(\"std/fs.read\", fs, \"" + path +
                        "\")\ntry {\n  call(\"std/fs.read\", fs, \"" + (dir / "missing").string() +
                        "\")\n} catch (e) {\n  echo e.error\n}\n");
  ASSERT_TRUE(o.ok()) << o.fault_message();
  EXPECT_EQ(o.out, (Lines{"hello", "IoError"}));
  EXPECT_EQ(testing::read_file(path), "hello");
}

TEST(StdNet, GetAndPostThroughTheHost) {
  auto http = std::make_shared<CannedExecutor>();
  http->add("GET", "https://svc.example/a", {200, R"({"n":3})"});
  http->add("POST", "https://svc.example/b", {202, ""});
  testing::Setup s;
  s.http = http;
  s.env = {{"TURN_IDENTITY_SVC_TOKEN", "t0k"}};
  auto o = testing::run(R"(
let key = grant identity::network("svc")
let r = call("std/net.get", key, "https://svc.example/a")
echo call("std/json.parse", r.body).n + 1
echo call("std/net.post", key, "https://svc.example/b", {x: [1, 2]}).status
echo call("std/net.get", key, "https://svc.example/zzz").status
)", s);
  ASSERT_TRUE(o.ok()) << o.fault_message();
  EXPECT_EQ(o.out, (Lines{"4", "202", "404"}));
  EXPECT_EQ(http->requests()[1].body, R"({"x":[1,2]})");
}

TEST(StdJson, RoundTripAndIdentityRefusal) {
  auto out = testing::echo_lines(R"(
let v = call("std/json.parse", "{\"a\": [1, 2.5, true, null], \"b\": \"x\"}")
echo v.a[1]
echo call("std/json.stringify", v)
try {
  call("std/json.stringify", {k: grant identity::oauth("stripe")})
} catch (e) {
  echo e.error
}
try {
  call("std/json.parse", "{oops")
} catch (e) {
  echo e.error
}
)");
  EXPECT_EQ(out, (Lines{"2.5", R"({"a":[1,2.5,true,null],"b":"x"})", "SerializationError", "SerializationError"}));
}

TEST(StdRegexMathTime, Basics) {
  auto out = testing::echo_lines(R"(
echo call("std/regex.matches", "^a+b$", "aaab")
echo call("std/regex.replace", "[0-9]+", "a1b22", "#")
echo call("std/math.max", 3, 9)
echo call("std/math.min", 3, 9)
echo call("std/math.abs", -4)
echo call("std/time.now") > 1600000000000
)");
  EXPECT_EQ(out, (Lines{"true", "a#b#", "9", "3", "4", "true"}));
}

TEST(Identity, EchoIsOpaqueAndCoercionFails) {
  testing::Setup s;
  s.env = {{"TURN_IDENTITY_STRIPE_TOKEN", "sk_live_zzz"}};
  auto o = testing::run(R"(
let k = grant identity::oauth("stripe")
echo k
echo call("type_of", k) + " " + call("identity_class", k)
try {
  echo "key=" + k
} catch (e) {
  echo e.error
}
)", s);
  ASSERT_TRUE(o.ok()) << o.fault_message();
  EXPECT_EQ(o.out, (Lines{"<identity stripe>", "Identity oauth", "CapabilityError"}));
}

}  // namespace
}  // namespace turn
