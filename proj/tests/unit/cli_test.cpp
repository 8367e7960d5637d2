#include <sys/wait.h>

#include <array>
#include <cstdio>

#include <gtest/gtest.h>

#include "support.hpp"

namespace turn {
namespace {

struct Cmd {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

Cmd sh(const std::string& args) {
  std::string cmd = std::string(TURN_CLI) + " " + args + " 2>&1";
  Cmd r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string prog(const std::string& name) { return std::string(TURN_PROGRAMS_DIR) + "/" + name; }

TEST(Cli, RunHello) {
  auto r = sh("run --driver mock " + prog("hello.tn"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(r.out.empty());
}

TEST(Cli, CompileErrorExitsTwoWithLocation) {
  auto dir = testing::temp_dir("cli");
  testing::write_file(dir / "bad.tn", "let a = 1\nlet b = infer Nope { \"x\" }\n");
  auto r = sh("run --driver mock " + (dir / "bad.tn").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.tn:2:"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("AnalysisError"), std::string::npos) << r.out;
  EXPECT_EQ(sh("check " + (dir / "bad.tn").string()).code, 2);
}

TEST(Cli, RuntimeFaultExitsOneWithLine) {
  auto dir = testing::temp_dir("cli");
  testing::write_file(dir / "div.tn", "echo 1\necho 1 / 0\n");
  auto r = sh("run --driver mock " + (dir / "div.tn").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("div.tn:2: RuntimeError: division by zero"), std::string::npos) << r.out;
}

TEST(Cli, CheckNeverRunsUserCode) {
  auto dir = testing::temp_dir("cli");
  testing::write_file(dir / "ok.tn", "echo \"ran\"\n");
  auto r = sh("check " + (dir / "ok.tn").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.find("ran"), std::string::npos);
}

TEST(Cli, DisasmPrintsOpcodes) {
  auto r = sh("disasm " + prog("hello.tn"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("HALT"), std::string::npos);
}

TEST(Cli, SuspendAndResume) {
  auto store = testing::temp_dir("cli-store");
  auto r = sh("run --driver mock --store-dir " + store.string() + " " + prog("checkpoint.tn"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto at = r.out.find("snapshot ");
  ASSERT_NE(at, std::string::npos) << r.out;
  std::string id = r.out.substr(at + 9, r.out.find('\n', at) - at - 9);
  auto again = sh("resume --driver mock --store-dir " + store.string() + " " + id);
  EXPECT_EQ(again.code, 0) << again.out;
  EXPECT_NE(again.out.find("paying"), std::string::npos) << again.out;
  EXPECT_EQ(sh("resume --driver mock --store-dir " + store.string() + " no-such-id").code, 1);
}

TEST(Cli, CommitteeTranscriptIsReproducible) {
  std::string first;
  for (int i = 0; i < 5; ++i) {
    auto r = sh("run --driver mock --seed 42 --workers 1 " + prog("committee.tn"));
    ASSERT_EQ(r.code, 0) << r.out;
    if (i == 0)
      first = r.out;
    else
      ASSERT_EQ(r.out, first) << "run " << i;
  }
  EXPECT_NE(first.find("decision"), std::string::npos) << first;
}

TEST(Cli, MockScriptFile) {
  auto dir = testing::temp_dir("cli");
  testing::write_file(dir / "s.json", R"(["MALFORMED", {"response": {"v": 5}, "confidence": 0.8}])");
  testing::write_file(dir / "p.tn", "struct V { v: Num }\nlet v = infer V { \"x\" }\necho v.v\necho confidence v\n");
  auto r = sh("run --driver mock --mock-script " + (dir / "s.json").string() + " " + (dir / "p.tn").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "5\n0.8\n");
}

TEST(Cli, UnknownDriverIsAnError) {
  auto r = sh("run --driver carrier-pigeon " + prog("hello.tn"));
  EXPECT_NE(r.code, 0);
}

}  // namespace
}  // namespace turn
