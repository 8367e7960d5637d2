// turn: compile, run and resume Turn programs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "turn/compiler.hpp"
#include "turn/durable.hpp"
#include "turn/experiments.hpp"
#include "turn/runtime.hpp"

namespace {

using namespace turn;

struct Flags {
  std::string driver;
  std::string store_dir;
  unsigned workers = 1;
  bool emit_bytecode = false;
  bool allow_net = false;
  std::string mock_script;
  std::uint64_t seed = 42;
  std::string driver_config;
  std::string http_fixture;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string driver_name(const Flags& f) {
  if (!f.driver.empty()) return f.driver;
  if (const char* env = std::getenv("TURN_DRIVER"); env && *env) return env;
  return TURN_DEFAULT_DRIVER;
}

RuntimeOptions runtime_options(const Flags& f, const std::string& source_path) {
  RuntimeOptions opts;
  opts.workers = f.workers;
  opts.source_path = source_path;
  opts.env = std::make_shared<ProcessEnvironment>();
  if (!f.store_dir.empty()) opts.store_dir = f.store_dir;

  if (!f.http_fixture.empty()) {
    auto canned = std::make_shared<CannedExecutor>();
    for (const auto& [route, resp] : read_json(f.http_fixture).items()) {
      auto space = route.find(' ');
      if (space == std::string::npos) throw std::runtime_error("fixture route must be \"METHOD url\": " + route);
      const auto& body = resp.at("body");
      canned->add(route.substr(0, space), route.substr(space + 1),
                  {resp.value("status", 200), body.is_string() ? body.get<std::string>() : body.dump()});
    }
    opts.http = canned;
  }

  std::string name = driver_name(f);
  if (name == "mock") {
    auto transport = f.mock_script.empty() ? MockTransport::generator(f.seed)
                                           : MockTransport::from_script_json(read_json(f.mock_script));
    opts.engine = std::make_shared<InferenceEngine>(std::make_shared<MockDriver>(), transport, opts.env);
  } else if (name == "http") {
    DriverConfig cfg = f.driver_config.empty() ? DriverConfig{} : DriverConfig::from_json(read_json(f.driver_config));
    opts.engine = std::make_shared<InferenceEngine>(std::make_shared<HttpReferenceDriver>(cfg),
                                                    std::make_shared<HttplibExecutor>(), opts.env);
  } else {
    throw std::runtime_error("unknown driver '" + name + "' (expected mock or http)");
  }
  return opts;
}

std::shared_ptr<const Chunk> compile_file(const std::string& path, bool allow_net) {
  std::string source = read_file(path);
  CompileOptions co;
  co.fetcher = make_fetcher(std::filesystem::path(path).parent_path(), allow_net);
  return std::make_shared<const Chunk>(compile_source(source, co));
}

int report_compile_error(const std::string& path, const CompileError& e) {
  std::cerr << path << ":" << e.loc().line << ":" << e.loc().column << ": " << e.kind() << ": " << e.message() << "\n";
  return 2;
}

int finish(const RunReport& r, const std::string& path) {
  for (const auto& id : r.snapshots) std::cerr << "snapshot " << id << "\n";
  if (r.fault) {
    std::cerr << path;
    if (r.fault_line > 0) std::cerr << ":" << r.fault_line;
    std::cerr << ": " << r.fault->kind() << ": " << r.fault->message() << "\n";
    return 1;
  }
  return 0;
}

int cmd_run(const std::string& path, const Flags& f) {
  std::shared_ptr<const Chunk> chunk;
  try {
    chunk = compile_file(path, f.allow_net);
  } catch (const CompileError& e) {
    return report_compile_error(path, e);
  }
  if (f.emit_bytecode) std::cerr << disassemble(*chunk);
  Runtime rt(runtime_options(f, std::filesystem::absolute(path).string()));
  rt.load(chunk);
  rt.start();
  return finish(rt.run(), path);
}

int cmd_check(const std::string& path, const Flags& f) {
  try {
    auto chunk = compile_file(path, f.allow_net);
    if (f.emit_bytecode) std::cout << disassemble(*chunk);
    return 0;
  } catch (const CompileError& e) {
    return report_compile_error(path, e);
  }
}

int cmd_disasm(const std::string& path, const Flags& f) {
  try {
    std::cout << disassemble(*compile_file(path, f.allow_net));
    return 0;
  } catch (const CompileError& e) {
    return report_compile_error(path, e);
  }
}

int cmd_resume(const std::string& id, const std::string& source_override, const Flags& f) {
  FileStore store(f.store_dir.empty() ? FileStore::default_root() : std::filesystem::path(f.store_dir));
  VmSnapshot snap;
  try {
    snap = store.load(id);
  } catch (const RuntimeFault& e) {
    std::cerr << e.kind() << ": " << e.message() << "\n";
    return 1;
  }
  std::string path = source_override.empty() ? snap.source_path : source_override;
  std::shared_ptr<const Chunk> chunk;
  try {
    chunk = compile_file(path, f.allow_net);
  } catch (const CompileError& e) {
    return report_compile_error(path, e);
  }
  Runtime rt(runtime_options(f, snap.source_path));
  rt.load(chunk);
  try {
    rt.resume(snap);
  } catch (const RuntimeFault& e) {
    std::cerr << e.kind() << ": " << e.message() << "\n";
    return 1;
  }
  return finish(rt.run(), path);
}

int cmd_experiments(const Flags& f) {
  std::filesystem::path scratch = f.store_dir.empty()
                                      ? std::filesystem::temp_directory_path() / ("turn-experiments-" + std::to_string(::getpid()))
                                      : std::filesystem::path(f.store_dir);
  std::string last_suite;
  auto lines = run_experiments(scratch, [&](const ExperimentLine& l) {
    std::string suite = l.id.substr(0, 2);
    if (!last_suite.empty() && suite != last_suite) std::cout << "\n";
    last_suite = suite;
    std::cout << format_line(l) << std::endl;
  });
  if (f.store_dir.empty()) std::filesystem::remove_all(scratch);
  std::size_t passed = 0;
  for (const auto& l : lines) passed += l.pass;
  std::cout << "\n" << passed << "/" << lines.size() << " experiments passed\n";
  return passed == lines.size() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("turn"));
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Turn language toolchain"};
  app.require_subcommand(1);
  Flags f;
  std::string path, id, source_override;

  auto add_run_flags = [&f](CLI::App* c) {
    c->add_option("--driver", f.driver, "inference driver: mock or http (default: $TURN_DRIVER, then build default)");
    c->add_option("--store-dir", f.store_dir, "snapshot directory (default: $TURN_STORE_DIR or .turn_store)");
    c->add_option("--workers", f.workers, "scheduler threads; 1 is deterministic")->check(CLI::PositiveNumber);
    c->add_flag("--emit-bytecode", f.emit_bytecode, "print the disassembly to stderr before running");
    c->add_flag("--allow-net", f.allow_net, "allow http(s) schema fetches at compile time");
    c->add_option("--mock-script", f.mock_script, "JSON script for the mock driver");
    c->add_option("--seed", f.seed, "mock generator seed");
    c->add_option("--driver-config", f.driver_config, "JSON config for the http driver");
    c->add_option("--http-fixture", f.http_fixture, "answer std/net requests from a JSON route table");
  };

  auto* run = app.add_subcommand("run", "compile and run a program");
  run->add_option("file", path, "source file")->required();
  add_run_flags(run);

  auto* check = app.add_subcommand("check", "compile only; never runs user code");
  check->add_option("file", path, "source file")->required();
  check->add_flag("--allow-net", f.allow_net, "allow http(s) schema fetches");
  check->add_flag("--emit-bytecode", f.emit_bytecode, "print the disassembly");

  auto* resume = app.add_subcommand("resume", "continue a suspended process");
  resume->add_option("id", id, "snapshot id")->required();
  resume->add_option("--source", source_override, "program file (default: the path recorded in the snapshot)");
  add_run_flags(resume);

  auto* disasm = app.add_subcommand("disasm", "print bytecode");
  disasm->add_option("file", path, "source file")->required();
  disasm->add_flag("--allow-net", f.allow_net, "allow http(s) schema fetches");

  auto* experiments = app.add_subcommand("experiments", "run the experiment suites");
  experiments->add_option("--store-dir", f.store_dir, "keep snapshot files here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(path, f);
    if (*check) return cmd_check(path, f);
    if (*resume) return cmd_resume(id, source_override, f);
    if (*disasm) return cmd_disasm(path, f);
    if (*experiments) return cmd_experiments(f);
  } catch (const CompileError& e) {
    return report_compile_error(path, e);
  } catch (const std::exception& e) {
    std::cerr << "turn: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
