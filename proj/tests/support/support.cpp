#include "support.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace turn::testing {

std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("turn-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

MockTransport::Step reply(nlohmann::json response, std::optional<double> confidence) {
  return {false, std::move(response), confidence};
}

MockTransport::Step malformed() { return {true, nullptr, std::nullopt}; }

namespace {

RuntimeOptions options_for(Outcome& o, Setup& setup) {
  o.env = std::make_shared<MapEnvironment>(setup.env);
  o.http = setup.http ? setup.http : std::make_shared<CannedExecutor>();
  o.mock = setup.generator ? MockTransport::generator(setup.seed) : MockTransport::scripted(std::move(setup.script));
  o.store = setup.store.empty() ? temp_dir("store") : setup.store;

  RuntimeOptions opts;
  opts.workers = setup.workers;
  opts.env = o.env;
  opts.http = o.http;
  opts.engine = std::make_shared<InferenceEngine>(std::make_shared<MockDriver>(), o.mock, o.env);
  opts.store_dir = o.store;
  opts.infer_attempts = setup.attempts;
  opts.on_exit = setup.on_exit;
  auto* out = &o.out;
  opts.echo = [out](const std::string& line) { out->push_back(line); };
  return opts;
}

}  // namespace

Outcome run(std::string_view source, Setup setup) {
  Outcome o;
  RuntimeOptions opts = options_for(o, setup);
  CompileOptions co;
  co.fetcher = setup.fetcher;
  o.report = run_program(source, std::move(opts), co);
  return o;
}

Outcome resume(std::string_view source, const std::string& id, Setup setup) {
  Outcome o;
  RuntimeOptions opts = options_for(o, setup);
  CompileOptions co;
  co.fetcher = setup.fetcher;
  auto chunk = std::make_shared<const Chunk>(compile_source(source, co));
  Runtime rt(std::move(opts));
  rt.load(chunk);
  rt.resume(rt.store().load(id));
  o.report = rt.run();
  return o;
}

std::vector<std::string> echo_lines(std::string_view source, Setup setup) {
  Outcome o = run(source, std::move(setup));
  if (o.report.fault) o.out.push_back("FAULT " + o.report.fault->kind() + ": " + o.report.fault->message());
  return o.out;
}

}  // namespace turn::testing
