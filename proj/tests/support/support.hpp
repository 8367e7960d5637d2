#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "turn/driver.hpp"
#include "turn/runtime.hpp"

namespace turn::testing {

struct Setup {
  std::vector<MockTransport::Step> script;  // used unless `generator`
  bool generator = false;
  std::uint64_t seed = 42;
  std::map<std::string, std::string> env;
  unsigned workers = 1;
  std::filesystem::path store;  // default: a fresh temp dir
  int attempts = 3;
  std::shared_ptr<CannedExecutor> http;
  Fetcher fetcher;
  std::function<void(const Process&)> on_exit;
};

struct Outcome {
  std::vector<std::string> out;  // echo lines
  RunReport report;
  std::shared_ptr<MockTransport> mock;
  std::shared_ptr<CannedExecutor> http;
  std::shared_ptr<MapEnvironment> env;
  std::filesystem::path store;

  bool ok() const { return !report.fault; }
  std::string fault_kind() const { return report.fault ? report.fault->kind() : ""; }
  std::string fault_message() const { return report.fault ? report.fault->message() : ""; }
};

Outcome run(std::string_view source, Setup setup = {});

// Recompiles `source`, restores snapshot `id` from setup.store and runs it.
Outcome resume(std::string_view source, const std::string& id, Setup setup);

// Echo lines only; any fault fails the calling test via the returned marker
// line "FAULT <kind>: <message>".
std::vector<std::string> echo_lines(std::string_view source, Setup setup = {});

// Unique empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

MockTransport::Step reply(nlohmann::json response, std::optional<double> confidence = std::nullopt);
MockTransport::Step malformed();

}  // namespace turn::testing
