#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "turn/error.hpp"
#include "turn/http.hpp"
#include "turn/schema.hpp"

namespace turn {

struct InferenceRequest {
  std::string prompt;
  std::vector<std::string> context;
  JsonSchema schema;
  std::optional<std::string> retry_note;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

// Header values may hold "$env:NAME" placeholders; only the executor side
// resolves them.
struct HttpConfig {
  std::string url;
  std::string method = "POST";
  Headers headers;
  std::string body;

  nlohmann::ordered_json to_json() const;
};

struct InferenceResult {
  nlohmann::json json;
  std::optional<double> confidence;
};

class DriverError : public Error {
 public:
  explicit DriverError(std::string message) : Error("DriverError", std::move(message)) {}
};

struct DriverConfig {
  std::string name = "http";
  std::string endpoint_url = "http://127.0.0.1:8080/v1/infer";
  std::string model = "default";
  Headers headers;

  // {name, endpointUrl, model, headers:{k: v}}; missing keys keep defaults.
  static DriverConfig from_json(const nlohmann::json& j);
};

// The provider boundary: two pure functions. No environment, no I/O.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual std::string name() const = 0;
  virtual HttpConfig transform_request(const InferenceRequest& request) const = 0;
  virtual InferenceResult transform_response(const std::string& raw) const = 0;
};

// Generic JSON-over-HTTP provider.
class HttpReferenceDriver : public Driver {
 public:
  explicit HttpReferenceDriver(DriverConfig config = {}) : config_(std::move(config)) {}
  std::string name() const override { return "http"; }
  HttpConfig transform_request(const InferenceRequest& request) const override;
  InferenceResult transform_response(const std::string& raw) const override;

 private:
  DriverConfig config_;
};

// Talks to MockTransport: request body is {prompt, context, schema, retryNote},
// response body is {"output": ..., "confidence": p?}.
class MockDriver : public Driver {
 public:
  std::string name() const override { return "mock"; }
  HttpConfig transform_request(const InferenceRequest& request) const override;
  InferenceResult transform_response(const std::string& raw) const override;
};

struct CallRecord {
  std::uint64_t seq = 0;
  std::string prompt;
  std::optional<std::string> retry_note;
  std::vector<std::string> context;
};

// Deterministic in-process stand-in for a provider. Script mode answers call n
// with step n; generator mode synthesizes a schema-conforming value from a
// seeded generator.
class MockTransport : public HttpExecutor {
 public:
  struct Step {
    bool malformed = false;
    nlohmann::json response;
    std::optional<double> confidence;
  };

  static std::shared_ptr<MockTransport> scripted(std::vector<Step> steps);
  // Accepts [{"response": x, "confidence": p} | {"malformed": true} | "MALFORMED", ...]
  static std::shared_ptr<MockTransport> from_script_json(const nlohmann::json& script);
  static std::shared_ptr<MockTransport> generator(std::uint64_t seed);

  HttpResponse execute(const HttpRequest& request) override;

  // Sorted by sequence number.
  std::vector<CallRecord> call_log() const;
  std::size_t calls() const;

 private:
  MockTransport() = default;
  nlohmann::json generate(const nlohmann::json& schema, int depth);

  mutable std::mutex mu_;
  bool generator_ = false;
  std::vector<Step> steps_;
  std::mt19937_64 rng_;
  std::vector<CallRecord> log_;
};

// Substitutes "$env:NAME" in header values. CapabilityError names the first
// missing variable.
HttpRequest resolve_config(const HttpConfig& config, const Environment& env);

// Driver + executor + environment. `infer_once` does one round trip; the
// retry loop lives in the VM.
class InferenceEngine {
 public:
  InferenceEngine(std::shared_ptr<Driver> driver, std::shared_ptr<HttpExecutor> executor,
                  std::shared_ptr<Environment> env)
      : driver_(std::move(driver)), executor_(std::move(executor)), env_(std::move(env)) {}

  // Throws DriverError (retryable), RuntimeFault for CapabilityError/IoError
  // and ScriptExhausted.
  InferenceResult infer_once(const InferenceRequest& request);

  const Driver& driver() const { return *driver_; }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<Driver> driver_;
  std::shared_ptr<HttpExecutor> executor_;
  std::shared_ptr<Environment> env_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace turn
