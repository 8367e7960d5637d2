#include "turn/driver.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "turn/value.hpp"

namespace turn {

using nlohmann::json;

nlohmann::ordered_json HttpConfig::to_json() const {
  nlohmann::ordered_json hs = nlohmann::ordered_json::array();
  for (const auto& [k, v] : headers) hs.push_back({k, v});
  nlohmann::ordered_json j;
  j["url"] = url;
  j["method"] = method;
  j["headers"] = hs;
  j["body"] = body;
  return j;
}

DriverConfig DriverConfig::from_json(const json& j) {
  DriverConfig c;
  c.name = j.value("name", c.name);
  c.endpoint_url = j.value("endpointUrl", c.endpoint_url);
  c.model = j.value("model", c.model);
  if (j.contains("headers") && j["headers"].is_object()) {
    for (const auto& [k, v] : j["headers"].items()) c.headers.emplace_back(k, v.get<std::string>());
  }
  return c;
}

namespace {

std::string prompt_with_note(const InferenceRequest& r) {
  if (!r.retry_note || r.retry_note->empty()) return r.prompt;
  return r.prompt + "\n\nYour previous answer was rejected:\n" + *r.retry_note +
         "\nReply again with JSON that matches the schema.";
}

json parse_or_throw(const std::string& raw, const char* what) {
  try {
    return json::parse(raw);
  } catch (const json::exception&) {
    std::string head = raw.substr(0, 40);
    throw DriverError(std::string(what) + " is not JSON: " + json(head).dump());
  }
}

}  // namespace

HttpConfig HttpReferenceDriver::transform_request(const InferenceRequest& request) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["prompt"] = prompt_with_note(request);
  body["context"] = request.context;
  body["response_format"] = {{"type", "json_schema"}, {"schema", request.schema}};
  body["logprobs"] = true;

  HttpConfig cfg;
  cfg.url = config_.endpoint_url;
  cfg.method = "POST";
  cfg.headers = {{"Authorization", "Bearer $env:LLM_API_KEY"}, {"Content-Type", "application/json"}};
  for (const auto& [k, v] : config_.headers) {
    auto it = std::find_if(cfg.headers.begin(), cfg.headers.end(), [&](const auto& h) { return h.first == k; });
    if (it != cfg.headers.end())
      it->second = v;
    else
      cfg.headers.emplace_back(k, v);
  }
  cfg.body = body.dump();
  return cfg;
}

InferenceResult HttpReferenceDriver::transform_response(const std::string& raw) const {
  json j = parse_or_throw(raw, "provider response");
  InferenceResult out;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    const json* content = nullptr;
    if (choice.contains("message") && choice["message"].contains("content")) content = &choice["message"]["content"];
    if (!content || !content->is_string()) throw DriverError("provider response has no message content");
    out.json = parse_or_throw(content->get<std::string>(), "message content");
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& tok : choice["logprobs"]["content"]) {
        if (tok.contains("logprob") && tok["logprob"].is_number()) {
          sum += std::exp(tok["logprob"].get<double>());
          ++n;
        }
      }
      if (n > 0) out.confidence = sum / static_cast<double>(n);
    }
    return out;
  }
  if (j.is_object() && j.contains("output")) {
    out.json = j["output"];
    if (j.contains("confidence") && j["confidence"].is_number()) out.confidence = j["confidence"].get<double>();
    return out;
  }
  out.json = std::move(j);
  return out;
}

HttpConfig MockDriver::transform_request(const InferenceRequest& request) const {
  nlohmann::ordered_json body;
  body["prompt"] = request.prompt;
  body["context"] = request.context;
  body["schema"] = request.schema;
  body["retryNote"] = request.retry_note ? json(*request.retry_note) : json(nullptr);
  HttpConfig cfg;
  cfg.url = "mock://infer";
  cfg.method = "POST";
  cfg.body = body.dump();
  return cfg;
}

InferenceResult MockDriver::transform_response(const std::string& raw) const {
  json j = parse_or_throw(raw, "mock response");
  if (!j.is_object() || !j.contains("output")) throw DriverError("mock response lacks output");
  InferenceResult out;
  out.json = j["output"];
  if (j.contains("confidence") && j["confidence"].is_number()) out.confidence = j["confidence"].get<double>();
  return out;
}

std::shared_ptr<MockTransport> MockTransport::scripted(std::vector<Step> steps) {
  std::shared_ptr<MockTransport> t(new MockTransport());
  t->steps_ = std::move(steps);
  return t;
}

std::shared_ptr<MockTransport> MockTransport::from_script_json(const json& script) {
  if (!script.is_array()) throw DriverError("mock script must be a JSON list");
  std::vector<Step> steps;
  for (const auto& s : script) {
    Step step;
    if (s.is_string() && s.get<std::string>() == "MALFORMED") {
      step.malformed = true;
    } else if (s.is_object() && s.value("malformed", false)) {
      step.malformed = true;
    } else if (s.is_object() && s.contains("response")) {
      step.response = s["response"];
    } else {
      throw DriverError("bad mock script step " + s.dump());
    }
    if (s.is_object() && s.contains("confidence") && s["confidence"].is_number())
      step.confidence = s["confidence"].get<double>();
    steps.push_back(std::move(step));
  }
  return scripted(std::move(steps));
}

std::shared_ptr<MockTransport> MockTransport::generator(std::uint64_t seed) {
  std::shared_ptr<MockTransport> t(new MockTransport());
  t->generator_ = true;
  t->rng_.seed(seed);
  return t;
}

json MockTransport::generate(const json& schema, int depth) {
  static const char* words[] = {"alpha", "bravo", "delta", "ember", "harbor", "lumen", "north", "quartz", "tidal", "violet"};
  std::string type = schema.is_object() ? schema.value("type", "object") : "object";
  auto pick = [&](std::uint64_t n) { return rng_() % n; };
  if (type == "number") return static_cast<double>(pick(10000)) / 100.0;
  if (type == "string") return std::string(words[pick(10)]) + "-" + std::to_string(pick(100));
  if (type == "boolean") return pick(2) == 1;
  if (type == "array") {
    json a = json::array();
    std::uint64_t n = pick(4);
    for (std::uint64_t i = 0; i < n; ++i) a.push_back(static_cast<double>(pick(100)));
    return a;
  }
  json o = json::object();
  if (depth < 8 && schema.is_object() && schema.contains("properties")) {
    for (const auto& [k, v] : schema["properties"].items()) o[k] = generate(v, depth + 1);
  }
  return o;
}

HttpResponse MockTransport::execute(const HttpRequest& request) {
  json body;
  try {
    body = json::parse(request.body);
  } catch (const json::exception&) {
    return {400, "bad request"};
  }
  std::lock_guard lock(mu_);
  CallRecord rec;
  rec.seq = log_.size() + 1;
  rec.prompt = body.value("prompt", "");
  if (body.contains("retryNote") && body["retryNote"].is_string()) rec.retry_note = body["retryNote"].get<std::string>();
  if (body.contains("context") && body["context"].is_array()) rec.context = body["context"].get<std::vector<std::string>>();
  std::size_t n = log_.size();
  log_.push_back(std::move(rec));

  json reply;
  if (generator_) {
    reply["output"] = generate(body.value("schema", json::object()), 0);
    reply["confidence"] = static_cast<double>(30 + rng_() % 71) / 100.0;  // 0.30 .. 1.00
    return {200, reply.dump()};
  }
  if (n >= steps_.size())
    throw RuntimeFault("ScriptExhausted", "mock script has " + std::to_string(steps_.size()) + " steps, call " +
                                              std::to_string(n + 1) + " has none");
  const Step& step = steps_[n];
  if (step.malformed) return {200, "<<malformed model output>>"};
  reply["output"] = step.response;
  if (step.confidence) reply["confidence"] = *step.confidence;
  return {200, reply.dump()};
}

std::vector<CallRecord> MockTransport::call_log() const {
  std::lock_guard lock(mu_);
  auto out = log_;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return out;
}

std::size_t MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

HttpRequest resolve_config(const HttpConfig& config, const Environment& env) {
  HttpRequest req;
  req.method = config.method;
  req.url = config.url;
  req.body = config.body;
  for (const auto& [name, tmpl] : config.headers) {
    std::string value;
    std::size_t i = 0;
    while (i < tmpl.size()) {
      auto at = tmpl.find("$env:", i);
      if (at == std::string::npos) {
        value += tmpl.substr(i);
        break;
      }
      value += tmpl.substr(i, at - i);
      std::size_t j = at + 5;
      while (j < tmpl.size() && (std::isalnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
      std::string var = tmpl.substr(at + 5, j - at - 5);
      auto resolved = env.get(var);
      if (!resolved) throw RuntimeFault("CapabilityError", "environment variable " + var + " is not set");
      value += *resolved;
      i = j;
    }
    req.headers.emplace_back(name, std::move(value));
  }
  return req;
}

InferenceResult InferenceEngine::infer_once(const InferenceRequest& request) {
  ++calls_;
  HttpConfig cfg = driver_->transform_request(request);
  HttpRequest req = resolve_config(cfg, *env_);
  HttpResponse res;
  try {
    res = executor_->execute(req);
  } catch (const RuntimeFault&) {
    throw;
  } catch (const std::exception& e) {
    throw RuntimeFault("IoError", std::string("inference transport failed: ") + e.what());
  }
  spdlog::debug("infer via {} -> status {}", driver_->name(), res.status);
  if (res.status < 200 || res.status >= 300)
    throw DriverError("provider returned status " + std::to_string(res.status));
  return driver_->transform_response(res.body);
}

}  // namespace turn
