#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace turn {

// Host environment variables. Injectable so tests never touch the real one.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::optional<std::string> get(const std::string& name) const = 0;
  virtual void set(const std::string& name, const std::string& value) = 0;
};

class ProcessEnvironment : public Environment {
 public:
  std::optional<std::string> get(const std::string& name) const override;
  void set(const std::string& name, const std::string& value) override;
};

class MapEnvironment : public Environment {
 public:
  MapEnvironment() = default;
  explicit MapEnvironment(std::map<std::string, std::string> vars) : vars_(std::move(vars)) {}
  std::optional<std::string> get(const std::string& name) const override;
  void set(const std::string& name, const std::string& value) override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> vars_;
};

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Performs resolved requests. Implementations throw std::runtime_error on
// transport failure.
class HttpExecutor {
 public:
  virtual ~HttpExecutor() = default;
  virtual HttpResponse execute(const HttpRequest& request) = 0;
};

class HttplibExecutor : public HttpExecutor {
 public:
  explicit HttplibExecutor(int timeout_seconds = 60) : timeout_(timeout_seconds) {}
  HttpResponse execute(const HttpRequest& request) override;

 private:
  int timeout_;
};

// Answers from a fixed table keyed by "METHOD url"; unknown routes get 404.
// Keeps every request it saw.
class CannedExecutor : public HttpExecutor {
 public:
  void add(const std::string& method, const std::string& url, HttpResponse response);
  // Fallback for any request that has no exact route.
  void set_default(HttpResponse response);
  HttpResponse execute(const HttpRequest& request) override;
  std::vector<HttpRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, HttpResponse> routes_;
  std::optional<HttpResponse> fallback_;
  std::vector<HttpRequest> seen_;
};

}  // namespace turn
