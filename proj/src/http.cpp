#include "turn/http.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace turn {

std::optional<std::string> ProcessEnvironment::get(const std::string& name) const {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

void ProcessEnvironment::set(const std::string& name, const std::string& value) {
  ::setenv(name.c_str(), value.c_str(), 1);
}

std::optional<std::string> MapEnvironment::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = vars_.find(name);
  if (it == vars_.end()) return std::nullopt;
  return it->second;
}

void MapEnvironment::set(const std::string& name, const std::string& value) {
  std::lock_guard lock(mu_);
  vars_[name] = value;
}

HttpResponse HttplibExecutor::execute(const HttpRequest& request) {
  const std::string& url = request.url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::runtime_error("not an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  std::string base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client cli(base);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_follow_location(true);
  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (std::equal(k.begin(), k.end(), std::string_view("content-type").begin(), std::string_view("content-type").end(),
                   [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; }))
      content_type = v;
    else
      headers.emplace(k, v);
  }
  spdlog::debug("http {} {}", request.method, url);
  httplib::Result res;
  if (request.method == "GET")
    res = cli.Get(path, headers);
  else if (request.method == "POST")
    res = cli.Post(path, headers, request.body, content_type);
  else
    throw std::runtime_error("unsupported HTTP method " + request.method);
  if (!res) throw std::runtime_error(request.method + " " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

void CannedExecutor::add(const std::string& method, const std::string& url, HttpResponse response) {
  std::lock_guard lock(mu_);
  routes_[method + " " + url] = std::move(response);
}

void CannedExecutor::set_default(HttpResponse response) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(response);
}

HttpResponse CannedExecutor::execute(const HttpRequest& request) {
  std::lock_guard lock(mu_);
  seen_.push_back(request);
  auto it = routes_.find(request.method + " " + request.url);
  if (it != routes_.end()) return it->second;
  if (fallback_) return *fallback_;
  return {404, "not found"};
}

std::vector<HttpRequest> CannedExecutor::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

}  // namespace turn
