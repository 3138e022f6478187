#pragma once

// The lab target: each vulnerable request-processing stack under /vuln/,
// its hardened twin under /safe/, the REST insert API, RBAC-scoped reads
// and an optional state inspection endpoint.
//
//   POST /vuln/login-array    /safe/login-array     form body
//   POST /vuln/login-concat   /safe/login-concat    form body
//   POST /vuln/mapreduce      /safe/mapreduce       form body or ?field=
//   POST /rest/{collection}                         open or json-only
//   GET  /safe/data                                 X-Role: user|admin
//   GET  /__state/{collection}                      when enabled

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "nosqlab/document_store.hpp"
#include "nosqlab/value.hpp"

namespace httplib {
class Server;
}

namespace nosqlab::service {

enum class RestMode { Open, JsonOnly };
enum class Variant { Vuln, Safe };

std::optional<RestMode> parse_rest_mode(std::string_view text);
std::string_view rest_mode_name(RestMode mode);

inline constexpr std::size_t kMaxBodyBytes = 1 << 20;
inline constexpr int kRequestTimeoutSeconds = 5;

struct ServiceConfig {
  RestMode rest_mode = RestMode::Open;
  bool enable_state = false;
  // Test hook: the safe login-array twin skips its cast, as if the
  // mitigation had been forgotten.
  bool disable_safe_cast = false;
};

struct Request {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> headers;  // lower-case names
  std::multimap<std::string, std::string> query;
  std::string body;

  std::optional<std::string_view> header(std::string_view name) const;
};

struct Response {
  int status = 200;
  Value body;
};

// Deterministic fixtures: 5 logins, 2 stores, role-tagged data.
// Throws Error if the store is already seeded.
void seed_fixtures(store::Store& store);

// The fixture document as checked in (parsed).
const Value& fixture_document();

// The mapReduce statement the vulnerable endpoint executes for `field`.
std::string build_mapreduce_statement(std::string_view field);

class LabService {
 public:
  explicit LabService(ServiceConfig config);

  const ServiceConfig& config() const { return config_; }
  store::SharedStore& store() { return store_; }

  // Never throws; unexpected failures become 500.
  Response handle(const Request& request);

  Response handle_login_array(Variant variant, std::string_view body);
  Response handle_login_concat(Variant variant, std::string_view body);
  Response handle_mapreduce(Variant variant, std::string_view field);
  Response handle_rest_insert(const Request& request, std::string_view collection);
  Response handle_find_rbac(const Request& request);
  Response handle_state(std::string_view collection);

 private:
  Response dispatch(const Request& request);

  ServiceConfig config_;
  store::SharedStore store_;
};

class BindError : public Error {
 public:
  using Error::Error;
};

// cpp-httplib front end for a LabService.
class HttpServer {
 public:
  explicit HttpServer(LabService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks an ephemeral port. Returns the bound port; throws BindError.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void start();  // listen() on a background thread
  void stop();

  int port() const { return port_; }

 private:
  LabService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace nosqlab::service
