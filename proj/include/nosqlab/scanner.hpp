#pragma once

// DAST scanner: per-class payload catalog, HTTP probes and differential
// baseline-vs-attack oracles.
//
// Target config (JSON):
//   {"base_url": "http://127.0.0.1:8080", "known_username": "tolkien",
//    "endpoints": [{"path": "/vuln/login-array", "method": "POST",
//                   "params": ["username", "password"],
//                   "bad_credentials": ["nobody", "wrong"],
//                   "enable_post_checks": false,
//                   "classes": ["ArrayInjection"]}]}
// `classes` is optional; it defaults from the endpoint shape: two or more
// params is a login form, one param a script field, none an insert route.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nosqlab/value.hpp"

namespace nosqlab::scanner {

enum class AttackClass { ArrayInjection, OrInjection, JsInjection, CsrfProbe };

inline constexpr AttackClass kAllClasses[] = {AttackClass::ArrayInjection, AttackClass::OrInjection,
                                              AttackClass::JsInjection, AttackClass::CsrfProbe};

std::string_view class_name(AttackClass cls);
std::optional<AttackClass> parse_class(std::string_view name);

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProbeError : public Error {
 public:
  using Error::Error;
};

class ScanError : public Error {
 public:
  using Error::Error;
};

struct Payload {
  AttackClass cls{};
  std::string name;
  std::string method = "POST";
  std::string content_type = "application/x-www-form-urlencoded";
  std::string body;  // exactly what goes on the wire
  std::string notes;
  // Intended (raw key, value) pairs for urlencoded bodies, before encoding.
  std::vector<std::pair<std::string, std::string>> fields;
};

struct Observation {
  int status = 0;
  std::string body_digest;  // the response's "status" field, or "<opaque>"
  std::chrono::milliseconds latency{0};

  // Latency is measurement noise and takes no part in equality.
  friend bool operator==(const Observation& a, const Observation& b) {
    return a.status == b.status && a.body_digest == b.body_digest;
  }
};

enum class EndpointShape { Login, Field, Insert };

struct EndpointSpec {
  std::string path;
  std::string method = "POST";
  std::vector<std::string> params;
  std::vector<std::string> bad_credentials;  // aligned with params
  bool enable_post_checks = false;
  std::vector<AttackClass> classes;

  EndpointShape shape() const;
};

struct TargetConfig {
  std::string base_url;
  std::string known_username = "admin";
  std::vector<EndpointSpec> endpoints;
};

TargetConfig parse_config(std::string_view json_text);
TargetConfig load_config(const std::string& path);  // ConfigError if unreadable

// Per-run inputs to payload generation.
struct CatalogContext {
  std::string known_username;
  std::string marker;  // unique per scan run, used for marker collections/fields
};

// Throws ConfigError when the class does not fit the endpoint shape.
std::vector<Payload> generate_payloads(AttackClass cls, const EndpointSpec& spec, const CatalogContext& ctx);

// Percent-encoded `k=v&...` body.
std::string encode_fields(const std::vector<std::pair<std::string, std::string>>& fields);

// Extracts the JSON "status" member, else "<opaque>".
std::string digest_body(std::string_view body);

class Prober {
 public:
  virtual ~Prober() = default;
  // 4xx/5xx are data; transport failures raise ProbeError.
  virtual Observation send(const std::string& method, const std::string& path, const std::string& content_type,
                           const std::string& body) = 0;
  // Raw GET body for post checks.
  virtual std::string fetch(const std::string& path) = 0;
};

// cpp-httplib client with 5 s timeouts.
class HttpProber : public Prober {
 public:
  explicit HttpProber(std::string base_url);
  Observation send(const std::string& method, const std::string& path, const std::string& content_type,
                   const std::string& body) override;
  std::string fetch(const std::string& path) override;

 private:
  std::string base_url_;
};

Observation probe(Prober& prober, const EndpointSpec& endpoint, const Payload& payload);

struct Baselines {
  Observation bad_creds;
  Observation malformed;
};

Baselines collect_baselines(Prober& prober, const EndpointSpec& endpoint);

struct Finding {
  AttackClass cls{};
  std::string endpoint;
  std::string payload_name;
  Observation baseline;
  Observation attack;
  std::string severity = "high";
  std::string confidence = "high";  // "low" for JsInjection without post checks

  friend bool operator==(const Finding&, const Finding&) = default;
};

// Post-check result: nullopt when post checks are off for the endpoint.
std::optional<Finding> detect(AttackClass cls, const Baselines& baselines, const Observation& attack,
                              std::optional<bool> post_check_hit);

struct ProbeCount {
  std::string endpoint;
  std::int64_t probes = 0;
  friend bool operator==(const ProbeCount&, const ProbeCount&) = default;
};

struct Report {
  std::string scanned_at;
  std::string target;
  std::vector<Finding> findings;
  std::vector<std::string> unreachable;
  std::vector<ProbeCount> probe_counts;
  std::int64_t duration_ms = 0;

  friend bool operator==(const Report&, const Report&) = default;
};

struct ScanOptions {
  std::optional<std::string> scanned_at;  // injected timestamp; default is now (UTC)
  std::optional<std::string> marker;      // default is random
};

// Throws ScanError when no endpoint is reachable.
Report scan(const TargetConfig& config, Prober& prober, const ScanOptions& options = {});
Report scan(const TargetConfig& config, const ScanOptions& options = {});

enum class ReportFormat { Json, Text };
std::optional<ReportFormat> parse_format(std::string_view name);

std::string render_report(const Report& report, ReportFormat format);
// Inverse of the JSON rendering. Latencies are not serialized.
Report parse_report(std::string_view json_text);

// 0 = no findings, 1 = findings.
int exit_code(const Report& report);

}  // namespace nosqlab::scanner
