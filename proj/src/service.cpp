#include "nosqlab/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>

#include "nosqlab/form_decoder.hpp"
#include "nosqlab/relaxed_query.hpp"
#include "nosqlab/sanitizer.hpp"
#include "nosqlab/script/interpreter.hpp"

namespace nosqlab::service {

namespace detail {
extern const std::string_view kFixtureJson;
}

namespace {

using sanitizer::Role;
using sanitizer::SanitizeError;

Response reply(int status, std::string_view state) { return {status, Object{{"status", Value(state)}}}; }

Response reply(int status, std::string_view state, std::string key, Value extra) {
  Object body{{"status", Value(state)}};
  body.set(std::move(key), std::move(extra));
  return {status, std::move(body)};
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string media_type(std::optional<std::string_view> content_type) {
  if (!content_type) return {};
  std::string_view media = content_type->substr(0, content_type->find(';'));
  while (!media.empty() && (media.front() == ' ' || media.front() == '\t')) media.remove_prefix(1);
  while (!media.empty() && (media.back() == ' ' || media.back() == '\t')) media.remove_suffix(1);
  return lower(media);
}

bool valid_collection_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

Value field_value(const form::FormTree& tree, std::string_view name) {
  const form::FormTree* node = tree.find(name);
  return node ? form::form_to_value(*node) : Value();
}

// Concat endpoints take raw texts; nested input collapses to its JSON text.
std::string field_text(const form::FormTree& tree, std::string_view name) {
  const form::FormTree* node = tree.find(name);
  if (!node) return {};
  if (node->is_leaf()) return node->leaf();
  return to_json(form::form_to_value(*node));
}

Response login_result(const std::vector<Object>& matches) {
  if (matches.empty()) return reply(401, "denied");
  const Value* user = matches.front().find("username");
  return reply(200, "ok", "user", user ? *user : Value());
}

const std::string_view kMapTemplateHead =
    "function() {\n  for (var i = 0; i < this.items.length; i++) {\n    emit(this.name, this.items[i].";
const std::string_view kMapTemplateTail = "); } }";
const std::string_view kReduceSource = "function(name, sum) { return Array.sum(sum); }";
const std::string_view kOptionsSource = "{ out: 'totals' }";

const std::set<std::string, std::less<>> kAllowedFields{"amount", "price"};

bool path_has_prefix(std::string_view path, std::string_view prefix, std::string_view& rest) {
  if (path.substr(0, prefix.size()) != prefix) return false;
  rest = path.substr(prefix.size());
  return true;
}

}  // namespace

std::optional<RestMode> parse_rest_mode(std::string_view text) {
  if (text == "open") return RestMode::Open;
  if (text == "json-only" || text == "json_only") return RestMode::JsonOnly;
  return std::nullopt;
}

std::string_view rest_mode_name(RestMode mode) { return mode == RestMode::Open ? "open" : "json-only"; }

std::optional<std::string_view> Request::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  if (it == headers.end()) return std::nullopt;
  return std::string_view(it->second);
}

const Value& fixture_document() {
  static const Value doc = parse_json(detail::kFixtureJson);
  return doc;
}

void seed_fixtures(store::Store& store) {
  if (!store.empty()) throw Error("store already seeded");
  for (const auto& [name, docs] : fixture_document().as_object())
    for (const Value& doc : docs.as_array()) store.insert(name, doc);
}

std::string build_mapreduce_statement(std::string_view field) {
  std::string map;
  map.append(kMapTemplateHead).append(field).append(kMapTemplateTail);
  std::string out = "db.stores.mapReduce(";
  out.append(map).append(", ").append(kReduceSource).append(", ").append(kOptionsSource).append(");");
  return out;
}

LabService::LabService(ServiceConfig config) : config_(config) {
  store_.write([](store::Store& s) { seed_fixtures(s); });
}

Response LabService::handle(const Request& request) {
  try {
    if (request.body.size() > kMaxBodyBytes) return reply(413, "payload_too_large");
    return dispatch(request);
  } catch (const std::exception& e) {
    return reply(500, "error", "error", Value(e.what()));
  } catch (...) {
    return reply(500, "error");
  }
}

Response LabService::dispatch(const Request& request) {
  const std::string_view path = request.path;
  const bool post = request.method == "POST";
  const bool get = request.method == "GET";
  std::string_view rest;

  struct Route {
    std::string_view path;
    Variant variant;
    int kind;
  };
  static constexpr Route kRoutes[] = {
      {"/vuln/login-array", Variant::Vuln, 0},  {"/safe/login-array", Variant::Safe, 0},
      {"/vuln/login-concat", Variant::Vuln, 1}, {"/safe/login-concat", Variant::Safe, 1},
      {"/vuln/mapreduce", Variant::Vuln, 2},    {"/safe/mapreduce", Variant::Safe, 2},
  };
  for (const Route& route : kRoutes) {
    if (path != route.path) continue;
    if (!post) return reply(405, "method_not_allowed");
    switch (route.kind) {
      case 0: return handle_login_array(route.variant, request.body);
      case 1: return handle_login_concat(route.variant, request.body);
      default: {
        auto q = request.query.find("field");
        if (q != request.query.end()) return handle_mapreduce(route.variant, q->second);
        const form::FormTree tree = form::decode_form(request.body);
        const form::FormTree* field = tree.find("field");
        if (!field) return reply(400, "missing_field");
        if (!field->is_leaf()) return reply(400, "bad_input");
        return handle_mapreduce(route.variant, field->leaf());
      }
    }
  }

  if (path_has_prefix(path, "/rest/", rest)) {
    if (!post) return reply(405, "method_not_allowed");
    return handle_rest_insert(request, rest);
  }
  if (path == "/safe/data") {
    if (!get) return reply(405, "method_not_allowed");
    return handle_find_rbac(request);
  }
  if (path_has_prefix(path, "/__state/", rest)) {
    if (!config_.enable_state) return reply(404, "not_found");
    if (!get) return reply(405, "method_not_allowed");
    return handle_state(rest);
  }
  return reply(404, "not_found");
}

Response LabService::handle_login_array(Variant variant, std::string_view body) {
  const form::FormTree tree = form::decode_form(body);
  Value username = field_value(tree, "username");
  Value password = field_value(tree, "password");
  if (variant == Variant::Safe && !config_.disable_safe_cast) {
    try {
      username = sanitizer::cast_scalar_text(username);
      password = sanitizer::cast_scalar_text(password);
    } catch (const SanitizeError&) {
      return reply(400, "bad_input");
    }
  }
  const Object query{{"username", std::move(username)}, {"password", std::move(password)}};
  try {
    return login_result(store_.read([&](const store::Store& s) { return s.find("logins", query); }));
  } catch (const store::QueryError& e) {
    return reply(400, "bad_query", "error", Value(e.what()));
  }
}

Response LabService::handle_login_concat(Variant variant, std::string_view body) {
  const form::FormTree tree = form::decode_form(body);
  std::string username = field_text(tree, "username");
  std::string password = field_text(tree, "password");
  if (variant == Variant::Safe) {
    username = sanitizer::escape_string_literal(username);
    password = sanitizer::escape_string_literal(password);
  }
  const std::string text = relaxed::build_concat_login_query(username, password);
  try {
    const Value query = relaxed::parse_relaxed(text);
    if (!query.is_object()) return reply(400, "bad_query");
    return login_result(store_.read([&](const store::Store& s) { return s.find("logins", query.as_object()); }));
  } catch (const relaxed::ParseError& e) {
    return reply(400, "bad_query", "error", Value(e.what()));
  } catch (const store::QueryError& e) {
    return reply(400, "bad_query", "error", Value(e.what()));
  }
}

Response LabService::handle_mapreduce(Variant variant, std::string_view field) {
  if (variant == Variant::Safe && !sanitizer::check_field_allowlist(field, kAllowedFields))
    return reply(400, "field_not_allowed");
  const std::string source = build_mapreduce_statement(field);
  try {
    const script::ExecOutcome outcome =
        store_.write([&](store::Store& s) { return script::exec_top_level(source, s); });
    if (!outcome.completed) return reply(500, "script_error", "error", Value(outcome.error));
    return reply(200, "ok", "out", Value("totals"));
  } catch (const script::ScriptError& e) {
    return reply(500, "script_error", "error", Value(e.what()));
  }
}

Response LabService::handle_rest_insert(const Request& request, std::string_view collection) {
  if (!valid_collection_name(collection)) return reply(400, "bad_collection");
  const auto content_type = request.header("content-type");
  Value doc;
  if (config_.rest_mode == RestMode::JsonOnly) {
    if (!sanitizer::enforce_json_content_type(content_type)) return reply(415, "unsupported_media_type");
    try {
      doc = parse_json(request.body);
    } catch (const JsonError&) {
      return reply(400, "bad_body");
    }
  } else {
    try {
      doc = parse_json(request.body);
    } catch (const JsonError&) {
      if (media_type(content_type) != "application/x-www-form-urlencoded") return reply(400, "bad_body");
      doc = form::form_to_value(form::decode_form(request.body));
    }
  }
  try {
    const std::int64_t id = store_.write([&](store::Store& s) { return s.insert(collection, doc); });
    return reply(201, "created", "_id", Value(id));
  } catch (const store::DocumentError& e) {
    return reply(400, "bad_document", "error", Value(e.what()));
  }
}

Response LabService::handle_find_rbac(const Request& request) {
  Role role = Role::User;
  if (auto header = request.header("x-role")) {
    auto parsed = sanitizer::parse_role(*header);
    if (!parsed) return reply(400, "bad_role");
    role = *parsed;
  }
  Object filter;
  for (const auto& [key, value] : request.query) filter.set(key, Value(value));
  try {
    sanitizer::reject_operator_keys(Value(filter));
  } catch (const SanitizeError& e) {
    return reply(400, "operator_rejected", "error", Value(e.detail()));
  }
  const std::vector<Object> docs = store_.read([&](const store::Store& s) { return s.find("data", filter); });
  Array visible;
  for (const Object& doc : docs) {
    // Untagged or mis-tagged docs are treated as admin-only.
    Role required = Role::Admin;
    if (const Value* tag = doc.find("required_role"); tag && tag->is_text())
      required = sanitizer::parse_role(tag->as_text()).value_or(Role::Admin);
    if (sanitizer::rbac_check(role, required)) visible.emplace_back(doc);
  }
  return reply(200, "ok", "docs", Value(std::move(visible)));
}

Response LabService::handle_state(std::string_view collection) {
  if (!valid_collection_name(collection)) return reply(400, "bad_collection");
  Array docs;
  store_.read([&](const store::Store& s) {
    if (const store::Collection* c = s.collection(collection))
      for (const Object& doc : c->docs) docs.emplace_back(doc);
  });
  return {200, Value(std::move(docs))};
}

// ---------------------------------------------------------------------------

HttpServer::HttpServer(LabService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(kMaxBodyBytes);
  server_->set_tcp_nodelay(true);
  server_->set_read_timeout(kRequestTimeoutSeconds, 0);
  server_->set_write_timeout(kRequestTimeoutSeconds, 0);
  server_->set_keep_alive_timeout(kRequestTimeoutSeconds);
  // httplib's default adds SO_REUSEPORT, which lets a second server share the port.
  server_->set_socket_options([](int sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request request;
    request.method = req.method;
    request.path = req.path;
    request.body = req.body;
    for (const auto& [name, value] : req.headers) request.headers.emplace(lower(name), value);
    // req.params also holds urlencoded body fields; only the URL query counts.
    if (auto q = req.target.find('?'); q != std::string::npos) {
      std::string_view query = std::string_view(req.target).substr(q + 1);
      while (!query.empty()) {
        const std::string_view pair = query.substr(0, query.find('&'));
        query.remove_prefix(std::min(query.size(), pair.size() + 1));
        if (pair.empty()) continue;
        const auto eq = pair.find('=');
        request.query.emplace(form::percent_decode(pair.substr(0, eq)),
                              eq == std::string_view::npos ? std::string() : form::percent_decode(pair.substr(eq + 1)));
      }
    }
    const Response response = service_.handle(request);
    res.status = response.status;
    res.set_content(to_json(response.body), "application/json");
  };
  const std::string any = ".*";
  server_->Get(any, handler);
  server_->Post(any, handler);
  server_->Put(any, handler);
  server_->Patch(any, handler);
  server_->Delete(any, handler);
  server_->Options(any, handler);
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(R"({"status":"error"})", "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) throw BindError("cannot bind " + host + " to an ephemeral port");
  } else {
    if (!server_->bind_to_port(host, port)) throw BindError("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  return port_;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace nosqlab::service
