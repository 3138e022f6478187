// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>

#include "cli/cli.hpp"
#include "nosqlab/document_store.hpp"
#include "nosqlab/form_decoder.hpp"
#include "nosqlab/relaxed_query.hpp"
#include "nosqlab/sanitizer.hpp"
#include "nosqlab/script/interpreter.hpp"
#include "support/generators.hpp"
#include "support/lab.hpp"
#include "support/php_render.hpp"
#include "support/reference_query.hpp"

using namespace nosqlab;
using testsupport::RunningLab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Checker {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail = "failed: " + what;
    ok = ok && cond;
  }
  Outcome done(const std::string& summary) const { return {ok, ok ? summary : detail}; }
};

const std::string kForm = "application/x-www-form-urlencoded";

service::ServiceConfig config(service::RestMode mode, bool state) { return {mode, state, false}; }

// Independent reading of the fixture file: per-store totals of one item field.
std::map<std::string, std::int64_t> brute_force_totals(const std::string& field) {
  std::ifstream in(NOSQLAB_FIXTURE_FILE);
  const nlohmann::json doc = nlohmann::json::parse(in);
  std::map<std::string, std::int64_t> totals;
  for (const auto& store : doc.at("stores"))
    for (const auto& item : store.at("items")) totals[store.at("name")] += item.at(field).get<std::int64_t>();
  return totals;
}

std::map<std::string, std::int64_t> totals_from_state(const testsupport::HttpReply& r) {
  std::map<std::string, std::int64_t> totals;
  const Value docs = r.json();
  for (const Value& doc : docs.as_array())
    totals[doc.as_object().find("key")->as_text()] = doc.as_object().find("value")->as_int();
  return totals;
}

// ---------------------------------------------------------------------------

Outcome criterion_array_injection() {
  Checker c;
  RunningLab lab;
  const std::string body = "username[$ne]=1&password[$ne]=1";
  const auto vuln = lab.post("/vuln/login-array", body);
  c.expect(vuln.status == 200, "vuln status " + std::to_string(vuln.status));

  const form::FormTree tree = form::decode_form(body);
  const Object query{{"username", form::form_to_value(*tree.find("username"))},
                     {"password", form::form_to_value(*tree.find("password"))}};
  const std::size_t matched =
      lab.service().store().read([&](const store::Store& s) { return s.find("logins", query).size(); });
  const std::size_t seeded =
      lab.service().store().read([&](const store::Store& s) { return s.find("logins", {}).size(); });
  c.expect(matched == seeded && seeded == 5, "find matched " + std::to_string(matched) + " of " + std::to_string(seeded));

  const auto safe = lab.post("/safe/login-array", body);
  c.expect(safe.status == 400, "safe status " + std::to_string(safe.status));
  return c.done("vuln 200, find returns all " + std::to_string(seeded) + " users, safe 400");
}

Outcome criterion_or_injection() {
  Checker c;
  RunningLab lab;
  const std::string body = "username=" + form::percent_encode("tolkien', $or: [ {}, { 'a': 'a") +
                           "&password=" + form::percent_encode("' } ], $comment: 'successful MongoDB injection");
  const auto vuln = lab.post("/vuln/login-concat", body);
  c.expect(vuln.status == 200, "vuln status " + std::to_string(vuln.status));
  c.expect(vuln.status == 200 && vuln.json().as_object().find("user")->as_text() == "tolkien", "vuln user");
  const auto baseline = lab.post("/vuln/login-concat", "username=tolkien&password=wrong");
  c.expect(baseline.status == 401, "wrong password baseline " + std::to_string(baseline.status));
  const auto safe = lab.post("/safe/login-concat", body);
  c.expect(safe.status == 401, "safe status " + std::to_string(safe.status));
  return c.done("vuln 200 as tolkien without password, safe 401");
}

Outcome criterion_script_injection() {
  Checker c;
  RunningLab lab(config(service::RestMode::Open, true));
  for (const std::string field : {"amount", "price"}) {
    for (const char* prefix : {"/vuln", "/safe"}) {
      const auto r = lab.post(std::string(prefix) + "/mapreduce", "field=" + field);
      c.expect(r.status == 200, std::string(prefix) + " benign " + field + " status " + std::to_string(r.status));
      const auto totals = totals_from_state(lab.get("/__state/totals"));
      c.expect(totals == brute_force_totals(field), std::string(prefix) + " totals for " + field);
    }
  }

  const std::string payload =
      "a);\n  }\n},function(kv) { return 1; }, { out: 'x' });\ndb.injection.insert({success:1});\n"
      "return 1;db.stores.mapReduce(function() { { emit(1,1";
  const std::string body = "field=" + form::percent_encode(payload);
  const auto vuln = lab.post("/vuln/mapreduce", body);
  c.expect(vuln.status == 200, "vuln status " + std::to_string(vuln.status));
  const Value state = lab.get("/__state/injection").json();
  c.expect(state.as_array().size() == 1, "injection has " + std::to_string(state.as_array().size()) + " docs");
  c.expect(!state.as_array().empty() && *state.as_array()[0].as_object().find("success") == Value(1), "success:1");

  const auto safe = lab.post("/safe/mapreduce", body);
  c.expect(safe.status == 400, "safe status " + std::to_string(safe.status));
  c.expect(lab.get("/__state/injection").json().as_array().size() == 1, "safe run wrote");
  return c.done("totals match brute force, injection holds one {success:1}, safe 400");
}

Outcome criterion_rest_csrf() {
  Checker c;
  RunningLab open(config(service::RestMode::Open, true));
  RunningLab json_only(config(service::RestMode::JsonOnly, true));
  const auto a = open.post("/rest/notes", "title=planted&by=csrf");
  c.expect(a.status == 201, "open status " + std::to_string(a.status));
  c.expect(open.get("/__state/notes").json().as_array().size() == 1, "open stored");
  const auto b = json_only.post("/rest/notes", "title=planted&by=csrf");
  c.expect(b.status == 415, "json-only status " + std::to_string(b.status));
  c.expect(json_only.get("/__state/notes").json().as_array().empty(), "json-only stored");
  const auto d = json_only.post("/rest/notes", R"({"title":"legit"})", "application/json");
  c.expect(d.status == 201, "json-only json status " + std::to_string(d.status));
  return c.done("open 201, json-only 415 (and 201 for application/json)");
}

int run_cli(std::vector<std::string> args, std::string& out) {
  args.insert(args.begin(), "nosqlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  return code;
}

std::string scan_config(const RunningLab& lab, bool hardened) {
  const std::string p = hardened ? "/safe" : "/vuln";
  return R"({"base_url":")" + lab.base_url() + R"(","known_username":"tolkien","endpoints":[
    {"path":")" + p + R"(/login-array","params":["username","password"],"bad_credentials":["nobody","wrong"]},
    {"path":")" + p + R"(/login-concat","params":["username","password"],"bad_credentials":["nobody","wrong"]},
    {"path":")" + p + R"(/mapreduce","params":["field"],"bad_credentials":["amount"],"enable_post_checks":true},
    {"path":"/rest/scan"}]})";
}

Outcome criterion_scanner() {
  Checker c;
  RunningLab vuln(config(service::RestMode::Open, true));
  RunningLab safe(config(service::RestMode::JsonOnly, true));
  const auto dir = std::filesystem::temp_directory_path();
  std::string details;
  for (bool hardened : {false, true}) {
    const auto path = dir / (hardened ? "nosqlab_accept_safe.json" : "nosqlab_accept_vuln.json");
    std::ofstream(path) << scan_config(hardened ? safe : vuln, hardened);
    std::string out;
    const int code = run_cli({"scan", "--config", path.string(), "--format", "json"}, out);
    const Value report = parse_json(out);
    const Array& findings = report.as_object().find("findings")->as_array();
    std::map<std::string, int> per_class;
    for (const Value& f : findings) ++per_class[f.as_object().find("class")->as_text()];
    if (hardened) {
      c.expect(code == 0, "hardened exit " + std::to_string(code));
      c.expect(findings.empty(), "hardened findings " + std::to_string(findings.size()));
    } else {
      c.expect(code == 1, "vulnerable exit " + std::to_string(code));
      c.expect(findings.size() >= 4, "vulnerable findings " + std::to_string(findings.size()));
      for (const char* cls : {"ArrayInjection", "OrInjection", "JsInjection", "CsrfProbe"})
        c.expect(per_class[cls] >= 1, std::string("missing ") + cls);
    }
    details += (hardened ? ", hardened " : "vulnerable ") + std::to_string(findings.size()) + " findings exit " +
               std::to_string(code);
  }
  return c.done(details);
}

Outcome criterion_form_oracle() {
  Checker c;
  const Value golden = parse_json(testsupport::read_file(NOSQLAB_GOLDEN_DIR "/form_decode.json"));
  const Array& cases = golden.as_object().find("cases")->as_array();
  c.expect(cases.size() >= 20, "only " + std::to_string(cases.size()) + " fixtures");
  std::size_t matched = 0;
  for (const Value& g : cases) {
    const std::string& body = g.as_object().find("body")->as_text();
    const bool same = testsupport::php_json(form::decode_form(body)) == g.as_object().find("expected")->as_text();
    c.expect(same, "mismatch on body " + body);
    matched += same;
  }
  return c.done(std::to_string(matched) + "/" + std::to_string(cases.size()) + " golden fixtures match (" +
                golden.as_object().find("runtime")->as_text() + ")");
}

Outcome criterion_query_oracle() {
  Checker c;
  testsupport::Rng rng(7001);
  int agreed = 0, valid = 0, invalid = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto docs = testsupport::small_docs(rng);
    const Value query = testsupport::small_query(rng);
    store::Store s;
    for (const Value& d : docs) s.insert("c", d);
    const auto expected = testsupport::reference_find(docs, query);
    std::optional<std::vector<std::int64_t>> got;
    try {
      got.emplace();
      for (const Object& doc : s.find("c", query.as_object())) got->push_back(doc.find("_id")->as_int() - 1);
    } catch (const store::QueryError&) {
      got.reset();
    }
    if (!expected) {
      ++invalid;
      // an empty collection never evaluates the query
      const bool same = !got || docs.empty();
      c.expect(same, "error disagreement on " + to_json(query));
      agreed += same;
      continue;
    }
    ++valid;
    const bool same = got && std::equal(got->begin(), got->end(), expected->begin(), expected->end(),
                                        [](std::int64_t a, std::size_t b) { return a == std::int64_t(b); });
    c.expect(same, "result disagreement on " + to_json(query));
    agreed += same;
  }
  c.expect(valid >= 1000, "only " + std::to_string(valid) + " valid instances");
  return c.done(std::to_string(agreed) + "/" + std::to_string(valid + invalid) + " agree (" + std::to_string(valid) +
                " valid queries, " + std::to_string(invalid) + " invalid)");
}

Outcome criterion_escape_round_trip() {
  Checker c;
  testsupport::Rng rng(7002);
  int ok = 0;
  const int total = 2000;
  for (int trial = 0; trial < total; ++trial) {
    const std::string s = testsupport::tricky_text(rng);
    bool same = false;
    try {
      same = relaxed::parse_relaxed("{ x: '" + sanitizer::escape_string_literal(s) + "' }") == Value(Object{{"x", s}});
    } catch (const Error&) {
    }
    c.expect(same, "round trip failed for " + to_json(Value(s)));
    ok += same;
  }
  return c.done(std::to_string(ok) + "/" + std::to_string(total) + " texts round-trip");
}

Outcome criterion_rbac() {
  Checker c;
  RunningLab lab;
  testsupport::Rng rng(7003);
  const std::vector<Value> tags = {Value("user"), Value("admin"), Value("ADMIN"), Value(""), Value(),
                                   Value(0),      Value(Array{Value("user")}), Value(Object{{"$ne", "admin"}})};
  int violations = 0, user_docs = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Object> docs;
    for (int i = testsupport::uniform(rng, 0, 8); i > 0; --i) {
      Object d{{"title", "doc" + std::to_string(testsupport::uniform(rng, 0, 3))}};
      if (testsupport::chance(rng, 0.9)) d.set("required_role", tags[std::size_t(testsupport::uniform(rng, 0, 7))]);
      docs.push_back(std::move(d));
    }
    lab.service().store().write([&](store::Store& s) { s.replace("data", docs); });
    std::string path = "/safe/data";
    if (testsupport::chance(rng, 0.3)) path += "?required_role=admin";
    else if (testsupport::chance(rng, 0.3)) path += "?title=doc" + std::to_string(testsupport::uniform(rng, 0, 3));
    const auto r = lab.get(path, "user");
    c.expect(r.status == 200, "status " + std::to_string(r.status));
    if (r.status != 200) continue;
    const Value body = r.json();
    for (const Value& doc : body.as_object().find("docs")->as_array()) {
      const Value* tag = doc.as_object().find("required_role");
      if (!tag || *tag != Value("user")) ++violations;
      else ++user_docs;
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " violations");
  c.expect(user_docs > 0, "no user docs were ever returned");
  return c.done(std::to_string(violations) + " violations in " + std::to_string(trials) + " trials (" +
                std::to_string(user_docs) + " user docs returned)");
}

Outcome criterion_robustness() {
  Checker c;
  RunningLab lab(config(service::RestMode::Open, true));
  const std::vector<std::pair<std::string, std::string>> endpoints = {
      {"POST", "/vuln/login-array"}, {"POST", "/safe/login-array"}, {"POST", "/vuln/login-concat"},
      {"POST", "/safe/login-concat"}, {"POST", "/vuln/mapreduce"},  {"POST", "/safe/mapreduce"},
      {"POST", "/rest/fuzz"},         {"GET", "/safe/data"},        {"GET", "/__state/fuzz"}};
  testsupport::Rng rng(7004);
  httplib::Client client("127.0.0.1", lab.port());
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);
  client.set_read_timeout(service::kRequestTimeoutSeconds + 1, 0);
  client.set_write_timeout(service::kRequestTimeoutSeconds + 1, 0);
  int requests = 0, bad = 0;
  std::chrono::milliseconds slowest{0};
  std::size_t largest = 0;
  for (const auto& [method, path] : endpoints) {
    for (int trial = 0; trial < 1000; ++trial) {
      httplib::Request req;
      req.method = method;
      req.path = path;
      req.body = testsupport::fuzz_body(rng);
      largest = std::max(largest, req.body.size());
      req.set_header("Content-Type", testsupport::chance(rng, 0.5) ? kForm : "application/json");
      const auto start = Clock::now();
      auto res = client.send(req);
      const auto took = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
      slowest = std::max(slowest, took);
      ++requests;
      const bool good = res && res->status >= 200 && res->status <= 599 && took < std::chrono::seconds(5);
      if (!good) ++bad;
      c.expect(good, method + " " + path + " (" + std::to_string(req.body.size()) + " bytes)" + (res ? " status " + std::to_string(res->status) : " transport error " + httplib::to_string(res.error())));
    }
  }
  // The server must still answer normally afterwards.
  c.expect(lab.post("/vuln/login-array", "username=tolkien&password=hobbit").status == 200, "server unhealthy");

  // Script engine: budget exhaustion always surfaces as the budget error.
  store::Store store;
  const auto loop = script::exec_top_level("for (var i = 0; 0 < 1; i++) { }", store);
  c.expect(!loop.completed && loop.error.find("step budget") != std::string::npos, "infinite loop: " + loop.error);
  int silent = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto program = std::make_shared<script::Program>(testsupport::script_program(rng));
    program->statements.insert(program->statements.begin(),
                               script::parse_program("for (var k = 0; k < 100000; k++) { }").statements.front());
    const std::size_t budget = std::size_t(testsupport::uniform(rng, 1, 50000));
    script::Interpreter interp(&store, budget);
    const auto out = interp.run(program);
    if (interp.steps_used() > budget && (out.completed || out.error.find("step budget") == std::string::npos)) ++silent;
    if (out.completed && interp.steps_used() > budget) ++silent;
  }
  c.expect(silent == 0, std::to_string(silent) + " silent budget overruns");
  return c.done(std::to_string(requests - bad) + "/" + std::to_string(requests) + " fuzz requests answered (largest " +
                std::to_string(largest) + " bytes, slowest " + std::to_string(slowest.count()) +
                " ms); budget always enforced");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"array injection reproduction", criterion_array_injection},
      {"or injection reproduction", criterion_or_injection},
      {"script injection reproduction", criterion_script_injection},
      {"rest form insert vs json-only", criterion_rest_csrf},
      {"scanner end-to-end", criterion_scanner},
      {"form decoder oracle", criterion_form_oracle},
      {"query evaluator oracle", criterion_query_oracle},
      {"escaping round trip", criterion_escape_round_trip},
      {"rbac property", criterion_rbac},
      {"robustness", criterion_robustness},
  };
  const auto start = Clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail << " ["
              << ms << " ms]" << std::endl;
  }
  const auto total = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed in " << total << " ms"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
