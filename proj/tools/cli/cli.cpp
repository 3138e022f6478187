#include "cli/cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <ostream>
#include <thread>

#include "nosqlab/scanner.hpp"
#include "nosqlab/service.hpp"

namespace nosqlab::cli {

namespace {

using scanner::AttackClass;
using service::HttpServer;
using service::LabService;
using service::RestMode;
using service::ServiceConfig;

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string rest_mode = "open";
  bool enable_state = false;
};

struct ScanArgs {
  std::string config_path;
  std::string format = "text";
  std::string output_path;
};

int run_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  ServiceConfig config;
  config.rest_mode = *service::parse_rest_mode(args.rest_mode);
  config.enable_state = args.enable_state;
  LabService lab(config);
  HttpServer server(lab);
  int port = 0;
  try {
    port = server.bind(args.host, args.port);
  } catch (const service::BindError& e) {
    err << "nosqlab serve: " << e.what() << "\n";
    return 2;
  }

  // SIGINT/SIGTERM are taken synchronously by a watcher thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });

  out << "nosqlab lab (NOT FOR DEPLOYMENT) listening on http://" << args.host << ":" << port
      << " rest-mode=" << service::rest_mode_name(config.rest_mode)
      << " state-endpoint=" << (config.enable_state ? "on" : "off") << std::endl;
  server.listen();
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return 0;
}

int run_scan(const ScanArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const scanner::TargetConfig config = scanner::load_config(args.config_path);
    const scanner::Report report = scanner::scan(config);
    const std::string rendered = scanner::render_report(report, *scanner::parse_format(args.format));
    if (args.output_path.empty()) {
      out << rendered;
    } else {
      std::ofstream file(args.output_path, std::ios::binary);
      if (!file || !(file << rendered)) {
        err << "nosqlab scan: cannot write " << args.output_path << "\n";
        return 2;
      }
    }
    return scanner::exit_code(report);
  } catch (const Error& e) {
    err << "nosqlab scan: " << e.what() << "\n";
    return 2;
  }
}

scanner::TargetConfig lab_config(int port, bool hardened) {
  const std::string prefix = hardened ? "/safe" : "/vuln";
  scanner::TargetConfig config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.known_username = "tolkien";
  auto add = [&](std::string path, std::vector<std::string> params, std::vector<std::string> bad, bool post_checks) {
    scanner::EndpointSpec spec;
    spec.path = std::move(path);
    spec.params = std::move(params);
    spec.bad_credentials = std::move(bad);
    spec.enable_post_checks = post_checks;
    switch (spec.shape()) {
      case scanner::EndpointShape::Login: spec.classes = {AttackClass::ArrayInjection, AttackClass::OrInjection}; break;
      case scanner::EndpointShape::Field: spec.classes = {AttackClass::JsInjection}; break;
      case scanner::EndpointShape::Insert: spec.classes = {AttackClass::CsrfProbe}; break;
    }
    config.endpoints.push_back(std::move(spec));
  };
  add(prefix + "/login-array", {"username", "password"}, {"nobody", "wrong"}, false);
  add(prefix + "/login-concat", {"username", "password"}, {"nobody", "wrong"}, false);
  add(prefix + "/mapreduce", {"field"}, {"amount"}, true);
  add("/rest/demo", {}, {}, false);
  return config;
}

const char* narrative(AttackClass cls) {
  switch (cls) {
    case AttackClass::ArrayInjection:
      return "form arrays: username[$ne]=1&password[$ne]=1 decodes into operator objects and the login "
             "query matches every user. Hardened twin: both fields are cast to text, nested input is refused.";
    case AttackClass::OrInjection:
      return "string concatenation: a quote in the username opens an $or with an always-true empty clause and "
             "the password check is swallowed by $comment. Hardened twin: quotes and backslashes are escaped.";
    case AttackClass::JsInjection:
      return "script injection: the field name closes the map function and runs an insert inside the "
             "database. Hardened twin: the field must be amount or price.";
    case AttackClass::CsrfProbe:
      return "REST via HTML form: a urlencoded POST is stored as a document, so any web page can write. "
             "Hardened twin: json-only mode answers 415.";
  }
  return "";
}

bool has_class(const scanner::Report& report, AttackClass cls, bool require_high) {
  for (const scanner::Finding& f : report.findings)
    if (f.cls == cls && (!require_high || f.confidence == "high")) return true;
  return false;
}

}  // namespace

int run_demo(const DemoOptions& options, std::ostream& out, std::ostream& err) {
  out << "nosqlab demo: lab only, never deploy this service.\n";
  ServiceConfig vuln_config{RestMode::Open, true, false};
  ServiceConfig safe_config{RestMode::JsonOnly, true, options.disable_safe_cast};
  LabService vuln_lab(vuln_config);
  LabService safe_lab(safe_config);
  HttpServer vuln_server(vuln_lab);
  HttpServer safe_server(safe_lab);
  scanner::Report vuln_report, safe_report;
  try {
    const int vuln_port = vuln_server.bind("127.0.0.1", 0);
    const int safe_port = safe_server.bind("127.0.0.1", 0);
    vuln_server.start();
    safe_server.start();
    out << "vulnerable lab on port " << vuln_port << ", hardened lab on port " << safe_port << "\n";
    vuln_report = scanner::scan(lab_config(vuln_port, false));
    safe_report = scanner::scan(lab_config(safe_port, true));
  } catch (const Error& e) {
    err << "nosqlab demo: " << e.what() << "\n";
    return 2;
  }
  vuln_server.stop();
  safe_server.stop();

  out << "\n-- vulnerable lab --\n" << scanner::render_report(vuln_report, scanner::ReportFormat::Text);
  out << "\n-- hardened lab --\n" << scanner::render_report(safe_report, scanner::ReportFormat::Text) << "\n";

  std::vector<std::string> failed;
  for (AttackClass cls : scanner::kAllClasses) {
    const std::string name(scanner::class_name(cls));
    const bool reproduced = has_class(vuln_report, cls, true);
    const bool resisted = !has_class(safe_report, cls, false);
    out << name << ": " << narrative(cls) << "\n";
    out << "  stage " << name << "-vulnerable: " << (reproduced ? "reproduced" : "FAILED") << "\n";
    out << "  stage " << name << "-hardened: " << (resisted ? "resisted" : "FAILED") << "\n";
    if (!reproduced) failed.push_back(name + "-vulnerable");
    if (!resisted) failed.push_back(name + "-hardened");
  }
  if (failed.empty()) {
    out << "demo passed: all four attacks reproduced and all hardened twins resisted\n";
    return 0;
  }
  for (const std::string& stage : failed) err << "demo failed at stage " << stage << "\n";
  return 1;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nosqlab: NoSQL injection lab. Deliberately vulnerable; not for deployment.", "nosqlab"};
  app.require_subcommand(1, 1);

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the lab service (seeded fixtures)");
  serve->add_option("--host", serve_args.host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_args.port, "Port, 0 for ephemeral")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--rest-mode", serve_args.rest_mode, "REST insert policy")
      ->check(CLI::IsMember({"open", "json-only"}))
      ->capture_default_str();
  serve->add_flag("--enable-state-endpoint", serve_args.enable_state, "Expose GET /__state/{collection}");

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Scan a target described by a JSON config");
  scan->add_option("--config", scan_args.config_path, "Target config file")->required();
  scan->add_option("--format", scan_args.format, "Report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  scan->add_option("--output", scan_args.output_path, "Write the report here instead of stdout");

  DemoOptions demo_options;
  auto* demo = app.add_subcommand("demo", "Serve, scan and narrate all four attacks in-process");
  demo->add_flag("--test-disable-safe-cast", demo_options.disable_safe_cast, "Mutation hook for tests")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (*serve) return run_serve(serve_args, out, err);
  if (*scan) return run_scan(scan_args, out, err);
  return run_demo(demo_options, out, err);
}

}  // namespace nosqlab::cli
