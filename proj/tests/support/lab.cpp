#include "lab.hpp"

#include <httplib.h>

#include <fstream>
#include <iterator>
#include <stdexcept>

namespace testsupport {

nosqlab::Value HttpReply::json() const { return nosqlab::parse_json(body); }

RunningLab::RunningLab(nosqlab::service::ServiceConfig config)
    : service_(std::make_unique<nosqlab::service::LabService>(config)),
      server_(std::make_unique<nosqlab::service::HttpServer>(*service_)) {
  port_ = server_->bind("127.0.0.1", 0);
  server_->start();
}

RunningLab::~RunningLab() { server_->stop(); }

std::string RunningLab::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

HttpReply RunningLab::post(const std::string& path, const std::string& body, const std::string& content_type) {
  httplib::Client client("127.0.0.1", port_);
  client.set_read_timeout(10, 0);
  client.set_tcp_nodelay(true);
  auto res = content_type.empty() ? client.Post(path, httplib::Headers{}, body, "")
                                  : client.Post(path, body, content_type);
  if (!res) return {};
  return {res->status, res->body};
}

HttpReply RunningLab::get(const std::string& path, const std::string& role) {
  httplib::Client client("127.0.0.1", port_);
  client.set_read_timeout(10, 0);
  client.set_tcp_nodelay(true);
  httplib::Headers headers;
  if (!role.empty()) headers.emplace("X-Role", role);
  auto res = client.Get(path, headers);
  if (!res) return {};
  return {res->status, res->body};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testsupport
