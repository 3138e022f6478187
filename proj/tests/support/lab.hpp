#pragma once

#include <memory>
#include <string>

#include "nosqlab/service.hpp"

namespace testsupport {

struct HttpReply {
  int status = 0;  // 0 when the exchange failed
  std::string body;
  nosqlab::Value json() const;
};

// A seeded lab service listening on an ephemeral loopback port.
class RunningLab {
 public:
  explicit RunningLab(nosqlab::service::ServiceConfig config = {});
  ~RunningLab();

  int port() const { return port_; }
  std::string base_url() const;
  nosqlab::service::LabService& service() { return *service_; }

  HttpReply post(const std::string& path, const std::string& body,
                 const std::string& content_type = "application/x-www-form-urlencoded");
  HttpReply get(const std::string& path, const std::string& role = "");

 private:
  std::unique_ptr<nosqlab::service::LabService> service_;
  std::unique_ptr<nosqlab::service::HttpServer> server_;
  int port_ = 0;
};

std::string read_file(const std::string& path);

}  // namespace testsupport
