#pragma once

// HTTP front end for the sandbox and the matching remote executor.
//
//   POST /execute  {"name", "arguments"} -> {"ok", "value"|"error"}
//   GET  /tools    -> [ToolSpec...]
//   GET  /health   -> {"status": "ok"}
//
// Execution failures are always 200 with ok=false; only malformed request
// bodies get a 400.

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "mentor/sandbox.hpp"

namespace mentor {

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;

  static BindAddress parse(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) throw Error("bad_address", "expected <addr:port>, got '" + text + "'");
    BindAddress a;
    a.host = text.substr(0, colon);
    try {
      std::size_t used = 0;
      a.port = std::stoi(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("bad_address", "invalid port in '" + text + "'");
    }
    if (a.host.empty() || a.port < 0 || a.port > 65535) throw Error("bad_address", "invalid address '" + text + "'");
    return a;
  }
};

inline ExecutionRequest request_from_json(const Json& body) {
  if (!body.is_object() || !body.contains("name") || !body["name"].is_string()) {
    throw Error("bad_request", "request requires string field 'name'");
  }
  ExecutionRequest req;
  req.name = body["name"].get<std::string>();
  req.arguments = body.contains("arguments") ? body["arguments"] : Json::object();
  return req;
}

inline Json request_to_json(const ExecutionRequest& req) {
  return Json{{"name", req.name}, {"arguments", req.arguments}};
}

/// A running sandbox service. Stops and joins on destruction.
class ServiceHandle {
 public:
  ServiceHandle(std::shared_ptr<const Sandbox> sandbox, const BindAddress& addr)
      : sandbox_(std::move(sandbox)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
    if (addr.port == 0) {
      port_ = server_->bind_to_any_port(addr.host);
    } else {
      port_ = server_->bind_to_port(addr.host, addr.port) ? addr.port : -1;
    }
    if (port_ < 0) {
      throw Error("bind_failed", "cannot bind " + addr.host + ":" + std::to_string(addr.port));
    }
    host_ = addr.host;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }

  ServiceHandle(const ServiceHandle&) = delete;
  ServiceHandle& operator=(const ServiceHandle&) = delete;

  ~ServiceHandle() { stop(); }

  int port() const { return port_; }
  std::string url() const { return "http://" + host_ + ":" + std::to_string(port_); }

  void stop() {
    if (stopped_.exchange(true)) return;
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void install_routes() {
    auto json_reply = [](httplib::Response& res, const Json& j, int status = 200) {
      res.status = status;
      res.set_content(j.dump(), "application/json");
    };
    server_->Post("/execute", [this, json_reply](const httplib::Request& req, httplib::Response& res) {
      Json body = Json::parse(req.body, nullptr, false);
      ExecutionRequest call;
      try {
        if (body.is_discarded()) throw Error("bad_request", "request body is not JSON");
        call = request_from_json(body);
      } catch (const Error& e) {
        json_reply(res, Json{{"error", e.code()}, {"message", e.what()}}, 400);
        return;
      }
      json_reply(res, observation_to_json(sandbox_->execute(call)));
    });
    server_->Get("/tools", [this, json_reply](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      for (const auto& s : sandbox_->specs()) list.push_back(spec_to_json(s));
      json_reply(res, list);
    });
    server_->Get("/health", [json_reply](const httplib::Request&, httplib::Response& res) {
      json_reply(res, Json{{"status", "ok"}});
    });
  }

  std::shared_ptr<const Sandbox> sandbox_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = -1;
  std::atomic<bool> stopped_{false};
};

inline std::unique_ptr<ServiceHandle> serve(std::shared_ptr<const Sandbox> sandbox,
                                            const BindAddress& addr) {
  return std::make_unique<ServiceHandle>(std::move(sandbox), addr);
}

/// Executes calls against a remote sandbox service. Transport failures and
/// timeouts come back as backend_error results.
class RemoteSandbox final : public ToolExecutor {
 public:
  explicit RemoteSandbox(std::string base_url,
                         std::chrono::milliseconds deadline = std::chrono::milliseconds(5000))
      : base_url_(std::move(base_url)), deadline_(deadline) {}

  ExecutionResult execute(const ExecutionRequest& req) const override {
    httplib::Client client(base_url_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(deadline_);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(deadline_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post("/execute", request_to_json(req).dump(), "application/json");
    if (!res) {
      return Observation::failure(ErrorKind::backend_error,
                                  "sandbox transport failure: " + httplib::to_string(res.error()));
    }
    Json body = Json::parse(res->body, nullptr, false);
    if (res->status != 200 || body.is_discarded()) {
      return Observation::failure(ErrorKind::backend_error,
                                  "sandbox returned HTTP " + std::to_string(res->status));
    }
    try {
      return observation_from_json(body);
    } catch (const Error& e) {
      return Observation::failure(ErrorKind::backend_error, e.what());
    }
  }

 private:
  std::string base_url_;
  std::chrono::milliseconds deadline_;
};

}  // namespace mentor
