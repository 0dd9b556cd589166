// Copyright 2026 The trajal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "trajal/service/registry.hpp"

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <string>

namespace trajal::service
{

/// HTTP front end of a Registry. JSON in, JSON out; errors carry {"error", "detail"}.
class Server
{
public:
  Server(Registry & registry, std::string static_dir = {}) : registry_(registry), static_dir_(std::move(static_dir))
  {
    routes();
  }

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string & host = "127.0.0.1", int port = 0)
  {
    const int bound = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
      fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
  }

  /// Serves until stop(); call after bind().
  void serve() { http_.listen_after_bind(); }

  void stop() { http_.stop(); }
  void wait_until_ready() const { http_.wait_until_ready(); }

private:
  using Handler = std::function<Json(const httplib::Request &)>;

  void reply(httplib::Response & res, int status, const Json & body)
  {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  httplib::Server::Handler wrap(Handler h, int ok_status = 200)
  {
    return [this, h = std::move(h), ok_status](const httplib::Request & req, httplib::Response & res) {
      try {
        reply(res, ok_status, h(req));
      } catch (const ApiError & e) {
        reply(res, e.status(), e.body());
      } catch (const Error & e) {
        reply(res, http_status(e.kind()), {{"error", to_string(e.kind())}, {"detail", e.what()}});
      } catch (const Json::exception & e) {
        reply(res, 400, {{"error", "bad_request"}, {"detail", e.what()}});
      } catch (const std::exception & e) {
        reply(res, 500, {{"error", "internal"}, {"detail", e.what()}});
      }
    };
  }

  static Json body(const httplib::Request & req)
  {
    try {
      return Json::parse(req.body);
    } catch (const Json::exception & e) {
      throw ApiError(400, "bad_request", std::string("malformed JSON body: ") + e.what());
    }
  }

  void routes()
  {
    http_.Post("/sessions", wrap([this](const auto & req) { return registry_.create(body(req)); }, 201));
    http_.Get("/sessions", wrap([this](const auto &) { return registry_.list(); }));
    http_.Get("/sessions/:id", wrap([this](const auto & req) { return registry_.handle(req.path_params.at("id")); }));
    http_.Get("/sessions/:id/next", wrap([this](const auto & req) { return registry_.next(req.path_params.at("id")); }));
    http_.Post(
      "/sessions/:id/labels", wrap([this](const auto & req) { return registry_.submit(req.path_params.at("id"), body(req)); }));
    http_.Get("/sessions/:id/metrics", wrap([this](const auto & req) { return registry_.metrics(req.path_params.at("id")); }));
    http_.Get("/sessions/:id/log", wrap([this](const auto & req) { return registry_.log(req.path_params.at("id")); }));

    if (!static_dir_.empty() && std::filesystem::is_directory(static_dir_)) {
      http_.set_mount_point("/ui", static_dir_);
      http_.Get("/", [](const httplib::Request &, httplib::Response & res) { res.set_redirect("/ui/"); });
    } else {
      http_.Get("/", [](const httplib::Request &, httplib::Response & res) {
        res.set_content(
          "<!doctype html><title>trajal</title><p>No UI bundle is mounted. The API lives under /sessions.</p>",
          "text/html");
      });
    }
  }

  Registry & registry_;
  std::string static_dir_;
  httplib::Server http_;
};

}  // namespace trajal::service
