// Copyright 2026 The Panolabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "panolabel/http.hpp"

#include <httplib.h>

#include "panolabel/service.hpp"

namespace panolabel {

namespace {

void send(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, 200, f(req));
    } catch (const EventRejected& e) {
      send(res, 409, {{"error", e.what()}, {"index", e.index()}});
    } catch (const NotFound& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const ParseError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const Error& e) {
      send(res, 409, {{"error", e.what()}});
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
}

}  // namespace

void register_routes(httplib::Server& server, AnnotationService& service) {
  server.Get("/batches/next", guarded([&service](const httplib::Request& req) {
               if (!req.has_param("worker")) throw ParseError("missing worker parameter");
               return service.next_batch(req.get_param_value("worker"));
             }));
  server.Get(R"(/images/([^/]+))", guarded([&service](const httplib::Request& req) {
               return service.image(req.matches[1], req.get_param_value("session"));
             }));
  server.Get(R"(/sessions/([^/]+)/next)", guarded([&service](const httplib::Request& req) {
               return service.next_item(req.matches[1]);
             }));
  server.Post(R"(/sessions/([^/]+)/events)", guarded([&service](const httplib::Request& req) {
                return service.post_events(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/finalize)", guarded([&service](const httplib::Request& req) {
                return service.finalize(req.matches[1]);
              }));
  server.Get("/reports/crowdsourcing",
             guarded([&service](const httplib::Request&) { return service.crowdsourcing_report(); }));
}

bool serve(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  return server.listen(host, port);
}

}  // namespace panolabel
