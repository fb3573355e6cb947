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


#pragma once

#include <string>

namespace httplib {
class Server;
}

namespace panolabel {

class AnnotationService;

/// JSON routes:
///   GET  /batches/next?worker=ID
///   GET  /images/{id}[?session=ID]
///   GET  /sessions/{id}/next
///   POST /sessions/{id}/events
///   POST /sessions/{id}/finalize
///   GET  /reports/crowdsourcing
/// Errors come back as {"error": message[, "index": event]} with 400 for
/// malformed input, 404 for unknown ids and 409 for protocol violations.
void register_routes(httplib::Server& server, AnnotationService& service);

/// Blocks until the server stops.
bool serve(AnnotationService& service, const std::string& host, int port);

}  // namespace panolabel
