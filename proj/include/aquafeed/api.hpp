// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP API for the control service, served under /api/v1:
//
//   GET  /api/v1/tanks
//   GET  /api/v1/tanks/{id}
//   GET  /api/v1/tanks/{id}/telemetry?kind=ph&from=ms&to=ms
//   GET  /api/v1/tanks/{id}/decisions?offset=n&limit=n
//   GET  /api/v1/tanks/{id}/events?after_seq=n&limit=n
//   POST /api/v1/tanks/{id}/commands/feed     {"command_id", "grams"?}
//   GET  /api/v1/tanks/{id}/rules
//   PUT  /api/v1/tanks/{id}/rules             {"rules": [...]}
//   POST /api/v1/tanks/{id}/scenario          simulator control document
//   GET  /api/v1/stream?tank=id               server-sent events
//
// Errors are {"error": {"kind", "field", "message"}} with a 4xx status.

#include <memory>
#include <string>
#include <thread>

#include "aquafeed/controller.hpp"

namespace aquafeed {

class ApiServer {
 public:
  explicit ApiServer(ControlService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port; throws Io when binding fails.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aquafeed
