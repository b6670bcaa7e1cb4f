#pragma once

#include <memory>
#include <string>

#include "bimtwin/service/wire.hpp"

namespace bimtwin::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  ///< 0 picks a free port
  int steps_per_slice = 1;  ///< hub steps per driver slice
  int slice_ms = 0;         ///< real-time pause between slices that made progress
};

/// HTTP + WebSocket front end of a Hub.
///   GET /scenario   current twin document (scenario format)
///   GET /log        session log, newline-delimited JSON
///   GET /health     {"state": ..., "clients": n}
///   WS  /stream     WireMessage text frames
class Server {
 public:
  /// Binds immediately; throws std::system_error (or boost::system::system_error)
  /// when the address is unavailable.
  Server(Hub& hub, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Starts the network thread and the driver thread.
  void start();
  /// Stops both threads and closes every connection. Idempotent.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bimtwin::service
