#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bimtwin/workflow/headless.hpp"
#include "bimtwin/workflow/session.hpp"

namespace bimtwin::service {

inline constexpr int kWireSchemaVersion = 1;

enum class WireType { Event, Command, Ack, Error };

std::string_view to_string(WireType t);
std::optional<WireType> wire_type_from_string(std::string_view s);

/// One text frame on the stream.
struct WireMessage {
  WireType type = WireType::Event;
  std::uint64_t seq = 0;
  std::string session_id;
  int schema_version = kWireSchemaVersion;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string serialize() const;
  /// Throws ParseError on malformed JSON, missing fields or an unknown type.
  static WireMessage from_json(const nlohmann::json& j);
  static WireMessage parse(std::string_view text);
};

bool operator==(const WireMessage& a, const WireMessage& b);

/// Owns one session and fans its log out to connected clients. Every call
/// takes the hub mutex, so intake from many connections is serialized into
/// the session in arrival order. Sinks run under the mutex and must not
/// block or call back into the hub.
class Hub {
 public:
  using Sink = std::function<void(const std::string& frame)>;

  Hub(nlohmann::json scenario, workflow::SessionOptions options, std::string session_id,
      std::optional<workflow::AutoApprove> policy = std::nullopt);

  /// Registers a client. The sink first gets a hello ack, then one event
  /// frame per log entry so far, then live frames; nothing is dropped or
  /// repeated because catch-up and registration happen under one lock.
  std::uint64_t attach(Sink sink);
  void detach(std::uint64_t client);

  /// Handles one inbound frame from `client`; replies go to that client's
  /// sink only (ack or error). Events caused by the command go to everyone.
  void receive(std::uint64_t client, std::string_view frame);

  /// Starts the session if it is Idle, then takes up to `max_steps`
  /// autonomous steps (answering waits with the policy when there is one).
  /// Returns the number of steps and decisions taken.
  std::size_t advance(std::size_t max_steps);

  /// Snapshot helpers for the HTTP endpoints.
  std::string scenario_document() const;
  std::string log_document() const;
  workflow::State state() const;
  std::size_t clients() const;
  const std::string& session_id() const { return session_id_; }

 private:
  struct Client {
    Sink sink;
    std::uint64_t out_seq = 0;
    std::uint64_t in_seq = 0;  ///< last accepted inbound seq
  };

  void send(Client& c, WireType type, nlohmann::json payload);
  void on_entry(const workflow::LogEntry& e);
  void reply_error(Client& c, const std::string& code, const std::string& message,
                   std::optional<std::uint64_t> in_reply_to);
  void ensure_started();

  mutable std::mutex mu_;
  workflow::Session session_;
  std::optional<workflow::AutoApprove> policy_;
  std::string session_id_;
  std::map<std::uint64_t, Client> clients_;
  std::uint64_t next_client_ = 1;
};

}  // namespace bimtwin::service
