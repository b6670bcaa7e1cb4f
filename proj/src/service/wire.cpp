#include "bimtwin/service/wire.hpp"

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/workflow/event_log.hpp"

namespace bimtwin::service {

using nlohmann::json;

std::string_view to_string(WireType t) {
  switch (t) {
    case WireType::Event: return "event";
    case WireType::Command: return "command";
    case WireType::Ack: return "ack";
    case WireType::Error: return "error";
  }
  return "error";
}

std::optional<WireType> wire_type_from_string(std::string_view s) {
  if (s == "event") return WireType::Event;
  if (s == "command") return WireType::Command;
  if (s == "ack") return WireType::Ack;
  if (s == "error") return WireType::Error;
  return std::nullopt;
}

json WireMessage::to_json() const {
  return json{{"type", to_string(type)},
              {"seq", seq},
              {"session_id", session_id},
              {"schema_version", schema_version},
              {"payload", payload}};
}

std::string WireMessage::serialize() const { return to_json().dump(); }

WireMessage WireMessage::from_json(const json& j) {
  if (!j.is_object()) throw ParseError("frame must be a JSON object");
  WireMessage m;
  try {
    const std::string type = j.at("type").get<std::string>();
    const auto t = wire_type_from_string(type);
    if (!t) throw ParseError("unknown frame type '" + type + "'");
    m.type = *t;
    m.seq = j.at("seq").get<std::uint64_t>();
    m.session_id = j.at("session_id").get<std::string>();
    m.schema_version = j.at("schema_version").get<int>();
    m.payload = j.at("payload");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed frame: ") + e.what());
  }
  return m;
}

WireMessage WireMessage::parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("frame is not JSON: ") + e.what());
  }
  return from_json(j);
}

bool operator==(const WireMessage& a, const WireMessage& b) {
  return a.type == b.type && a.seq == b.seq && a.session_id == b.session_id &&
         a.schema_version == b.schema_version && a.payload == b.payload;
}

Hub::Hub(json scenario, workflow::SessionOptions options, std::string session_id,
         std::optional<workflow::AutoApprove> policy)
    : session_(std::move(scenario), options,
               policy ? policy->to_json() : json("interactive")),
      policy_(policy),
      session_id_(std::move(session_id)) {
  session_.subscribe([this](const workflow::LogEntry& e) { on_entry(e); });
}

void Hub::send(Client& c, WireType type, json payload) {
  WireMessage m;
  m.type = type;
  m.seq = ++c.out_seq;
  m.session_id = session_id_;
  m.payload = std::move(payload);
  c.sink(m.serialize());
}

void Hub::on_entry(const workflow::LogEntry& e) {
  const json payload = e.to_json();
  for (auto& [id, c] : clients_) send(c, WireType::Event, payload);
}

void Hub::reply_error(Client& c, const std::string& code, const std::string& message,
                      std::optional<std::uint64_t> in_reply_to) {
  send(c, WireType::Error,
       json{{"code", code},
            {"message", message},
            {"in_reply_to", in_reply_to ? json(*in_reply_to) : json(nullptr)}});
}

std::uint64_t Hub::attach(Sink sink) {
  std::lock_guard lock(mu_);
  const auto id = next_client_++;
  Client& c = clients_[id];
  c.sink = std::move(sink);
  send(c, WireType::Ack,
       json{{"hello", true},
            {"server", "bimtwin"},
            {"schema_versions", json::array({kWireSchemaVersion})},
            {"state", workflow::to_string(session_.state())},
            {"catch_up", session_.log().size()}});
  for (const auto& e : session_.log()) send(c, WireType::Event, e.to_json());
  return id;
}

void Hub::detach(std::uint64_t client) {
  std::lock_guard lock(mu_);
  clients_.erase(client);
}

void Hub::ensure_started() {
  if (session_.state() == workflow::State::Idle) session_.start();
}

void Hub::receive(std::uint64_t client, std::string_view frame) {
  std::lock_guard lock(mu_);
  const auto it = clients_.find(client);
  if (it == clients_.end()) return;
  Client& c = it->second;

  WireMessage m;
  try {
    m = WireMessage::parse(frame);
  } catch (const ParseError& e) {
    reply_error(c, "malformed", e.what(), std::nullopt);
    return;
  }
  if (m.schema_version != kWireSchemaVersion) {
    reply_error(c, "unsupported-version",
                "schema_version " + std::to_string(m.schema_version) + " is not supported", m.seq);
    return;
  }
  if (m.type != WireType::Command) {
    reply_error(c, "unexpected-type",
                "clients send command frames, not " + std::string(to_string(m.type)), m.seq);
    return;
  }
  if (m.session_id != session_id_) {
    reply_error(c, "wrong-session", "no session '" + m.session_id + "'", m.seq);
    return;
  }
  if (m.seq <= c.in_seq) {
    reply_error(c, "stale-seq",
                "seq " + std::to_string(m.seq) + " does not follow " + std::to_string(c.in_seq),
                m.seq);
    return;
  }
  c.in_seq = m.seq;

  const std::string type = m.payload.is_object() ? m.payload.value("type", std::string()) : "";
  try {
    if (type == "Start") {
      if (session_.state() != workflow::State::Idle) {
        reply_error(c, "illegal", "session already started", m.seq);
        return;
      }
      session_.start();
      send(c, WireType::Ack, json{{"in_reply_to", m.seq}, {"accepted", true}});
      return;
    }
    if (type == "SafetyInterrupt") {
      const bool held = session_.trigger_safety();
      if (!held) {
        reply_error(c, "illegal", "nothing is executing", m.seq);
        return;
      }
      send(c, WireType::Ack, json{{"in_reply_to", m.seq}, {"accepted", true}});
      return;
    }
    const auto cmd = workflow::Command::from_json(m.payload);
    ensure_started();
    const auto state = session_.state();
    if (!workflow::command_legal(state, cmd.kind)) {
      session_.handle(cmd);  // logged and rejected like any illegal command
      reply_error(c, "illegal",
                  std::string(workflow::to_string(cmd.kind)) + " is not accepted in state " +
                      std::string(workflow::to_string(state)),
                  m.seq);
      return;
    }
    const bool accepted = session_.handle(cmd);
    send(c, WireType::Ack, json{{"in_reply_to", m.seq}, {"accepted", accepted}});
  } catch (const ParseError& e) {
    reply_error(c, "malformed", e.what(), m.seq);
  } catch (const Error& e) {
    reply_error(c, "failed", e.what(), m.seq);
  }
}

std::size_t Hub::advance(std::size_t max_steps) {
  std::lock_guard lock(mu_);
  ensure_started();
  std::size_t n = 0;
  while (n < max_steps && !session_.terminal()) {
    if (session_.step()) {
      ++n;
      continue;
    }
    if (!policy_) break;
    const auto cmd = policy_->decide(session_);
    if (!cmd) break;
    session_.handle(*cmd);
    ++n;
  }
  return n;
}

std::string Hub::scenario_document() const {
  std::lock_guard lock(mu_);
  return bim::export_checkpoint(session_.repo());
}

std::string Hub::log_document() const {
  std::lock_guard lock(mu_);
  return workflow::log_text(session_);
}

workflow::State Hub::state() const {
  std::lock_guard lock(mu_);
  return session_.state();
}

std::size_t Hub::clients() const {
  std::lock_guard lock(mu_);
  return clients_.size();
}

}  // namespace bimtwin::service
