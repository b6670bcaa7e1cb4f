#include "bimtwin/workflow/event_log.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace bimtwin::workflow {

using nlohmann::json;

void write_log(std::ostream& os, const Session& session) {
  os << session.header().dump() << '\n';
  for (const auto& e : session.log()) os << e.to_json().dump() << '\n';
}

std::string log_text(const Session& session) {
  std::ostringstream os;
  write_log(os, session);
  return os.str();
}

ParsedLog parse_log(std::istream& is) {
  ParsedLog out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("log line " + std::to_string(n) + ": " + e.what());
    }
    if (out.header.is_null()) {
      if (j.value("kind", std::string()) != "header") {
        throw ParseError("log must start with a header line");
      }
      if (j.value("schema_version", 0) != kLogSchemaVersion) {
        throw ParseError("unsupported log schema_version " + j.value("schema_version", json()).dump());
      }
      out.header = std::move(j);
      continue;
    }
    out.entries.push_back(LogEntry::from_json(j));
  }
  if (out.header.is_null()) throw ParseError("empty log");
  return out;
}

ParsedLog parse_log_text(const std::string& text) {
  std::istringstream is(text);
  return parse_log(is);
}

Session replay(const ParsedLog& log) {
  const auto& h = log.header;
  Session s(h.at("scenario"), SessionOptions::from_json(h.value("config", json::object())),
            h.value("policy", json("interactive")));
  auto advance_to = [&](std::uint64_t step) {
    while (s.steps() < step) {
      if (!s.step()) {
        throw ParseError("replay diverged: session waits at step " + std::to_string(s.steps()) +
                         " in " + std::string(to_string(s.state())));
      }
    }
  };
  for (const auto& e : log.entries) {
    if (e.kind == EntryKind::Event) continue;
    advance_to(e.step);
    if (e.kind == EntryKind::Control) {
      if (e.type == "Start") {
        s.start();
      } else if (e.type == "SafetyInterrupt") {
        if (!s.trigger_safety()) throw ParseError("replay diverged: interrupt not possible");
      } else {
        throw ParseError("unknown control input '" + e.type + "'");
      }
    } else {
      s.handle(Command::from_json(e.payload));
    }
  }
  if (!log.entries.empty()) advance_to(log.entries.back().step);
  return s;
}

}  // namespace bimtwin::workflow
