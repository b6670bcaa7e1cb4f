#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/workflow/session.hpp"

namespace bimtwin::workflow {

/// Newline-delimited log: one header object, then one LogEntry per line.
void write_log(std::ostream& os, const Session& session);
std::string log_text(const Session& session);

struct ParsedLog {
  nlohmann::json header;
  std::vector<LogEntry> entries;
};

ParsedLog parse_log(std::istream& is);
ParsedLog parse_log_text(const std::string& text);

/// Rebuilds a session by feeding the log's commands and control inputs to
/// a fresh session (same scenario, seed and options) at the recorded step
/// counts. Throws ParseError if the log does not match the engine.
Session replay(const ParsedLog& log);

}  // namespace bimtwin::workflow
