#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "bimtwin/bim/repository.hpp"

namespace bimtwin::bim {

inline constexpr int kScenarioFormatVersion = 1;

/// Parses and validates a scenario (or checkpoint) document.
/// Throws ParseError on malformed text, ValidationError on broken invariants.
BimRepository load_scenario(std::string_view document);
BimRepository repository_from_json(const nlohmann::json& document);

/// Serializes the repository in the scenario format, including the
/// as_built_records and scan_records sections.
std::string export_checkpoint(const BimRepository& repo);
nlohmann::json repository_to_json(const BimRepository& repo);

BimObject object_from_json(const nlohmann::json& j,
                           std::vector<ValidationIssue>& issues);
nlohmann::json object_to_json(const BimObject& o);

}  // namespace bimtwin::bim
