#include "bimtwin/bim/scenario_io.hpp"

#include "bimtwin/json_geometry.hpp"

namespace bimtwin::bim {

using nlohmann::json;

namespace {

const char* const kSections[] = {"noise_model", "workcell", "ground_truth"};

json optional_pose(const std::optional<Posed>& p) {
  return p ? pose_to_json(*p) : json(nullptr);
}

json marker_to_json(const std::optional<RigidTransformd>& m) {
  if (!m) return json(nullptr);
  return json{{"marker_to_object", transform_to_json(*m)}};
}

std::optional<RigidTransformd> marker_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return transform_from_json(j.at("marker_to_object"));
}

template <typename F>
void guarded(const std::string& id, std::vector<ValidationIssue>& issues,
             F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    issues.push_back({id, e.what()});
  } catch (const json::exception& e) {
    issues.push_back({id, e.what()});
  }
}

const char* record_kind(RecordKind k) {
  return k == RecordKind::Robot ? "robot" : "manual_replacement";
}

}  // namespace

BimObject object_from_json(const json& j, std::vector<ValidationIssue>& issues) {
  BimObject o;
  if (!j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
    issues.push_back({"", "object entry without a string id"});
    return o;
  }
  o.id = j.at("id").get<std::string>();
  guarded(o.id, issues, [&] {
    o.name = j.value("name", o.id);
    const std::string layer = j.at("layer").get<std::string>();
    if (auto l = layer_from_string(layer)) {
      o.layer = *l;
    } else {
      issues.push_back({o.id, "unknown layer '" + layer + "'"});
    }
  });
  guarded(o.id, issues, [&] { o.pose = pose_from_json(j.at("pose")); });
  guarded(o.id, issues, [&] {
    if (j.contains("boxes")) o.geometry = boxes_from_json(j.at("boxes"));
  });
  guarded(o.id, issues, [&] {
    if (!j.contains("relationship") || j.at("relationship").is_null()) return;
    const auto& r = j.at("relationship");
    const std::string kind = r.value("kind", "Adjacent");
    if (auto k = relationship_from_string(kind)) {
      o.relationship.kind = *k;
    } else {
      issues.push_back({o.id, "unknown relationship kind '" + kind + "'"});
    }
    if (r.contains("parent_id") && !r.at("parent_id").is_null()) {
      o.relationship.parent_id = r.at("parent_id").get<std::string>();
    }
  });
  guarded(o.id, issues, [&] {
    if (j.contains("sequence_index") && !j.at("sequence_index").is_null()) {
      o.sequence_index = j.at("sequence_index").get<int>();
    }
    o.workpiece_type = j.value("workpiece_type", std::string());
    if (j.contains("grip_indicator") && !j.at("grip_indicator").is_null()) {
      o.grip_indicator = pose_from_json(j.at("grip_indicator"));
    }
    o.task_related = j.value("task_related", false);
    if (j.contains("color")) o.color = j.at("color").get<Color>();
    if (j.contains("marker")) o.marker_to_object = marker_from_json(j.at("marker"));
    if (j.contains("source_id") && !j.at("source_id").is_null()) {
      o.source_id = j.at("source_id").get<std::string>();
    }
    const std::string status = j.value("status", std::string("active"));
    if (auto s = status_from_string(status)) {
      o.status = *s;
    } else {
      issues.push_back({o.id, "unknown status '" + status + "'"});
    }
    o.annotation = j.value("annotation", std::string());
  });
  return o;
}

json object_to_json(const BimObject& o) {
  json rel{{"kind", to_string(o.relationship.kind)},
           {"parent_id", o.relationship.parent_id
                             ? json(*o.relationship.parent_id)
                             : json(nullptr)}};
  return json{
      {"id", o.id},
      {"name", o.name},
      {"layer", to_string(o.layer)},
      {"boxes", boxes_to_json(o.geometry)},
      {"pose", pose_to_json(o.pose)},
      {"relationship", rel},
      {"sequence_index",
       o.sequence_index ? json(*o.sequence_index) : json(nullptr)},
      {"workpiece_type", o.workpiece_type},
      {"grip_indicator", optional_pose(o.grip_indicator)},
      {"task_related", o.task_related},
      {"color", o.color},
      {"marker", marker_to_json(o.marker_to_object)},
      {"source_id", o.source_id ? json(*o.source_id) : json(nullptr)},
      {"status", to_string(o.status)},
      {"annotation", o.annotation},
  };
}

BimRepository repository_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("scenario must be a JSON object");
  if (!doc.contains("format_version") ||
      !doc.at("format_version").is_number_integer()) {
    throw ParseError("scenario is missing an integer format_version");
  }
  if (doc.at("format_version").get<int>() != kScenarioFormatVersion) {
    throw ParseError("unsupported format_version " +
                     doc.at("format_version").dump());
  }

  BimRepository repo;
  std::vector<ValidationIssue> issues;
  repo.set_name(doc.value("name", std::string()));

  if (doc.contains("objects")) {
    if (!doc.at("objects").is_array()) throw ParseError("objects must be an array");
    for (const auto& entry : doc.at("objects")) {
      BimObject o = object_from_json(entry, issues);
      if (o.id.empty()) continue;
      if (repo.find(o.id)) {
        issues.push_back({o.id, "duplicate object id"});
        continue;
      }
      repo.add_object(std::move(o));
    }
  }

  if (doc.contains("stacks")) {
    if (!doc.at("stacks").is_array()) throw ParseError("stacks must be an array");
    for (const auto& s : doc.at("stacks")) {
      MaterialStack stack;
      stack.id = s.value("id", std::string());
      if (stack.id.empty()) {
        issues.push_back({"", "stack entry without an id"});
        continue;
      }
      guarded(stack.id, issues, [&] {
        stack.workpiece_type = s.at("workpiece_type").get<std::string>();
        stack.quantity = s.at("quantity").get<int>();
        stack.base_pose = pose_from_json(s.at("base_pose"));
        stack.item_vertical_pitch = s.at("item_vertical_pitch").get<double>();
        if (s.contains("item_boxes")) {
          stack.item_geometry = boxes_from_json(s.at("item_boxes"));
        }
        if (s.contains("marker")) {
          stack.marker_to_object = marker_from_json(s.at("marker"));
        }
      });
      if (repo.find_stack(stack.id)) {
        issues.push_back({stack.id, "duplicate stack id"});
        continue;
      }
      repo.add_stack(std::move(stack));
    }
  }

  if (doc.contains("as_built_records")) {
    for (const auto& r : doc.at("as_built_records")) {
      guarded(r.value("target_id", std::string()), issues, [&] {
        const std::string kind = r.value("kind", std::string("robot"));
        if (kind != "robot" && kind != "manual_replacement") {
          throw ParseError("unknown as_built record kind '" + kind + "'");
        }
        repo.add_as_built_record(AsBuiltRecord{
            r.at("target_id").get<std::string>(), pose_from_json(r.at("pose")),
            r.at("timestamp").get<double>(),
            kind == "robot" ? RecordKind::Robot : RecordKind::ManualReplacement});
      });
    }
  }
  if (doc.contains("scan_records")) {
    for (const auto& r : doc.at("scan_records")) {
      guarded(r.value("object_id", std::string()), issues, [&] {
        repo.add_scan_record(ScanRecord{r.at("object_id").get<std::string>(),
                                        pose_from_json(r.at("pose")),
                                        r.at("timestamp").get<double>()});
      });
    }
  }

  for (const char* section : kSections) {
    if (doc.contains(section)) repo.sections()[section] = doc.at(section);
  }

  for (auto& issue : repo.validate()) issues.push_back(std::move(issue));
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return repo;
}

BimRepository load_scenario(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return repository_from_json(doc);
}

json repository_to_json(const BimRepository& repo) {
  json doc;
  doc["format_version"] = kScenarioFormatVersion;
  doc["name"] = repo.name();

  json objects = json::array();
  for (const auto& [id, o] : repo.objects()) objects.push_back(object_to_json(o));
  doc["objects"] = std::move(objects);

  json stacks = json::array();
  for (const auto& [id, s] : repo.stacks()) {
    stacks.push_back(json{{"id", s.id},
                          {"workpiece_type", s.workpiece_type},
                          {"quantity", s.quantity},
                          {"base_pose", pose_to_json(s.base_pose)},
                          {"item_vertical_pitch", s.item_vertical_pitch},
                          {"item_boxes", boxes_to_json(s.item_geometry)},
                          {"marker", marker_to_json(s.marker_to_object)}});
  }
  doc["stacks"] = std::move(stacks);

  json as_built = json::array();
  for (const auto& r : repo.as_built_records()) {
    as_built.push_back(json{{"target_id", r.target_id},
                            {"pose", pose_to_json(r.pose)},
                            {"timestamp", r.timestamp},
                            {"kind", record_kind(r.kind)}});
  }
  doc["as_built_records"] = std::move(as_built);

  json scans = json::array();
  for (const auto& r : repo.scan_records()) {
    scans.push_back(json{{"object_id", r.object_id},
                         {"pose", pose_to_json(r.pose)},
                         {"timestamp", r.timestamp}});
  }
  doc["scan_records"] = std::move(scans);

  for (const char* section : kSections) {
    if (repo.sections().contains(section)) doc[section] = repo.sections().at(section);
  }
  return doc;
}

std::string export_checkpoint(const BimRepository& repo) {
  return repository_to_json(repo).dump(2) + "\n";
}

}  // namespace bimtwin::bim
