#include <gtest/gtest.h>
#include <set>

#include "bimtwin/bim/scenario_io.hpp"

namespace bimtwin::bim {
namespace {

const char* kSmall = R"({
  "format_version": 1,
  "name": "small",
  "objects": [
    {"id": "ground", "layer": "AsBuilt",
     "boxes": [{"center": {"position": [0, 0, -0.05], "orientation": [1, 0, 0, 0]},
                "half_extents": [1, 1, 0.05]}],
     "pose": {"position": [0, 0, 0], "orientation": [1, 0, 0, 0]}},
    {"id": "frame", "layer": "AsDesigned",
     "boxes": [{"center": {"position": [0, 0, 0], "orientation": [1, 0, 0, 0]},
                "half_extents": [0.5, 0.02, 0.02]}],
     "pose": {"position": [0, 0, 0.5], "orientation": [1, 0, 0, 0]},
     "marker": {"marker_to_object": {"translation": [0.5, 0, 0], "rotation": [1, 0, 0, 0]}}},
    {"id": "p0", "layer": "Target", "sequence_index": 0, "workpiece_type": "panel",
     "relationship": {"kind": "FullyConnected", "parent_id": "frame"},
     "grip_indicator": {"position": [0, 0, 0.01], "orientation": [1, 0, 0, 0]},
     "boxes": [{"center": {"position": [0, 0, 0], "orientation": [1, 0, 0, 0]},
                "half_extents": [0.2, 0.005, 0.2]}],
     "pose": {"position": [0.1, 0.03, 0.5], "orientation": [0.7071067811865476, 0, 0, 0.7071067811865476]},
     "color": [10, 20, 30]}
  ],
  "stacks": [
    {"id": "panels", "workpiece_type": "panel", "quantity": 1,
     "base_pose": {"position": [1, 0, 0], "orientation": [1, 0, 0, 0]},
     "item_vertical_pitch": 0.01,
     "item_boxes": [{"center": {"position": [0, 0, 0], "orientation": [1, 0, 0, 0]},
                     "half_extents": [0.2, 0.2, 0.005]}]}
  ],
  "noise_model": {"sigma_translation": 0.0, "sigma_rotation": 0.0, "seed": 3}
})";

void expect_same_objects(const BimRepository& a, const BimRepository& b) {
  ASSERT_EQ(a.objects().size(), b.objects().size());
  for (const auto& [id, o] : a.objects()) {
    const auto* other = b.find(id);
    ASSERT_NE(other, nullptr) << id;
    EXPECT_EQ(object_to_json(o), object_to_json(*other)) << id;
    EXPECT_LT((o.pose.position - other->pose.position).norm(), 1e-9);
  }
  ASSERT_EQ(a.stacks().size(), b.stacks().size());
  for (const auto& [id, s] : a.stacks()) {
    EXPECT_EQ(s.quantity, b.stack(id).quantity);
    EXPECT_EQ(s.base_pose, b.stack(id).base_pose);
  }
}

TEST(LoadScenario, SmallDocument) {
  const auto repo = load_scenario(kSmall);
  EXPECT_EQ(repo.name(), "small");
  EXPECT_EQ(repo.objects().size(), 3u);
  EXPECT_EQ(repo.target_count(), 1u);
  EXPECT_EQ(repo.object("p0").color, (Color{10, 20, 30}));
  EXPECT_EQ(repo.object("p0").relationship.kind, RelationshipKind::FullyConnected);
  ASSERT_TRUE(repo.object("frame").marker_to_object);
  EXPECT_EQ(repo.object("frame").marker_to_object->translation(), Vector3d(0.5, 0, 0));
  EXPECT_EQ(repo.sections().at("noise_model").at("seed"), 3);
}

TEST(LoadScenario, EmptyObjectList) {
  const auto repo = load_scenario(R"({"format_version": 1, "objects": []})");
  EXPECT_TRUE(repo.objects().empty());
  EXPECT_FALSE(repo.next_target());
}

TEST(LoadScenario, MalformedTextIsParseError) {
  EXPECT_THROW(load_scenario("{\"format_version\": 1,"), ParseError);
  EXPECT_THROW(load_scenario("[]"), ParseError);
  EXPECT_THROW(load_scenario(R"({"objects": []})"), ParseError);
  EXPECT_THROW(load_scenario(R"({"format_version": 99})"), ParseError);
}

TEST(LoadScenario, DuplicateSequenceIndexNamesBothIds) {
  auto doc = nlohmann::json::parse(kSmall);
  auto dup = doc["objects"][2];
  dup["id"] = "p1";
  doc["objects"].push_back(dup);
  try {
    repository_from_json(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("p0"), std::string::npos) << what;
    EXPECT_NE(what.find("p1"), std::string::npos) << what;
  }
}

TEST(LoadScenario, ReportsEachBrokenRuleWithId) {
  auto doc = nlohmann::json::parse(kSmall);
  doc["objects"][2]["relationship"]["parent_id"] = "missing";
  doc["objects"][2].erase("grip_indicator");
  doc["objects"][0]["layer"] = "Scaffolding";
  try {
    repository_from_json(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& i : e.issues()) seen.insert({i.object_id, i.rule});
    auto has = [&](const std::string& id, const std::string& needle) {
      for (const auto& [oid, rule] : seen) {
        if (oid == id && rule.find(needle) != std::string::npos) return true;
      }
      return false;
    };
    EXPECT_TRUE(has("p0", "dangling parent_id"));
    EXPECT_TRUE(has("p0", "grip_indicator"));
    EXPECT_TRUE(has("ground", "unknown layer"));
  }
}

TEST(LoadScenario, BadBoxReportedAgainstObject) {
  auto doc = nlohmann::json::parse(kSmall);
  doc["objects"][1]["boxes"][0]["half_extents"] = {0.5, 0.0, 0.02};
  try {
    repository_from_json(doc);
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].object_id, "frame");
  }
}

TEST(ExportCheckpoint, FreshRoundTrip) {
  const auto repo = load_scenario(kSmall);
  const auto exported = export_checkpoint(repo);
  const auto again = load_scenario(exported);
  expect_same_objects(repo, again);
  EXPECT_EQ(export_checkpoint(again), exported);
  EXPECT_EQ(again.sections(), repo.sections());
}

TEST(ExportCheckpoint, CarriesRecordsAndRemainingMaterial) {
  auto repo = load_scenario(kSmall);
  Posed scanned = repo.object("frame").pose;
  scanned.position.x() += 0.01;
  repo.record_scan("frame", scanned, 0.5);
  repo.consume_material("panels");
  repo.record_as_built("p0", repo.object("p0").pose, 2.0);

  const auto doc = nlohmann::json::parse(export_checkpoint(repo));
  EXPECT_EQ(doc.at("as_built_records").size(), 1u);
  EXPECT_EQ(doc.at("scan_records").size(), 1u);
  EXPECT_EQ(doc.at("stacks")[0].at("quantity"), 0);

  const auto again = repository_from_json(doc);
  expect_same_objects(repo, again);
  EXPECT_EQ(again.as_built_twin("frame")->pose, scanned);
  EXPECT_EQ(again.object("p0").status, ObjectStatus::Installed);
  EXPECT_FALSE(again.next_target());
  EXPECT_EQ(again.as_built_records().size(), 1u);
  EXPECT_EQ(export_checkpoint(again), export_checkpoint(repo));
}

}  // namespace
}  // namespace bimtwin::bim
