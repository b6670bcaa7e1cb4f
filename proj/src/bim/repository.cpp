#include "bimtwin/bim/repository.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace bimtwin::bim {

namespace {

std::string describe(const std::vector<ValidationIssue>& issues) {
  std::ostringstream out;
  out << "scenario validation failed:";
  for (const auto& i : issues) {
    out << "\n  [" << (i.object_id.empty() ? "<document>" : i.object_id)
        << "] " << i.rule;
  }
  return out.str();
}

std::string twin_id(const std::string& id) {
  return id + std::string(kAsBuiltSuffix);
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(describe(issues)), issues_(std::move(issues)) {}

std::vector<Obbd> BimObject::world_geometry() const {
  const RigidTransformd X(pose);
  std::vector<Obbd> out;
  out.reserve(geometry.size());
  for (const auto& b : geometry) out.push_back(b.transformed(X));
  return out;
}

Posed MaterialStack::item_pose(int index) const {
  Posed p = base_pose;
  p.position.z() += static_cast<double>(index) * item_vertical_pitch;
  return p;
}

const BimObject& BimRepository::object(const std::string& id) const {
  if (const auto* o = find(id)) return *o;
  throw UnknownIdError("unknown object id '" + id + "'");
}

const BimObject* BimRepository::find(const std::string& id) const {
  const auto it = objects_.find(id);
  return it == objects_.end() ? nullptr : &it->second;
}

BimObject& BimRepository::mutable_object(const std::string& id) {
  const auto it = objects_.find(id);
  if (it == objects_.end()) {
    throw UnknownIdError("unknown object id '" + id + "'");
  }
  return it->second;
}

const MaterialStack& BimRepository::stack(const std::string& id) const {
  if (const auto* s = find_stack(id)) return *s;
  throw UnknownIdError("unknown stack id '" + id + "'");
}

const MaterialStack* BimRepository::find_stack(const std::string& id) const {
  const auto it = stacks_.find(id);
  return it == stacks_.end() ? nullptr : &it->second;
}

void BimRepository::add_object(BimObject object) {
  const std::string id = object.id;
  objects_.insert_or_assign(id, std::move(object));
}

void BimRepository::add_stack(MaterialStack stack) {
  const std::string id = stack.id;
  stacks_.insert_or_assign(id, std::move(stack));
}

void BimRepository::register_stack(const MaterialStack& detected) {
  auto it = stacks_.find(detected.id);
  if (it == stacks_.end()) {
    stacks_.emplace(detected.id, detected);
    return;
  }
  it->second.quantity = detected.quantity;
  it->second.base_pose = detected.base_pose;
  if (!detected.workpiece_type.empty()) {
    it->second.workpiece_type = detected.workpiece_type;
  }
  if (detected.item_vertical_pitch > 0) {
    it->second.item_vertical_pitch = detected.item_vertical_pitch;
  }
}

std::vector<std::string> BimRepository::pending_targets() const {
  std::vector<std::pair<int, std::string>> queue;
  for (const auto& [id, o] : objects_) {
    if (o.is_pending_target()) queue.emplace_back(o.sequence_index.value_or(0), id);
  }
  std::sort(queue.begin(), queue.end());
  std::vector<std::string> out;
  out.reserve(queue.size());
  for (auto& q : queue) out.push_back(std::move(q.second));
  return out;
}

std::optional<BimObject> BimRepository::next_target() const {
  const auto queue = pending_targets();
  if (queue.empty()) return std::nullopt;
  return objects_.at(queue.front());
}

std::size_t BimRepository::target_count() const {
  return static_cast<std::size_t>(std::count_if(
      objects_.begin(), objects_.end(),
      [](const auto& kv) { return kv.second.layer == Layer::Target; }));
}

void BimRepository::record_as_built(const std::string& target_id,
                                    const Posed& installed_pose,
                                    double timestamp) {
  const BimObject* target = find(target_id);
  if (target == nullptr || target->layer != Layer::Target) {
    throw UnknownIdError("record_as_built: '" + target_id +
                         "' is not a target");
  }
  if (target->status != ObjectStatus::Active) {
    throw StateError("record_as_built: target '" + target_id +
                     "' was already recorded");
  }
  BimObject copy = *target;
  copy.id = twin_id(target_id);
  copy.layer = Layer::AsBuilt;
  copy.pose = installed_pose;
  copy.sequence_index.reset();
  copy.source_id = target_id;
  copy.status = ObjectStatus::Active;
  copy.marker_to_object.reset();
  copy.annotation.clear();
  add_object(std::move(copy));

  mutable_object(target_id).status = ObjectStatus::Installed;
  as_built_records_.push_back(
      AsBuiltRecord{target_id, installed_pose, timestamp, RecordKind::Robot});
}

void BimRepository::record_scan(const std::string& object_id,
                                const Posed& detected_pose, double timestamp) {
  const BimObject* scanned = find(object_id);
  if (scanned == nullptr || (scanned->layer != Layer::AsDesigned &&
                             scanned->layer != Layer::AsBuilt)) {
    throw UnknownIdError("record_scan: '" + object_id +
                         "' is not an as-designed or as-built object");
  }
  scan_records_.push_back(ScanRecord{object_id, detected_pose, timestamp});

  if (scanned->layer == Layer::AsBuilt && scanned->source_id &&
      ends_with(object_id, kAsBuiltSuffix)) {
    mutable_object(object_id).pose = detected_pose;
    return;
  }
  const std::string id = twin_id(object_id);
  if (auto it = objects_.find(id); it != objects_.end()) {
    it->second.pose = detected_pose;
    return;
  }
  BimObject twin = *scanned;
  twin.id = id;
  twin.layer = Layer::AsBuilt;
  twin.pose = detected_pose;
  twin.source_id = object_id;
  twin.status = ObjectStatus::Active;
  twin.marker_to_object.reset();
  twin.sequence_index.reset();
  if (scanned->layer == Layer::AsBuilt) {
    mutable_object(object_id).status = ObjectStatus::Superseded;
  }
  add_object(std::move(twin));
}

Posed BimRepository::consume_material(const std::string& stack_id) {
  auto it = stacks_.find(stack_id);
  if (it == stacks_.end()) {
    throw UnknownIdError("unknown stack id '" + stack_id + "'");
  }
  if (it->second.quantity <= 0) {
    throw StateError("stack '" + stack_id + "' is empty");
  }
  const Posed pick = it->second.top_item_pose();
  --it->second.quantity;
  return pick;
}

void BimRepository::apply_manual_replacement(
    const std::string& target_id, const std::vector<Obbd>& replacement_geometry,
    const Posed& placed_pose, double timestamp) {
  const BimObject* target = find(target_id);
  if (target == nullptr || target->layer != Layer::Target) {
    throw UnknownIdError("manual replacement: '" + target_id +
                         "' is not a target");
  }
  if (target->status != ObjectStatus::Active) {
    throw StateError("manual replacement: target '" + target_id +
                     "' is no longer pending");
  }
  BimObject replacement = *target;
  replacement.id = target_id + std::string(kReplacementSuffix);
  replacement.name = target->name + " (manual replacement)";
  replacement.layer = Layer::AsBuilt;
  replacement.geometry =
      replacement_geometry.empty() ? target->geometry : replacement_geometry;
  replacement.pose = placed_pose;
  replacement.sequence_index.reset();
  replacement.source_id = target_id;
  replacement.status = ObjectStatus::Active;
  replacement.annotation = "manual replacement of " + target_id;
  add_object(std::move(replacement));

  BimObject& t = mutable_object(target_id);
  t.status = ObjectStatus::ResolvedManually;
  t.annotation = "resolved manually; replaced by " + target_id +
                 std::string(kReplacementSuffix);
  as_built_records_.push_back(AsBuiltRecord{target_id, placed_pose, timestamp,
                                            RecordKind::ManualReplacement});
}

const BimObject* BimRepository::as_built_twin(const std::string& id) const {
  if (const auto* twin = find(twin_id(id))) return twin;
  if (const auto* self = find(id);
      self != nullptr && self->layer == Layer::AsBuilt &&
      self->status == ObjectStatus::Active) {
    return self;
  }
  return nullptr;
}

std::vector<std::string> BimRepository::ancestors(const std::string& id) const {
  std::vector<std::string> out;
  std::set<std::string> seen{id};
  const BimObject* o = find(id);
  while (o != nullptr && o->relationship.parent_id) {
    const std::string& parent = *o->relationship.parent_id;
    if (!seen.insert(parent).second) break;
    out.push_back(parent);
    o = find(parent);
  }
  return out;
}

const MaterialStack* BimRepository::stack_for(
    const std::string& workpiece_type) const {
  for (const auto& [id, s] : stacks_) {
    if (s.workpiece_type == workpiece_type && s.quantity > 0) return &s;
  }
  return nullptr;
}

std::string stack_item_id(const std::string& stack_id, int index) {
  return stack_id + "#" + std::to_string(index);
}

std::vector<SceneBody> BimRepository::nearby_scene() const {
  std::vector<SceneBody> out;
  for (const auto& [id, o] : objects_) {
    const bool live_as_built =
        o.layer == Layer::AsBuilt && o.status == ObjectStatus::Active;
    if (!live_as_built && o.layer != Layer::VirtualCollision) continue;
    out.push_back(SceneBody{id, o.source_id.value_or(id), o.layer,
                            o.workpiece_type, o.world_geometry()});
  }
  return out;
}

std::vector<SceneBody> BimRepository::planning_scene() const {
  std::vector<SceneBody> out = nearby_scene();
  for (const auto& [id, o] : objects_) {
    if (o.layer != Layer::Materials) continue;
    out.push_back(SceneBody{id, o.source_id.value_or(id), o.layer,
                            o.workpiece_type, o.world_geometry()});
  }
  for (const auto& [id, s] : stacks_) {
    for (int k = 0; k < s.quantity; ++k) {
      const RigidTransformd X(s.item_pose(k));
      SceneBody body{stack_item_id(id, k), id, Layer::Materials,
                     s.workpiece_type, {}};
      for (const auto& b : s.item_geometry) body.boxes.push_back(b.transformed(X));
      out.push_back(std::move(body));
    }
  }
  return out;
}

std::vector<ValidationIssue> BimRepository::validate() const {
  std::vector<ValidationIssue> issues;
  std::map<int, std::string> sequence_owner;

  for (const auto& [id, o] : objects_) {
    if (id.empty()) issues.push_back({id, "object id must not be empty"});
    if (!is_valid(o.pose, 1e-6)) {
      issues.push_back({id, "pose must be finite with a unit quaternion"});
    }
    const auto& rel = o.relationship;
    if (rel.kind != RelationshipKind::Adjacent && !rel.parent_id) {
      issues.push_back({id, "relationship kind " +
                                std::string(to_string(rel.kind)) +
                                " requires a parent_id"});
    }
    if (rel.parent_id) {
      if (*rel.parent_id == id) {
        issues.push_back({id, "object cannot be its own parent"});
      } else if (!find(*rel.parent_id) && !find_stack(*rel.parent_id)) {
        issues.push_back({id, "dangling parent_id '" + *rel.parent_id + "'"});
      }
    }
    if (o.source_id && !find(*o.source_id)) {
      issues.push_back({id, "dangling source_id '" + *o.source_id + "'"});
    }
    if (o.layer == Layer::Target) {
      if (!o.sequence_index) {
        issues.push_back({id, "target requires a sequence_index"});
      } else if (*o.sequence_index < 0) {
        issues.push_back({id, "sequence_index must be non-negative"});
      } else if (auto [it, fresh] = sequence_owner.emplace(*o.sequence_index, id);
                 !fresh) {
        issues.push_back({id, "duplicate sequence_index " +
                                  std::to_string(*o.sequence_index) +
                                  " shared by '" + it->second + "' and '" +
                                  id + "'"});
      }
      if (!o.grip_indicator) {
        issues.push_back({id, "target requires a grip_indicator"});
      }
    } else if (o.sequence_index) {
      issues.push_back({id, "sequence_index is only allowed on targets"});
    }
    if (o.grip_indicator && !is_valid(*o.grip_indicator, 1e-6)) {
      issues.push_back({id, "grip_indicator must be a valid pose"});
    }
  }

  // Parent graph must be acyclic.
  for (const auto& [id, o] : objects_) {
    std::set<std::string> seen{id};
    const BimObject* cur = &o;
    while (cur && cur->relationship.parent_id) {
      const std::string& p = *cur->relationship.parent_id;
      if (!seen.insert(p).second) {
        if (p == id) issues.push_back({id, "cycle in parent relationships"});
        break;
      }
      cur = find(p);
    }
  }

  for (const auto& [id, s] : stacks_) {
    if (objects_.count(id)) {
      issues.push_back({id, "stack id collides with an object id"});
    }
    if (s.quantity < 0) issues.push_back({id, "stack quantity must be >= 0"});
    if (!(s.item_vertical_pitch >= 0)) {
      issues.push_back({id, "item_vertical_pitch must be >= 0"});
    }
    if (!is_valid(s.base_pose, 1e-6)) {
      issues.push_back({id, "stack base_pose must be a valid pose"});
    }
  }

  for (const auto& r : as_built_records_) {
    if (!find(r.target_id)) {
      issues.push_back({r.target_id, "as_built_record references unknown id"});
    }
  }
  for (const auto& r : scan_records_) {
    if (!find(r.object_id)) {
      issues.push_back({r.object_id, "scan_record references unknown id"});
    }
  }
  return issues;
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::Target: return "Target";
    case Layer::AsBuilt: return "AsBuilt";
    case Layer::Materials: return "Materials";
    case Layer::AsDesigned: return "AsDesigned";
    case Layer::VirtualCollision: return "VirtualCollision";
  }
  return "?";
}

std::string_view to_string(RelationshipKind kind) {
  switch (kind) {
    case RelationshipKind::Adjacent: return "Adjacent";
    case RelationshipKind::Seated: return "Seated";
    case RelationshipKind::FullyConnected: return "FullyConnected";
  }
  return "?";
}

std::string_view to_string(ObjectStatus status) {
  switch (status) {
    case ObjectStatus::Active: return "active";
    case ObjectStatus::Installed: return "installed";
    case ObjectStatus::ResolvedManually: return "resolved_manually";
    case ObjectStatus::Superseded: return "superseded";
  }
  return "?";
}

std::optional<Layer> layer_from_string(std::string_view s) {
  for (Layer l : {Layer::Target, Layer::AsBuilt, Layer::Materials,
                  Layer::AsDesigned, Layer::VirtualCollision}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

std::optional<RelationshipKind> relationship_from_string(std::string_view s) {
  for (auto k : {RelationshipKind::Adjacent, RelationshipKind::Seated,
                 RelationshipKind::FullyConnected}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<ObjectStatus> status_from_string(std::string_view s) {
  for (auto st : {ObjectStatus::Active, ObjectStatus::Installed,
                  ObjectStatus::ResolvedManually, ObjectStatus::Superseded}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

}  // namespace bimtwin::bim
