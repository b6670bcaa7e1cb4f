#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bimtwin/error.hpp"
#include "bimtwin/geometry.hpp"

namespace bimtwin::bim {

/// The five layers of the repository.
enum class Layer { Target, AsBuilt, Materials, AsDesigned, VirtualCollision };

/// How a target's correct pose depends on another object.
enum class RelationshipKind { Adjacent, Seated, FullyConnected };

enum class ObjectStatus {
  Active,            ///< pending target, or live object
  Installed,         ///< target recorded as built by the robot
  ResolvedManually,  ///< target replaced/installed by a human
  Superseded,        ///< as-built object replaced by a newer scanned twin
};

struct Relationship {
  std::optional<std::string> parent_id;
  RelationshipKind kind = RelationshipKind::Adjacent;
};

using Color = std::array<int, 3>;

struct BimObject {
  std::string id;
  std::string name;
  Layer layer = Layer::AsBuilt;
  std::vector<Obbd> geometry;  ///< boxes in the object's local frame
  Posed pose;                  ///< world pose
  Relationship relationship;
  std::optional<int> sequence_index;
  std::string workpiece_type;
  std::optional<Posed> grip_indicator;  ///< local frame
  bool task_related = false;
  Color color{200, 200, 200};

  /// Fiducial marker rigidly attached to this object (marker -> object).
  std::optional<RigidTransformd> marker_to_object;
  /// Object this one realizes (as-built twins, installed copies).
  std::optional<std::string> source_id;
  ObjectStatus status = ObjectStatus::Active;
  std::string annotation;

  std::vector<Obbd> world_geometry() const;
  bool is_pending_target() const {
    return layer == Layer::Target && status == ObjectStatus::Active;
  }
};

/// A pile of identical workpieces. Item k sits at base_pose raised by
/// k * item_vertical_pitch; the top item is k = quantity - 1.
struct MaterialStack {
  std::string id;
  std::string workpiece_type;
  int quantity = 0;
  Posed base_pose;
  double item_vertical_pitch = 0.0;
  std::vector<Obbd> item_geometry;  ///< one item, item-local frame
  std::optional<RigidTransformd> marker_to_object;

  Posed item_pose(int index) const;
  Posed top_item_pose() const { return item_pose(quantity - 1); }
};

enum class RecordKind { Robot, ManualReplacement };

struct AsBuiltRecord {
  std::string target_id;
  Posed pose;
  double timestamp = 0.0;
  RecordKind kind = RecordKind::Robot;
};

struct ScanRecord {
  std::string object_id;
  Posed pose;
  double timestamp = 0.0;
};

/// One body of a collision scene, geometry already in world coordinates.
struct SceneBody {
  std::string id;
  std::string source_id;  ///< design object / stack this body stands for
  Layer layer = Layer::AsBuilt;
  std::string workpiece_type;
  std::vector<Obbd> boxes;
};

struct ValidationIssue {
  std::string object_id;
  std::string rule;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// Suffix of the as-built twin created for a scanned or installed object.
inline constexpr std::string_view kAsBuiltSuffix = ".as_built";
inline constexpr std::string_view kReplacementSuffix = ".replacement";

/// The layered building-information repository. Value type: copies are
/// independent snapshots.
class BimRepository {
 public:
  BimRepository() = default;

  const std::map<std::string, BimObject>& objects() const { return objects_; }
  const std::map<std::string, MaterialStack>& stacks() const { return stacks_; }
  const std::vector<AsBuiltRecord>& as_built_records() const {
    return as_built_records_;
  }
  const std::vector<ScanRecord>& scan_records() const { return scan_records_; }

  /// Scenario sections owned by other modules (noise_model, workcell,
  /// ground_truth), kept verbatim for export.
  const nlohmann::json& sections() const { return sections_; }
  nlohmann::json& sections() { return sections_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  const BimObject& object(const std::string& id) const;
  const BimObject* find(const std::string& id) const;
  const MaterialStack& stack(const std::string& id) const;
  const MaterialStack* find_stack(const std::string& id) const;

  void add_object(BimObject object);
  void add_stack(MaterialStack stack);
  /// Replaces quantity and base pose of a stack (perception update).
  void register_stack(const MaterialStack& stack);

  /// Pending target with the smallest sequence index.
  std::optional<BimObject> next_target() const;
  std::vector<std::string> pending_targets() const;
  std::size_t target_count() const;

  /// Appends an installation record and places a copy of the target on the
  /// AsBuilt layer at `installed_pose`.
  void record_as_built(const std::string& target_id, const Posed& installed_pose,
                       double timestamp);

  /// Appends a scan record and creates/updates the as-built twin.
  void record_scan(const std::string& object_id, const Posed& detected_pose,
                   double timestamp);

  /// Top item pose before the decrement.
  Posed consume_material(const std::string& stack_id);

  /// Human replaced the target; the replacement goes on AsBuilt and the
  /// target is marked resolved.
  void apply_manual_replacement(const std::string& target_id,
                                const std::vector<Obbd>& replacement_geometry,
                                const Posed& placed_pose, double timestamp);

  /// Current as-built knowledge of an object: its twin if one exists, the
  /// object itself if it lives on AsBuilt, otherwise null.
  const BimObject* as_built_twin(const std::string& id) const;

  /// Parent chain, nearest first.
  std::vector<std::string> ancestors(const std::string& id) const;

  /// First stack of the given type that still has items.
  const MaterialStack* stack_for(const std::string& workpiece_type) const;

  /// AsBuilt and VirtualCollision bodies (what adaptation checks against).
  std::vector<SceneBody> nearby_scene() const;
  /// AsBuilt, Materials (including stack items) and VirtualCollision bodies.
  std::vector<SceneBody> planning_scene() const;

  /// Checks every type invariant; empty when valid.
  std::vector<ValidationIssue> validate() const;

  void add_as_built_record(AsBuiltRecord r) { as_built_records_.push_back(std::move(r)); }
  void add_scan_record(ScanRecord r) { scan_records_.push_back(std::move(r)); }

 private:
  BimObject& mutable_object(const std::string& id);

  std::string name_;
  std::map<std::string, BimObject> objects_;
  std::map<std::string, MaterialStack> stacks_;
  std::vector<AsBuiltRecord> as_built_records_;
  std::vector<ScanRecord> scan_records_;
  nlohmann::json sections_ = nlohmann::json::object();
};

std::string_view to_string(Layer layer);
std::string_view to_string(RelationshipKind kind);
std::string_view to_string(ObjectStatus status);
std::optional<Layer> layer_from_string(std::string_view s);
std::optional<RelationshipKind> relationship_from_string(std::string_view s);
std::optional<ObjectStatus> status_from_string(std::string_view s);

/// Id of the stack item body `index` in a collision scene.
std::string stack_item_id(const std::string& stack_id, int index);

}  // namespace bimtwin::bim
