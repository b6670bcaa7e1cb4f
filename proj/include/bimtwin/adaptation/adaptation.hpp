#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bimtwin/bim/repository.hpp"
#include "bimtwin/geometry.hpp"

namespace bimtwin::adaptation {

enum class DeviationKind { None, ParentDeviation, SeatDeviation, NearbyObjectDeviation };

enum class Alternative { AcceptSuggestion, ManualPoseAdjust, ManualReplacement, KeepOriginal };

struct Magnitude {
  double translation = 0.0;  ///< meters
  double rotation = 0.0;     ///< radians
};

struct DeviationReport {
  DeviationKind kind = DeviationKind::None;
  std::string target_id;
  std::optional<std::string> reference_id;
  RigidTransformd design_transform;  ///< T_D
  RigidTransformd built_transform;   ///< T_B
  Magnitude magnitude;
  std::vector<std::string> intruders;
};

struct AdaptationSuggestion {
  std::string target_id;
  /// Absent when no offset along the row axis clears the intruder.
  std::optional<Posed> suggested_pose;
  DeviationKind basis = DeviationKind::None;
  bool affects_subsequent = false;
  std::vector<Alternative> alternatives;
  std::string note;
};

struct Config {
  double tolerance_translation = 0.001;
  double tolerance_rotation = 0.2 * 3.14159265358979323846 / 180.0;
  double nearby_clearance = 0.0;   ///< inflation used by check_nearby
  double offset_clearance = 0.001; ///< clearance added by suggest_offset
  double max_offset = 0.05;
  std::optional<Vector3d> row_axis;

  /// Reads the `adaptation` object of a workcell section (missing keys keep
  /// their defaults).
  static Config from_json(const nlohmann::json& workcell);
  nlohmann::json to_json() const;
};

/// Raised when a parent or seat has no as-built knowledge.
class PerceptionGapError : public StateError {
 public:
  using StateError::StateError;
};

/// No offset along the row axis clears the intruder within max_offset.
class UnsolvableOffsetError : public Error {
 public:
  using Error::Error;
};

/// T_D^B = inv(T_D) * T_B.
RigidTransformd design_built_deviation(const RigidTransformd& T_D,
                                       const RigidTransformd& T_B);

/// T_t = T_B * inv(T_D) * D_t. Preserves the target's pose relative to its
/// parent; returns D_t unchanged when T_B equals T_D.
Posed adapt_parent_deviation(const RigidTransformd& D_t, const RigidTransformd& T_D,
                             const RigidTransformd& T_B);

/// z' = z + (S_BZ - S_DZ); everything else copied.
Posed adapt_seat_deviation(const Posed& target_design, double seat_design_z,
                           double seat_built_z);

/// Ids of scene bodies touching the target geometry (inflated by clearance)
/// at `target_pose`.
std::vector<std::string> check_nearby(const Posed& target_pose,
                                      std::span<const Obbd> target_geometry,
                                      std::span<const bim::SceneBody> scene,
                                      double clearance);

/// Translates the target along `row_axis` (sign chosen away from the
/// intruder) by the smallest distance that separates the projections by
/// `clearance`, then re-checks against `scene`. Throws
/// UnsolvableOffsetError if the distance exceeds `max_offset` or the shifted
/// pose still collides.
AdaptationSuggestion suggest_offset(const std::string& target_id, const Posed& target_pose,
                                    std::span<const Obbd> target_geometry,
                                    const bim::SceneBody& intruder, const Vector3d& row_axis,
                                    double clearance, std::span<const bim::SceneBody> scene,
                                    double nearby_clearance, double max_offset);

/// Offset distance along `axis` that clears `intruder` (1-D projection).
double offset_distance(const Posed& target_pose, std::span<const Obbd> target_geometry,
                       std::span<const Obbd> intruder, const Vector3d& axis,
                       double clearance);

/// Target-local axis most aligned with the direction from intruder to target.
Vector3d default_row_axis(const Posed& target_pose, const bim::SceneBody& intruder);

/// Bodies a target may be checked against: AsBuilt and VirtualCollision,
/// minus the target's ancestors and its own copies.
std::vector<bim::SceneBody> nearby_scene_for(const bim::BimRepository& repo,
                                             const std::string& target_id);

void apply_manual_replacement(bim::BimRepository& repo, const std::string& target_id,
                              const std::vector<Obbd>& replacement_geometry,
                              const Posed& placed_pose, double timestamp);

std::pair<DeviationReport, AdaptationSuggestion> analyze_target(
    const bim::BimRepository& repo, const std::string& target_id, const Config& config);

std::string_view to_string(DeviationKind kind);
std::string_view to_string(Alternative a);
std::optional<DeviationKind> deviation_kind_from_string(std::string_view s);
std::optional<Alternative> alternative_from_string(std::string_view s);

}  // namespace bimtwin::adaptation
