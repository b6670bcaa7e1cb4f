#include "bimtwin/adaptation/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bimtwin/json_geometry.hpp"

namespace bimtwin::adaptation {

using nlohmann::json;

namespace {

// Added to every offset so the shifted boxes are strictly apart under the
// closed-set intersection test.
constexpr double kOffsetEpsilon = 1e-6;
constexpr int kMaxOffsetRounds = 8;

const std::vector<Alternative> kAllAlternatives{
    Alternative::AcceptSuggestion, Alternative::ManualPoseAdjust,
    Alternative::ManualReplacement, Alternative::KeepOriginal};

std::vector<Obbd> place(std::span<const Obbd> geometry, const Posed& pose) {
  const RigidTransformd X(pose);
  std::vector<Obbd> out;
  out.reserve(geometry.size());
  for (const auto& b : geometry) out.push_back(b.transformed(X));
  return out;
}

std::pair<double, double> project(std::span<const Obbd> boxes, const Vector3d& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& b : boxes) {
    const auto [l, h] = b.project(axis);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

Vector3d centroid(std::span<const Obbd> boxes) {
  Vector3d c = Vector3d::Zero();
  double w = 0;
  for (const auto& b : boxes) {
    c += b.volume() * b.center();
    w += b.volume();
  }
  return w > 0 ? Vector3d(c / w) : c;
}

bool exceeds(const Magnitude& m, const Config& c) {
  return m.translation >= c.tolerance_translation || m.rotation >= c.tolerance_rotation;
}

const bim::SceneBody& body_by_id(std::span<const bim::SceneBody> scene, const std::string& id) {
  for (const auto& b : scene) {
    if (b.id == id) return b;
  }
  throw UnknownIdError("scene has no body '" + id + "'");
}

}  // namespace

Config Config::from_json(const json& workcell) {
  Config c;
  if (!workcell.is_object() || !workcell.contains("adaptation")) return c;
  const auto& a = workcell.at("adaptation");
  c.tolerance_translation = a.value("tolerance_translation", c.tolerance_translation);
  c.tolerance_rotation = a.value("tolerance_rotation", c.tolerance_rotation);
  c.nearby_clearance = a.value("nearby_clearance", c.nearby_clearance);
  c.offset_clearance = a.value("offset_clearance", c.offset_clearance);
  c.max_offset = a.value("max_offset", c.max_offset);
  if (a.contains("row_axis") && !a.at("row_axis").is_null()) {
    const Vector3d axis = vector_from_json(a.at("row_axis"));
    if (!(axis.norm() > 0)) throw ParseError("adaptation.row_axis must be non-zero");
    c.row_axis = axis.normalized();
  }
  if (c.nearby_clearance < 0 || c.offset_clearance < 0 || c.max_offset <= 0) {
    throw ParseError("adaptation clearances must be >= 0 and max_offset > 0");
  }
  return c;
}

json Config::to_json() const {
  return json{{"tolerance_translation", tolerance_translation},
              {"tolerance_rotation", tolerance_rotation},
              {"nearby_clearance", nearby_clearance},
              {"offset_clearance", offset_clearance},
              {"max_offset", max_offset},
              {"row_axis", row_axis ? vector_to_json(*row_axis) : json(nullptr)}};
}

RigidTransformd design_built_deviation(const RigidTransformd& T_D,
                                       const RigidTransformd& T_B) {
  return T_D.inverse() * T_B;
}

Posed adapt_parent_deviation(const RigidTransformd& D_t, const RigidTransformd& T_D,
                             const RigidTransformd& T_B) {
  if (T_D.translation() == T_B.translation() &&
      T_D.rotation().coeffs() == T_B.rotation().coeffs()) {
    return D_t.pose();
  }
  // Deviation left-composed: the target keeps its pose relative to the parent.
  return (T_B * (T_D.inverse() * D_t)).pose();
}

Posed adapt_seat_deviation(const Posed& target_design, double seat_design_z,
                           double seat_built_z) {
  Posed out = target_design;
  out.position.z() = target_design.position.z() + (seat_built_z - seat_design_z);
  return out;
}

std::vector<std::string> check_nearby(const Posed& target_pose,
                                      std::span<const Obbd> target_geometry,
                                      std::span<const bim::SceneBody> scene,
                                      double clearance) {
  std::vector<Obbd> placed = place(target_geometry, target_pose);
  if (clearance > 0) {
    for (auto& b : placed) b = b.inflated(clearance);
  }
  std::vector<std::string> out;
  for (const auto& body : scene) {
    bool hit = false;
    for (const auto& t : placed) {
      for (const auto& s : body.boxes) {
        if (obb_intersects(t, s)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) out.push_back(body.id);
  }
  return out;
}

double offset_distance(const Posed& target_pose, std::span<const Obbd> target_geometry,
                       std::span<const Obbd> intruder, const Vector3d& axis,
                       double clearance) {
  const auto placed = place(target_geometry, target_pose);
  const auto [t_lo, t_hi] = project(placed, axis);
  const auto [i_lo, i_hi] = project(intruder, axis);
  (void)t_hi;
  (void)i_lo;
  return std::max(0.0, i_hi + clearance - t_lo);
}

Vector3d default_row_axis(const Posed& target_pose, const bim::SceneBody& intruder) {
  const Vector3d away = target_pose.position - centroid(intruder.boxes);
  const auto R = target_pose.orientation.toRotationMatrix();
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(R.col(i).dot(away)) > std::abs(R.col(best).dot(away))) best = i;
  }
  return R.col(best);
}

AdaptationSuggestion suggest_offset(const std::string& target_id, const Posed& target_pose,
                                    std::span<const Obbd> target_geometry,
                                    const bim::SceneBody& intruder, const Vector3d& row_axis,
                                    double clearance, std::span<const bim::SceneBody> scene,
                                    double nearby_clearance, double max_offset) {
  if (!(row_axis.norm() > 0)) throw std::invalid_argument("row_axis must be non-zero");
  Vector3d axis = row_axis.normalized();
  if ((target_pose.position - centroid(intruder.boxes)).dot(axis) < 0) axis = -axis;

  double total = 0;
  Posed pose = target_pose;
  const bim::SceneBody* blocking = &intruder;
  for (int round = 0; round < kMaxOffsetRounds && blocking != nullptr; ++round) {
    const double s = offset_distance(pose, target_geometry, blocking->boxes, axis, clearance) +
                     kOffsetEpsilon;
    total += s;
    if (total > max_offset) {
      throw UnsolvableOffsetError("offsetting '" + target_id + "' by more than " +
                                  std::to_string(max_offset) + " m does not clear '" +
                                  blocking->id + "'");
    }
    pose.position += s * axis;
    blocking = nullptr;
    const auto remaining = check_nearby(pose, target_geometry, scene, nearby_clearance);
    if (!remaining.empty()) blocking = &body_by_id(scene, remaining.front());
    if (blocking == nullptr) {
      // The intruder itself may be absent from `scene`.
      const auto still = check_nearby(pose, target_geometry, std::span(&intruder, 1),
                                      nearby_clearance);
      if (!still.empty()) blocking = &intruder;
    }
  }
  if (blocking != nullptr) {
    throw UnsolvableOffsetError("no offset along the row clears '" + blocking->id + "'");
  }

  AdaptationSuggestion s;
  s.target_id = target_id;
  s.suggested_pose = pose;
  s.basis = DeviationKind::NearbyObjectDeviation;
  s.affects_subsequent = true;
  s.alternatives = kAllAlternatives;
  s.note = "offset " + std::to_string(total * 1000.0) + " mm to clear '" + intruder.id + "'";
  return s;
}

std::vector<bim::SceneBody> nearby_scene_for(const bim::BimRepository& repo,
                                             const std::string& target_id) {
  const auto ancestors = repo.ancestors(target_id);
  const std::set<std::string> excluded(ancestors.begin(), ancestors.end());
  std::vector<bim::SceneBody> out;
  for (auto& body : repo.nearby_scene()) {
    if (body.id == target_id || body.source_id == target_id) continue;
    if (excluded.count(body.id) || excluded.count(body.source_id)) continue;
    out.push_back(std::move(body));
  }
  return out;
}

void apply_manual_replacement(bim::BimRepository& repo, const std::string& target_id,
                              const std::vector<Obbd>& replacement_geometry,
                              const Posed& placed_pose, double timestamp) {
  repo.apply_manual_replacement(target_id, replacement_geometry, placed_pose, timestamp);
}

std::pair<DeviationReport, AdaptationSuggestion> analyze_target(
    const bim::BimRepository& repo, const std::string& target_id, const Config& config) {
  const bim::BimObject& target = repo.object(target_id);
  if (!target.is_pending_target()) {
    throw StateError("analyze: '" + target_id + "' is not a pending target");
  }

  DeviationReport report;
  report.target_id = target_id;
  report.design_transform = RigidTransformd(target.pose);
  report.built_transform = report.design_transform;
  Posed candidate = target.pose;

  const auto& rel = target.relationship;
  if (rel.parent_id && rel.kind != bim::RelationshipKind::Adjacent) {
    const bim::BimObject& parent = repo.object(*rel.parent_id);
    const bim::BimObject* built = repo.as_built_twin(*rel.parent_id);
    if (built == nullptr) {
      throw PerceptionGapError("analyze: '" + *rel.parent_id + "' (" +
                               std::string(bim::to_string(rel.kind)) + " parent of '" +
                               target_id + "') has no as-built pose");
    }
    report.reference_id = parent.id;
    report.design_transform = RigidTransformd(parent.pose);
    report.built_transform = RigidTransformd(built->pose);
    if (rel.kind == bim::RelationshipKind::FullyConnected) {
      const auto d = distance(report.design_transform, report.built_transform);
      report.magnitude = {d.translation, d.rotation};
      if (exceeds(report.magnitude, config)) {
        report.kind = DeviationKind::ParentDeviation;
        candidate = adapt_parent_deviation(RigidTransformd(target.pose),
                                           report.design_transform, report.built_transform);
      }
    } else {
      // Seat rotation is ignored: only the height moves the target.
      const double dz = built->pose.position.z() - parent.pose.position.z();
      report.magnitude = {std::abs(dz), 0.0};
      if (exceeds(report.magnitude, config)) {
        report.kind = DeviationKind::SeatDeviation;
        candidate = adapt_seat_deviation(target.pose, parent.pose.position.z(),
                                         built->pose.position.z());
      }
    }
  }

  const auto scene = nearby_scene_for(repo, target_id);
  const auto intruders = check_nearby(candidate, target.geometry, scene, config.nearby_clearance);

  AdaptationSuggestion suggestion;
  suggestion.target_id = target_id;
  suggestion.alternatives = kAllAlternatives;

  if (!intruders.empty()) {
    const bim::SceneBody& intruder = body_by_id(scene, intruders.front());
    report.kind = DeviationKind::NearbyObjectDeviation;
    report.reference_id = intruder.id;
    report.intruders = intruders;
    const bim::BimObject& built = repo.object(intruder.id);
    const bim::BimObject& design = built.source_id ? repo.object(*built.source_id) : built;
    report.design_transform = RigidTransformd(design.pose);
    report.built_transform = RigidTransformd(built.pose);
    const auto d = distance(report.design_transform, report.built_transform);
    report.magnitude = {d.translation, d.rotation};

    const Vector3d axis = config.row_axis ? *config.row_axis : default_row_axis(candidate, intruder);
    try {
      suggestion = suggest_offset(target_id, candidate, target.geometry, intruder, axis,
                                  config.offset_clearance, scene, config.nearby_clearance,
                                  config.max_offset);
    } catch (const UnsolvableOffsetError& e) {
      suggestion.basis = DeviationKind::NearbyObjectDeviation;
      suggestion.affects_subsequent = true;
      suggestion.alternatives = {Alternative::ManualPoseAdjust, Alternative::ManualReplacement,
                                 Alternative::KeepOriginal};
      suggestion.note = e.what();
    }
    return {report, suggestion};
  }

  suggestion.basis = report.kind;
  suggestion.suggested_pose = candidate;
  return {report, suggestion};
}

std::string_view to_string(DeviationKind kind) {
  switch (kind) {
    case DeviationKind::None: return "None";
    case DeviationKind::ParentDeviation: return "ParentDeviation";
    case DeviationKind::SeatDeviation: return "SeatDeviation";
    case DeviationKind::NearbyObjectDeviation: return "NearbyObjectDeviation";
  }
  return "None";
}

std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::AcceptSuggestion: return "AcceptSuggestion";
    case Alternative::ManualPoseAdjust: return "ManualPoseAdjust";
    case Alternative::ManualReplacement: return "ManualReplacement";
    case Alternative::KeepOriginal: return "KeepOriginal";
  }
  return "KeepOriginal";
}

std::optional<DeviationKind> deviation_kind_from_string(std::string_view s) {
  for (auto k : {DeviationKind::None, DeviationKind::ParentDeviation,
                 DeviationKind::SeatDeviation, DeviationKind::NearbyObjectDeviation}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<Alternative> alternative_from_string(std::string_view s) {
  for (auto a : kAllAlternatives) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

}  // namespace bimtwin::adaptation
