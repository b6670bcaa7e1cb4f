#include "bimtwin/json_geometry.hpp"

#include <cmath>
#include <string>

namespace bimtwin {

namespace {

double number_at(const Json& j, std::size_t i) {
  if (!j.is_array() || i >= j.size() || !j[i].is_number()) {
    throw ParseError("expected numeric array, got " + j.dump());
  }
  return j[i].get<double>();
}

void require_size(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(std::string(what) + ": expected array of " +
                     std::to_string(n) + " numbers");
  }
}

}  // namespace

Json vector_to_json(const Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vector3d vector_from_json(const Json& j) {
  require_size(j, 3, "vector");
  return {number_at(j, 0), number_at(j, 1), number_at(j, 2)};
}

Json quaternion_to_json(const Quaterniond& q) {
  return Json::array({q.w(), q.x(), q.y(), q.z()});
}

Quaterniond quaternion_from_json(const Json& j) {
  require_size(j, 4, "quaternion");
  Quaterniond q(number_at(j, 0), number_at(j, 1), number_at(j, 2),
                number_at(j, 3));
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw ParseError("quaternion is not unit length: " + j.dump());
  }
  return q;
}

Json pose_to_json(const Posed& p) {
  return Json{{"position", vector_to_json(p.position)},
              {"orientation", quaternion_to_json(p.orientation)}};
}

Posed pose_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("position") || !j.contains("orientation")) {
    throw ParseError("pose needs position and orientation: " + j.dump());
  }
  return Posed{vector_from_json(j.at("position")),
               quaternion_from_json(j.at("orientation"))};
}

Json transform_to_json(const RigidTransformd& t) {
  return Json{{"translation", vector_to_json(t.translation())},
              {"rotation", quaternion_to_json(t.rotation())}};
}

RigidTransformd transform_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("translation") || !j.contains("rotation")) {
    throw ParseError("transform needs translation and rotation: " + j.dump());
  }
  return RigidTransformd(quaternion_from_json(j.at("rotation")),
                         vector_from_json(j.at("translation")));
}

Json obb_to_json(const Obbd& box) {
  return Json{{"center", pose_to_json(box.center_pose())},
              {"half_extents", vector_to_json(box.half_extents())}};
}

Obbd obb_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("center") || !j.contains("half_extents")) {
    throw ParseError("box needs center and half_extents: " + j.dump());
  }
  try {
    return Obbd(pose_from_json(j.at("center")),
                vector_from_json(j.at("half_extents")));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

Json boxes_to_json(const std::vector<Obbd>& boxes) {
  Json out = Json::array();
  for (const auto& b : boxes) out.push_back(obb_to_json(b));
  return out;
}

std::vector<Obbd> boxes_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("boxes must be an array");
  std::vector<Obbd> out;
  out.reserve(j.size());
  for (const auto& b : j) out.push_back(obb_from_json(b));
  return out;
}

}  // namespace bimtwin
