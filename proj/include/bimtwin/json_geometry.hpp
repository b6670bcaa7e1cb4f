#pragma once

#include <vector>

#include <json.hpp>

#include "bimtwin/error.hpp"
#include "bimtwin/geometry.hpp"

namespace bimtwin {

using Json = nlohmann::json;

// Geometry <-> JSON. Quaternions are written as [w, x, y, z].

Json vector_to_json(const Vector3d& v);
Vector3d vector_from_json(const Json& j);

Json quaternion_to_json(const Quaterniond& q);
Quaterniond quaternion_from_json(const Json& j);

Json pose_to_json(const Posed& p);
Posed pose_from_json(const Json& j);

Json transform_to_json(const RigidTransformd& t);
RigidTransformd transform_from_json(const Json& j);

Json obb_to_json(const Obbd& box);
Obbd obb_from_json(const Json& j);

Json boxes_to_json(const std::vector<Obbd>& boxes);
std::vector<Obbd> boxes_from_json(const Json& j);

}  // namespace bimtwin
