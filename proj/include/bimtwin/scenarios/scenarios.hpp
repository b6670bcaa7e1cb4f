#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "bimtwin/geometry.hpp"

namespace bimtwin::scenarios {

enum class StudPlacement { Nominal, Intruding, Outward };

/// Four-block line beside a stud, fed from one stack.
struct BlocksOptions {
  double gap = 0.001;          ///< stud-to-block and block-to-block gap
  StudPlacement stud = StudPlacement::Nominal;
  double intrusion = 0.008;    ///< how far an intruding stud enters slot 0
  double outward = 0.002;      ///< how far an outward stud moves away
  double sigma_translation = 0.002;
  double sigma_rotation = 0.01;
  std::uint64_t seed = 0;
  double drop_height = 0.005;  ///< release height above the believed support
  Vector3d block_half_extents{0.045, 0.09, 0.045};
  int blocks = 4;
};

/// Drywall case study: a wall frame, three large and one small panel.
struct DrywallOptions {
  double frame_yaw = 0.0;  ///< true frame rotation about z (radians)
  Vector3d frame_shift = Vector3d::Zero();
  double sigma_translation = 0.0;
  double sigma_rotation = 0.0;
  std::uint64_t seed = 0;
};

nlohmann::json make_blocks_scenario(const BlocksOptions& options);
nlohmann::json make_drywall_scenario(const DrywallOptions& options);

/// "blocks" (default options) or "drywall" (frame built 2 degrees and
/// 10 mm off its design); nullopt for other names.
std::optional<nlohmann::json> builtin(const std::string& name);

}  // namespace bimtwin::scenarios
