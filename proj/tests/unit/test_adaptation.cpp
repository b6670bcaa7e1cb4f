#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bimtwin/adaptation/adaptation.hpp"
#include "random_geometry.hpp"

namespace bimtwin::adaptation {
namespace {

using testing::homogeneous;
using testing::random_transform;
using testing::rot_z;

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Matrix4d mat(const RigidTransformd& t) {
  return homogeneous(t.rotation().toRotationMatrix(), t.translation());
}

TEST(DesignBuiltDeviation, EqualTransformsGiveIdentity) {
  std::mt19937_64 rng(41);
  const auto t = random_transform(rng);
  const auto d = design_built_deviation(t, t);
  EXPECT_LT(d.translation().norm(), 1e-12);
  EXPECT_LT(d.angle(), 1e-7);
}

TEST(DesignBuiltDeviation, IdentityDesignFrame) {
  const auto d = design_built_deviation(RigidTransformd::Identity(),
                                        RigidTransformd::Translation(0, 0, 0.012));
  EXPECT_EQ(d.translation(), Vector3d(0, 0, 0.012));
  EXPECT_EQ(d.angle(), 0.0);
}

TEST(DesignBuiltDeviation, MatchesMatrixProduct) {
  const auto T_D = RigidTransformd::RotationZ(10 * kDeg);
  const auto T_B = RigidTransformd::Translation(0.05, 0, 0) * RigidTransformd::RotationZ(10 * kDeg);
  const Eigen::Matrix4d D = homogeneous(rot_z(10 * kDeg), Vector3d::Zero());
  const Eigen::Matrix4d B = homogeneous(Eigen::Matrix3d::Identity(), Vector3d(0.05, 0, 0)) *
                            homogeneous(rot_z(10 * kDeg), Vector3d::Zero());
  const Eigen::Matrix4d expected = D.inverse() * B;
  EXPECT_LT((design_built_deviation(T_D, T_B).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AdaptParent, ZeroDeviationReturnsDesignExactly) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    const auto T = random_transform(rng);
    const auto D_t = random_transform(rng);
    EXPECT_EQ(adapt_parent_deviation(D_t, T, T), D_t.pose());
  }
}

TEST(AdaptParent, FrameRotatedAndShiftedPreservesRelativePose) {
  const RigidTransformd T_D = RigidTransformd::Translation(0.5, 1.0, 0.0);
  const RigidTransformd T_B = RigidTransformd::Translation(0.510, 1.005, 0.0) *
                              RigidTransformd::RotationZ(2 * kDeg);
  const RigidTransformd D_t = RigidTransformd::Translation(1.2, 1.02, 0.6);
  const Posed P_t = adapt_parent_deviation(D_t, T_D, T_B);
  const Eigen::Matrix4d lhs = mat(T_B).inverse() * mat(RigidTransformd(P_t));
  const Eigen::Matrix4d rhs = mat(T_D).inverse() * mat(D_t);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AdaptParent, PureTranslationCommutes) {
  const double h = 0.0123;
  std::mt19937_64 rng(43);
  const auto D_t = random_transform(rng);
  const Posed p = adapt_parent_deviation(D_t, RigidTransformd::Identity(),
                                         RigidTransformd::Translation(0, 0, h));
  EXPECT_LT((p.position - (D_t.translation() + Vector3d(0, 0, h))).norm(), 1e-12);
  EXPECT_LT(p.orientation.angularDistance(D_t.rotation()), 1e-7);
}

TEST(AdaptParentProperty, RelativePoseIdentityOverRandomInputs) {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 1000; ++i) {
    const auto T_D = random_transform(rng);
    const auto T_B = random_transform(rng);
    const auto D_t = random_transform(rng);
    const RigidTransformd T_t(adapt_parent_deviation(D_t, T_D, T_B));
    const Eigen::Matrix4d diff = mat(T_B.inverse() * T_t) - mat(T_D.inverse() * D_t);
    ASSERT_LT(diff.cwiseAbs().maxCoeff(), 1e-9) << "sample " << i;
  }
}

TEST(AdaptSeat, OnlyZMoves) {
  Posed design = Posed::At(0.3, -0.2, 0.045);
  design.orientation = Quaterniond(Eigen::AngleAxisd(0.4, Vector3d(1, 2, 3).normalized()));
  const Posed same = adapt_seat_deviation(design, 0.0, 0.0);
  EXPECT_EQ(same, design);
  const Posed high = adapt_seat_deviation(design, 0.0, 0.012);
  EXPECT_EQ(high.position.z(), 0.045 + 0.012);
  EXPECT_EQ(high.position.x(), design.position.x());
  EXPECT_EQ(high.position.y(), design.position.y());
  EXPECT_EQ(high.orientation.coeffs(), design.orientation.coeffs());
  const Posed low = adapt_seat_deviation(design, 0.1, 0.095);
  EXPECT_NEAR(low.position.z() - design.position.z(), -0.005, 1e-15);
}

// A stud whose +x face sits at x = stud_face, and a block whose -x face sits
// at x = block_face.
bim::SceneBody stud(double stud_face) {
  return bim::SceneBody{"stud", "stud", bim::Layer::AsBuilt, "stud",
                        {Obbd::Box(Vector3d(stud_face - 0.019, 0, 0.0445),
                                   Vector3d(0.019, 0.3, 0.0445))}};
}

const std::vector<Obbd> kBlock{Obbd::Box(Vector3d::Zero(), Vector3d(0.045, 0.09, 0.045))};

Posed block_at(double block_face) { return Posed::At(block_face + 0.045, 0, 0.045); }

TEST(CheckNearby, TrueGapIsClear) {
  const std::vector<bim::SceneBody> scene{stud(0.0)};
  EXPECT_TRUE(check_nearby(block_at(0.010), kBlock, scene, 0.0).empty());
}

TEST(CheckNearby, StudDeviatedIntoFootprint) {
  const std::vector<bim::SceneBody> scene{stud(0.018)};
  EXPECT_EQ(check_nearby(block_at(0.010), kBlock, scene, 0.0),
            std::vector<std::string>{"stud"});
}

TEST(CheckNearby, StudDeviatedOutward) {
  const std::vector<bim::SceneBody> scene{stud(-0.002)};
  EXPECT_TRUE(check_nearby(block_at(0.001), kBlock, scene, 0.0).empty());
}

TEST(CheckNearby, ClearanceInflatesTarget) {
  const std::vector<bim::SceneBody> scene{stud(0.0)};
  EXPECT_TRUE(check_nearby(block_at(0.002), kBlock, scene, 0.0019).empty());
  EXPECT_FALSE(check_nearby(block_at(0.002), kBlock, scene, 0.0021).empty());
}

TEST(SuggestOffset, PenetrationPlusClearance) {
  // Stud face at 0.018 reaches 8 mm past the block face at 0.010.
  const auto intruder = stud(0.018);
  const std::vector<bim::SceneBody> scene{intruder};
  const auto s = suggest_offset("b0", block_at(0.010), kBlock, intruder, Vector3d::UnitX(),
                                0.001, scene, 0.0, 0.05);
  ASSERT_TRUE(s.suggested_pose);
  const double offset = s.suggested_pose->position.x() - block_at(0.010).position.x();
  EXPECT_NEAR(offset, 0.008 + 0.001, 1e-5);
  EXPECT_EQ(s.suggested_pose->position.y(), 0.0);
  EXPECT_TRUE(s.affects_subsequent);
  EXPECT_EQ(s.basis, DeviationKind::NearbyObjectDeviation);
  EXPECT_TRUE(check_nearby(*s.suggested_pose, kBlock, scene, 0.0).empty());
}

TEST(SuggestOffset, TangentIntruderNeedsClearanceOnly) {
  const auto intruder = stud(0.010);
  const std::vector<bim::SceneBody> scene{intruder};
  const auto s = suggest_offset("b0", block_at(0.010), kBlock, intruder, Vector3d::UnitX(),
                                0.001, scene, 0.0, 0.05);
  EXPECT_NEAR(s.suggested_pose->position.x() - block_at(0.010).position.x(), 0.001, 1e-5);
}

TEST(SuggestOffset, MinimalAgainstOneDimensionalOracle) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> pen(0.0005, 0.03);
  std::uniform_real_distribution<double> clr(0.0, 0.005);
  for (int i = 0; i < 200; ++i) {
    const double p = pen(rng), c = clr(rng);
    const auto intruder = stud(0.010 + p);
    const std::vector<bim::SceneBody> scene{intruder};
    const auto s = suggest_offset("b0", block_at(0.010), kBlock, intruder, Vector3d::UnitX(), c,
                                  scene, 0.0, 0.05);
    const double offset = s.suggested_pose->position.x() - block_at(0.010).position.x();
    // Interval arithmetic: the block's low end must reach stud_face + c.
    EXPECT_NEAR(offset, p + c, 1e-5);
    Posed shorter = *s.suggested_pose;
    shorter.position.x() -= 2e-5;
    EXPECT_FALSE(check_nearby(shorter, kBlock, scene, c).empty()) << i;
  }
}

TEST(SuggestOffset, SpanningIntruderIsUnsolvable) {
  const bim::SceneBody wall{"wall", "wall", bim::Layer::AsBuilt, "",
                            {Obbd::Box(Vector3d(0.2, 0, 0.05), Vector3d(0.5, 0.5, 0.05))}};
  const std::vector<bim::SceneBody> scene{wall};
  EXPECT_THROW(suggest_offset("b0", block_at(0.010), kBlock, wall, Vector3d::UnitX(), 0.001,
                              scene, 0.0, 0.05),
               UnsolvableOffsetError);
}

TEST(SuggestOffset, DefaultAxisPointsAwayFromIntruder) {
  const auto axis = default_row_axis(block_at(0.010), stud(0.018));
  EXPECT_NEAR(std::abs(axis.x()), 1.0, 1e-12);
}

// Repository fixtures for analyze_target.

bim::BimRepository frame_and_panel() {
  bim::BimRepository repo;
  bim::BimObject frame;
  frame.id = "frame";
  frame.layer = bim::Layer::AsDesigned;
  frame.pose = Posed::At(0.5, 1.0, 0.0);
  frame.geometry = {Obbd::Box(Vector3d(1.2, 0, 0.6), Vector3d(1.2, 0.045, 0.6))};
  repo.add_object(frame);
  bim::BimObject panel;
  panel.id = "panel0";
  panel.layer = bim::Layer::Target;
  panel.sequence_index = 0;
  panel.grip_indicator = Posed();
  panel.relationship = {std::string("frame"), bim::RelationshipKind::FullyConnected};
  panel.pose = Posed::At(0.8, 1.06, 0.62);
  panel.geometry = {Obbd::Box(Vector3d::Zero(), Vector3d(0.3, 0.006, 0.6))};
  repo.add_object(panel);
  return repo;
}

TEST(AnalyzeTarget, UndeviatedFrameKeepsDesign) {
  auto repo = frame_and_panel();
  repo.record_scan("frame", repo.object("frame").pose, 0.0);
  const auto [report, suggestion] = analyze_target(repo, "panel0", Config{});
  EXPECT_EQ(report.kind, DeviationKind::None);
  EXPECT_EQ(suggestion.basis, DeviationKind::None);
  EXPECT_EQ(*suggestion.suggested_pose, repo.object("panel0").pose);
}

TEST(AnalyzeTarget, RotatedFrameGivesParentDeviation) {
  auto repo = frame_and_panel();
  const RigidTransformd T_D(repo.object("frame").pose);
  const RigidTransformd T_B = RigidTransformd::Translation(0.01, 0, 0) * T_D *
                              RigidTransformd::RotationZ(2 * kDeg);
  repo.record_scan("frame", T_B.pose(), 0.0);
  const auto [report, suggestion] = analyze_target(repo, "panel0", Config{});
  EXPECT_EQ(report.kind, DeviationKind::ParentDeviation);
  EXPECT_EQ(report.reference_id, std::string("frame"));
  EXPECT_NEAR(report.magnitude.rotation, 2 * kDeg, 1e-9);
  const Posed expected = adapt_parent_deviation(RigidTransformd(repo.object("panel0").pose),
                                                T_D, RigidTransformd(T_B.pose()));
  EXPECT_EQ(*suggestion.suggested_pose, expected);
  EXPECT_FALSE(suggestion.affects_subsequent);
}

TEST(AnalyzeTarget, BelowToleranceIsNone) {
  auto repo = frame_and_panel();
  repo.record_scan("frame", translated(repo.object("frame").pose, Vector3d(0.0004, 0, 0)), 0.0);
  EXPECT_EQ(analyze_target(repo, "panel0", Config{}).first.kind, DeviationKind::None);
}

TEST(AnalyzeTarget, UnscannedParentIsPerceptionGap) {
  const auto repo = frame_and_panel();
  EXPECT_THROW(analyze_target(repo, "panel0", Config{}), PerceptionGapError);
}

TEST(AnalyzeTarget, SeatedUsesHeightOnly) {
  bim::BimRepository repo;
  bim::BimObject base;
  base.id = "base";
  base.layer = bim::Layer::AsDesigned;
  base.geometry = {Obbd::Box(Vector3d(0, 0, -0.05), Vector3d(0.5, 0.5, 0.05))};
  repo.add_object(base);
  bim::BimObject block;
  block.id = "b";
  block.layer = bim::Layer::Target;
  block.sequence_index = 0;
  block.grip_indicator = Posed();
  block.relationship = {std::string("base"), bim::RelationshipKind::Seated};
  block.pose = Posed::At(0.1, 0.1, 0.045);
  block.geometry = kBlock;
  repo.add_object(block);
  Posed seat = Posed::At(0.02, 0, 0.012);
  seat.orientation = Quaterniond(Eigen::AngleAxisd(0.1, Vector3d::UnitZ()));
  repo.record_scan("base", seat, 0.0);
  const auto [report, suggestion] = analyze_target(repo, "b", Config{});
  EXPECT_EQ(report.kind, DeviationKind::SeatDeviation);
  EXPECT_EQ(suggestion.suggested_pose->position, Vector3d(0.1, 0.1, 0.045 + 0.012));
}

TEST(AnalyzeTarget, IntrudingStudGetsOffsetSuggestion) {
  bim::BimRepository repo;
  bim::BimObject s;
  s.id = "stud";
  s.layer = bim::Layer::AsDesigned;
  s.geometry = stud(0.0).boxes;
  repo.add_object(s);
  bim::BimObject block;
  block.id = "b0";
  block.layer = bim::Layer::Target;
  block.sequence_index = 0;
  block.grip_indicator = Posed();
  block.pose = block_at(0.010);
  block.geometry = kBlock;
  repo.add_object(block);
  repo.record_scan("stud", Posed::At(0.018, 0, 0), 0.0);

  Config config;
  config.row_axis = Vector3d::UnitX();
  config.offset_clearance = 0.010;
  const auto [report, suggestion] = analyze_target(repo, "b0", config);
  EXPECT_EQ(report.kind, DeviationKind::NearbyObjectDeviation);
  EXPECT_EQ(report.intruders, std::vector<std::string>{"stud.as_built"});
  ASSERT_TRUE(suggestion.suggested_pose);
  EXPECT_TRUE(suggestion.affects_subsequent);
  EXPECT_NEAR(suggestion.suggested_pose->position.x() - block.pose.position.x(), 0.018, 1e-5);
  EXPECT_TRUE(check_nearby(*suggestion.suggested_pose, kBlock,
                           nearby_scene_for(repo, "b0"), 0.0).empty());
}

TEST(ManualReplacement, AdvancesQueueAndRejectsRepeat) {
  auto repo = frame_and_panel();
  apply_manual_replacement(repo, "panel0", {Obbd::Box(Vector3d::Zero(), Vector3d(0.26, 0.006, 0.6))},
                           repo.object("panel0").pose, 1.0);
  EXPECT_FALSE(repo.next_target());
  EXPECT_THROW(apply_manual_replacement(repo, "panel0", {}, Posed(), 2.0), StateError);
}

TEST(Config, ReadsWorkcellSection) {
  const auto j = nlohmann::json::parse(R"({"adaptation": {"tolerance_translation": 0.002,
      "row_axis": [2, 0, 0], "offset_clearance": 0.003}})");
  const auto c = Config::from_json(j);
  EXPECT_EQ(c.tolerance_translation, 0.002);
  EXPECT_EQ(*c.row_axis, Vector3d::UnitX());
  EXPECT_EQ(c.offset_clearance, 0.003);
  EXPECT_NEAR(c.tolerance_rotation, 0.2 * kDeg, 1e-15);
  EXPECT_EQ(Config::from_json(c.to_json().is_object() ? nlohmann::json{{"adaptation", c.to_json()}}
                                                      : nlohmann::json{})
                .row_axis,
            c.row_axis);
}

}  // namespace
}  // namespace bimtwin::adaptation
