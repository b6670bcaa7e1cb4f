#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bimtwin/perception/perception.hpp"
#include "random_geometry.hpp"

namespace bimtwin::perception {
namespace {

// One object whose marker sits `lever` metres from its pose indicator.
struct LeverSetup {
  GroundTruthWorld world;
  std::vector<MarkerBinding> bindings;
};

LeverSetup lever_setup(double lever) {
  LeverSetup s;
  Posed truth = Posed::At(1.0, 2.0, 0.5);
  truth.orientation = Quaterniond(Eigen::AngleAxisd(0.3, Vector3d::UnitZ()));
  s.world.true_poses["frame"] = truth;
  // The object lies `lever` along the marker's x axis.
  s.bindings.push_back({"frame", RigidTransformd::Translation(lever, 0, 0), std::nullopt});
  return s;
}

double mean_position_error(double lever, double sigma_r, int seeds) {
  const auto s = lever_setup(lever);
  double sum = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    NoiseModel noise{0.0, sigma_r, static_cast<std::uint64_t>(seed) * 7919 + 1};
    const auto d = scan_environment(s.world, s.bindings, noise);
    sum += (d[0].pose.position - s.world.true_poses.at("frame").position).norm();
  }
  return sum / seeds;
}

TEST(ScanEnvironment, ZeroNoiseIsExact) {
  std::mt19937_64 rng(31);
  GroundTruthWorld world;
  std::vector<MarkerBinding> bindings;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "o" + std::to_string(i);
    world.true_poses[id] = testing::random_pose(rng);
    bindings.push_back({id, testing::random_transform(rng, 1.0), std::nullopt});
  }
  const auto detections = scan_environment(world, bindings, NoiseModel{0, 0, 99});
  ASSERT_EQ(detections.size(), 20u);
  for (const auto& d : detections) EXPECT_EQ(d.pose, world.true_poses.at(d.object_id));
}

TEST(ScanEnvironment, SameSeedSameDetections) {
  const auto s = lever_setup(2.4);
  const NoiseModel noise{0.002, 0.01, 42};
  const auto a = scan_environment(s.world, s.bindings, noise);
  const auto b = scan_environment(s.world, s.bindings, noise);
  EXPECT_EQ(a[0].pose, b[0].pose);
  const auto c = scan_environment(s.world, s.bindings, NoiseModel{0.002, 0.01, 43});
  EXPECT_FALSE(a[0].pose == c[0].pose);
}

TEST(ScanEnvironment, MissingObjectIsAnError) {
  GroundTruthWorld world;
  const std::vector<MarkerBinding> bindings{{"ghost", RigidTransformd(), std::nullopt}};
  EXPECT_THROW(scan_environment(world, bindings, NoiseModel{}), UnknownIdError);
}

TEST(LeverArm, FixedAngleAboutPerpendicularAxis) {
  // A marker rotated by 0.005 rad about z moves a point 2.4 m along x by
  // 2 d sin(theta / 2), which is d * theta = 12 mm to first order.
  const double d = 2.4, theta = 0.005;
  const auto offset = RigidTransformd::Translation(d, 0, 0);
  const auto marker = RigidTransformd::Identity();
  const auto rotated = marker * RigidTransformd::RotationZ(theta);
  const double err = ((rotated * offset).translation() - (marker * offset).translation()).norm();
  EXPECT_NEAR(err, 2 * d * std::sin(theta / 2), 1e-15);
  EXPECT_NEAR(err, 0.012, 0.012 * 1e-5);
}

TEST(LeverArm, MonteCarloMeanMatchesIsotropicModel) {
  // Gaussian angle about a uniform random axis: E|theta| = sigma sqrt(2/pi),
  // E[sin(angle between axis and lever)] = pi/4 over the sphere.
  const double d = 2.4, sigma = 0.005;
  const double expected = d * sigma * std::sqrt(2.0 / std::numbers::pi) * std::numbers::pi / 4.0;
  EXPECT_NEAR(expected, 0.00752, 0.00001);
  const double mean = mean_position_error(d, sigma, 1000);
  EXPECT_NEAR(mean, expected, 0.15 * expected);
}

TEST(LeverArm, ErrorGrowsWithDistance) {
  double previous = mean_position_error(0.0, 0.01, 1000);
  EXPECT_NEAR(previous, 0.0, 1e-12);
  for (double d : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double e = mean_position_error(d, 0.01, 1000);
    EXPECT_GT(e, previous) << "lever " << d;
    previous = e;
  }
}

TEST(LeverArm, TranslationNoisePerAxis) {
  const auto s = lever_setup(0.0);
  std::vector<double> dx;
  for (int seed = 0; seed < 4000; ++seed) {
    const auto d = scan_environment(s.world, s.bindings,
                                    NoiseModel{0.002, 0.0, static_cast<std::uint64_t>(seed)});
    dx.push_back(d[0].pose.position.x() - s.world.true_poses.at("frame").position.x());
  }
  double m = 0, v = 0;
  for (double x : dx) m += x;
  m /= dx.size();
  for (double x : dx) v += (x - m) * (x - m);
  EXPECT_NEAR(std::sqrt(v / (dx.size() - 1)), 0.002, 0.0002);
  EXPECT_NEAR(m, 0.0, 0.0002);
}

TEST(InferStack, PitchArithmetic) {
  const auto s = infer_stack("s", {"panel-large", 3}, Posed(), 0.020);
  EXPECT_EQ(s.quantity, 3);
  EXPECT_EQ(s.workpiece_type, "panel-large");
  EXPECT_NEAR(s.top_item_pose().position.z(), 0.040, 1e-15);
}

TEST(InferStack, EmptyAndSingle) {
  EXPECT_EQ(infer_stack("s", {"b", 0}, Posed(), 0.1).quantity, 0);
  const Posed base = Posed::At(0.3, 0.2, 0.1);
  EXPECT_EQ(infer_stack("s", {"b", 1}, base, 0.1).top_item_pose(), base);
  EXPECT_THROW(infer_stack("s", {"b", -1}, base, 0.1), ParseError);
}

TEST(ScanEnvironment, ZeroNoiseScanReproducesTruthInRepository) {
  bim::BimRepository repo;
  bim::BimObject frame;
  frame.id = "frame";
  frame.layer = bim::Layer::AsDesigned;
  frame.geometry = {Obbd::Box(Vector3d::Zero(), Vector3d(1, 0.05, 0.05))};
  frame.marker_to_object = RigidTransformd::Translation(-1.0, 0, 0);
  repo.add_object(frame);
  Posed truth = Posed::At(0.01, -0.005, 0.002);
  truth.orientation = Quaterniond(Eigen::AngleAxisd(0.0349, Vector3d::UnitZ()));
  repo.sections()["ground_truth"] = {{"object_poses", {{"frame", {
      {"position", {truth.position.x(), truth.position.y(), truth.position.z()}},
      {"orientation", {truth.orientation.w(), truth.orientation.x(),
                       truth.orientation.y(), truth.orientation.z()}}}}}}};
  const auto world = make_ground_truth(repo);
  const auto bindings = marker_bindings(repo, world);
  ASSERT_EQ(bindings.size(), 1u);
  for (const auto& d : scan_environment(world, bindings, NoiseModel{})) {
    repo.record_scan(d.object_id, d.pose, 0.0);
  }
  const auto* twin = repo.as_built_twin("frame");
  ASSERT_NE(twin, nullptr);
  EXPECT_LT((twin->pose.position - truth.position).norm(), 1e-12);
  EXPECT_LT(twin->pose.orientation.angularDistance(truth.orientation), 1e-12);
}

}  // namespace
}  // namespace bimtwin::perception
