#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "solmplan/observation.hpp"
#include "solmplan/rng.hpp"
#include "solmplan/scan_sim.hpp"

using namespace solmplan;

namespace {

SceneDescription box_room() {
  SceneDescription desc;
  desc.name = "room";
  auto wall = [](double x, double y, double yaw, double len) {
    Primitive w;
    w.kind = PrimitiveKind::kWall;
    w.x = x;
    w.y = y;
    w.yaw = yaw;
    w.sx = len;
    w.sy = 0.1;
    w.sz = 2.0;
    return w;
  };
  desc.primitives.push_back(wall(0.0, 2.05, 0.0, 4.4));
  desc.primitives.push_back(wall(0.0, -2.05, 0.0, 4.4));
  desc.primitives.push_back(wall(2.05, 0.0, kPi / 2, 4.4));
  desc.primitives.push_back(wall(-2.05, 0.0, kPi / 2, 4.4));
  Primitive gp;
  gp.kind = PrimitiveKind::kGroundPlane;
  gp.sx = gp.sy = 4.0;
  desc.primitives.push_back(gp);
  return desc;
}

double observation_h(const Eigen::Vector3d& scan_point, const Eigen::Vector3d& u,
                     const Eigen::Vector3d& q, const PlanarPose& pose, double mount) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  const Eigen::Vector3d w(c * scan_point.x() - s * scan_point.y() + pose.x,
                          s * scan_point.x() + c * scan_point.y() + pose.y,
                          scan_point.z() + mount);
  return u.dot(w - q);
}

}  // namespace

TEST_CASE("plane fit recovers an exact plane") {
  std::vector<Eigen::Vector3d> pts = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.3, 0.7, 0}};
  const PlaneFit fit = fit_plane(pts, 0.1);
  REQUIRE(fit.valid);
  CHECK(std::abs(std::abs(fit.normal.z()) - 1.0) < 1e-12);
  CHECK(fit.max_residual == doctest::Approx(0.0));
  CHECK(std::abs(fit.normal.norm() - 1.0) < 1e-12);
}

TEST_CASE("collinear neighborhoods are invalid") {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(0.1 * i, 0.2 * i, -0.05 * i);
  CHECK_FALSE(fit_plane(pts, 0.1).valid);
  CHECK_FALSE(fit_plane({{0, 0, 0}, {1, 1, 1}}, 0.1).valid);  // k < 3
}

TEST_CASE("noisy plane normal within 2 degrees of truth") {
  Rng rng(5);
  const Eigen::Vector3d truth = Eigen::Vector3d(0.2, -0.3, 0.93).normalized();
  Eigen::Vector3d t1 = truth.unitOrthogonal();
  Eigen::Vector3d t2 = truth.cross(t1);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 40; ++i) {
    pts.push_back(rng.uniform(-0.5, 0.5) * t1 + rng.uniform(-0.5, 0.5) * t2 +
                  0.005 * rng.normal() * truth);
  }
  const PlaneFit fit = fit_plane(pts, 0.1);
  REQUIRE(fit.valid);
  const double angle = std::acos(std::min(1.0, std::abs(fit.normal.dot(truth))));
  CHECK(angle < 2.0 * kPi / 180.0);
}

TEST_CASE("residual is invariant to re-anchoring on the fitted plane") {
  std::vector<Eigen::Vector3d> pts = {
      {0, 0, 0.4}, {1, 0, 0.4}, {0, 1, 0.4}, {1, 1, 0.4}, {0.5, 0.2, 0.4}};
  const PlaneFit fit = fit_plane(pts, 0.1);
  REQUIRE(fit.valid);
  const Eigen::Vector3d p(0.3, 0.9, 1.7);
  const double h1 = fit.normal.dot(p - fit.anchor);
  // any other anchor on the plane gives the same residual
  const Eigen::Vector3d t = fit.normal.unitOrthogonal();
  const Eigen::Vector3d other = fit.anchor + 0.77 * t;
  const double h2 = fit.normal.dot(p - other);
  CHECK(h1 == doctest::Approx(h2).epsilon(1e-12));
}

TEST_CASE("rows of A match finite differences of h") {
  const SceneDescription desc = box_room();
  const SceneModel model = build_scene_model(desc, {});
  const ScanSimulator sim(model.mesh);
  LidarModel lidar = LidarModel::spin360();
  lidar.sigma_r = 0.0;
  lidar.azimuth_count = 90;
  lidar.elevation_count = 6;

  const PlanarPose pose(0.4, -0.3, 0.6);
  const Scan scan = simulate_scan(sim, pose, lidar, 3);
  REQUIRE(scan.size() > 100);

  // recompute fits the same way the builder does, then difference h numerically
  ObservationParams params;
  const ObservationSet obs =
      build_observations(scan, model.map, pose, params, lidar.mount_height);
  REQUIRE(obs.m > 50);

  // map each row back to its scan point by rebuilding associations
  const Eigen::Vector3d sensor(pose.x, pose.y, lidar.mount_height);
  std::vector<int> idx;
  std::vector<Eigen::Vector3d> neigh;
  int row = 0;
  const double step = 1e-5;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    const Eigen::Vector3d& p = scan.points[j];
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    const Eigen::Vector3d w(c * p.x() - s * p.y() + pose.x, s * p.x() + c * p.y() + pose.y,
                            p.z() + lidar.mount_height);
    model.map.index.knn(w, params.k, idx);
    if (static_cast<int>(idx.size()) < params.k) continue;
    neigh.clear();
    for (int id : idx) neigh.push_back(model.map.points()[id]);
    PlaneFit fit = fit_plane(neigh, params.d_thresh);
    if (!fit.valid) continue;
    if (fit.normal.dot(sensor - fit.anchor) < 0.0) fit.normal = -fit.normal;

    // finite differences over (x, y, theta) with the association frozen
    Eigen::Vector3d fd;
    for (int d = 0; d < 3; ++d) {
      auto h_of = [&](double delta) {
        PlanarPose probe = pose;
        if (d == 0) probe.x += delta;
        if (d == 1) probe.y += delta;
        if (d == 2) probe = PlanarPose(pose.x, pose.y, pose.theta + delta);
        return observation_h(p, fit.normal, fit.anchor, probe, lidar.mount_height);
      };
      fd[d] = (h_of(step) - h_of(-step)) / (2.0 * step);
    }
    for (int d = 0; d < 3; ++d)
      CHECK(obs.A(row, d) == doctest::Approx(fd[d]).epsilon(1e-5));
    ++row;
  }
  CHECK(row == obs.m);
}

TEST_CASE("scan points on their fitted planes give zero residual") {
  // wide wall, narrow scan footprint: every neighborhood is a pure plane
  SceneDescription desc;
  desc.name = "wall";
  Primitive w;
  w.kind = PrimitiveKind::kWall;
  w.x = 2.05;
  w.yaw = kPi / 2;
  w.sx = 10.0;
  w.sy = 0.1;
  w.sz = 2.5;
  desc.primitives.push_back(w);
  const SceneModel model = build_scene_model(desc, {});
  const ScanSimulator sim(model.mesh);
  LidarModel lidar = LidarModel::mid70_like();
  lidar.sigma_r = 0.0;
  lidar.hfov_deg = 40.0;
  lidar.vfov_deg = 40.0;
  lidar.mount_height = 1.0;

  const PlanarPose pose(0.0, 0.0, 0.0);
  const Scan scan = simulate_scan(sim, pose, lidar, 7);
  ObservationSet obs = build_observations(scan, model.map, pose, {}, lidar.mount_height);
  REQUIRE(obs.m > 500);
  for (int r = 0; r < obs.m; ++r) CHECK(std::abs(obs.b[r]) < 1e-9);

  // mesh-plane association puts every noise-free return exactly on its plane
  const SceneModel room = build_scene_model(box_room(), {});
  const ScanSimulator room_sim(room.mesh);
  LidarModel spin = LidarModel::spin360();
  spin.sigma_r = 0.0;
  const Scan room_scan = simulate_scan(room_sim, pose, spin, 7);
  ObservationParams mesh_params;
  mesh_params.association = Association::kMeshPlane;
  obs = build_observations(room_scan, room.map, pose, mesh_params, spin.mount_height, &room.mesh);
  REQUIRE(obs.m > 1000);
  for (int r = 0; r < obs.m; ++r) CHECK(std::abs(obs.b[r]) < 1e-9);
}

TEST_CASE("too-small maps skip points") {
  Scan scan;
  scan.points = {{1, 0, 0}, {0, 1, 0}};
  scan.true_ranges = {1, 1};
  scan.triangle_ids = {0, 0};
  MapCloud tiny;
  tiny.index.build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});  // fewer than k=5 points
  const ObservationSet obs = build_observations(scan, tiny, {0, 0, 0}, {}, 0.5);
  CHECK(obs.m == 0);
  CHECK(obs.empty());
}

TEST_CASE("wall-normal pose offset shifts mean(b) by about -delta") {
  SceneDescription desc;
  desc.name = "wall";
  Primitive w;
  w.kind = PrimitiveKind::kWall;
  w.x = 3.0;  // facing wall, normal toward -x (robot side)
  w.yaw = kPi / 2;
  w.sx = 8.0;
  w.sy = 0.2;
  w.sz = 2.5;
  desc.primitives.push_back(w);
  SceneBuildParams bp;
  bp.map_density = 800.0;
  const SceneModel model = build_scene_model(desc, bp);
  const ScanSimulator sim(model.mesh);
  LidarModel lidar = LidarModel::mid70_like();
  lidar.sigma_r = 0.0;
  lidar.mount_height = 1.0;

  const PlanarPose truth(0.0, 0.0, 0.0);
  const Scan scan = simulate_scan(sim, truth, lidar, 9);
  REQUIRE(scan.size() > 500);

  const ObservationSet base = build_observations(scan, model.map, truth, {}, lidar.mount_height);
  const double mean_base = base.b.mean();

  const double delta = 0.05;  // toward -x = along the oriented wall normal
  const PlanarPose off(-delta, 0.0, 0.0);
  const ObservationSet moved = build_observations(scan, model.map, off, {}, lidar.mount_height);
  const double mean_moved = moved.b.mean();
  const double slope = (mean_moved - mean_base) / delta;
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.05));
}
