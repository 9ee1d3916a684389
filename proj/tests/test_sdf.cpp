#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "solmplan/rng.hpp"
#include "solmplan/sdf.hpp"
#include "solmplan/se2.hpp"

using namespace solmplan;

namespace {

OccupancyGrid2D make_grid(int w, int h, double res = 0.1) {
  OccupancyGrid2D occ;
  occ.width = w;
  occ.height = h;
  occ.resolution = res;
  occ.origin = {0.0, 0.0};
  occ.occupied.assign(static_cast<std::size_t>(w) * h, 0);
  return occ;
}

// O(n^2) reference: min center-to-center distance over all source cells
double brute_distance(const OccupancyGrid2D& occ, int i, int j, bool to_occupied, double cap) {
  double best = cap;
  for (int jj = 0; jj < occ.height; ++jj) {
    for (int ii = 0; ii < occ.width; ++ii) {
      const bool is_src = to_occupied ? occ.at(ii, jj) : !occ.at(ii, jj);
      if (!is_src) continue;
      const double d = occ.resolution * std::hypot(ii - i, jj - j);
      best = std::min(best, d);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("single occupied cell: 4-neighbors at one resolution") {
  OccupancyGrid2D occ = make_grid(9, 9, 0.25);
  occ.occupied[4 * 9 + 4] = 1;
  const SdfField f = build_sdf(occ);
  CHECK(f.at(4, 4) < 0.0);
  CHECK(f.at(5, 4) == doctest::Approx(0.25));
  CHECK(f.at(3, 4) == doctest::Approx(0.25));
  CHECK(f.at(4, 5) == doctest::Approx(0.25));
  CHECK(f.at(4, 3) == doctest::Approx(0.25));
  CHECK(f.at(5, 5) == doctest::Approx(0.25 * std::sqrt(2.0)));
}

TEST_CASE("all-free grid caps at the configured value") {
  const SdfField f = build_sdf(make_grid(16, 8, 0.5), 3.0);
  for (double v : f.values) CHECK(v == doctest::Approx(3.0));
  // default cap is the grid diagonal
  const SdfField g = build_sdf(make_grid(16, 8, 0.5));
  for (double v : g.values) CHECK(v == doctest::Approx(0.5 * std::hypot(16.0, 8.0)));
}

TEST_CASE("random occupancies match brute force exactly") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    OccupancyGrid2D occ = make_grid(64, 64, 0.1);
    const double fill = rng.uniform(0.02, 0.3);
    for (auto& c : occ.occupied) c = rng.uniform() < fill ? 1 : 0;
    const SdfField f = build_sdf(occ);
    for (int j = 0; j < 64; ++j) {
      for (int i = 0; i < 64; ++i) {
        const double expect = occ.at(i, j)
                                  ? -brute_distance(occ, i, j, false, f.cap)
                                  : brute_distance(occ, i, j, true, f.cap);
        CHECK(f.at(i, j) == doctest::Approx(expect).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("field is 1-Lipschitz and sign-correct") {
  Rng rng(22);
  OccupancyGrid2D occ = make_grid(48, 32, 0.2);
  for (auto& c : occ.occupied) c = rng.uniform() < 0.1 ? 1 : 0;
  const SdfField f = build_sdf(occ);
  for (int j = 0; j < occ.height; ++j) {
    for (int i = 0; i < occ.width; ++i) {
      if (occ.at(i, j))
        CHECK(f.at(i, j) <= 0.0);
      else
        CHECK(f.at(i, j) > 0.0);
      // 1-Lipschitz within each sign region; the signed jump across the
      // free/occupied boundary is 2*resolution by the center-to-center
      // convention
      if (i + 1 < occ.width && occ.at(i, j) == occ.at(i + 1, j))
        CHECK(std::abs(f.at(i + 1, j) - f.at(i, j)) <= occ.resolution + 1e-9);
      if (j + 1 < occ.height && occ.at(i, j) == occ.at(i, j + 1))
        CHECK(std::abs(f.at(i, j + 1) - f.at(i, j)) <= occ.resolution + 1e-9);
    }
  }
  // deterministic rebuild
  const SdfField g = build_sdf(occ);
  CHECK(std::equal(f.values.begin(), f.values.end(), g.values.begin()));
}

TEST_CASE("bilinear sample hits node values and matches finite differences") {
  Rng rng(23);
  OccupancyGrid2D occ = make_grid(32, 24, 0.15);
  for (auto& c : occ.occupied) c = rng.uniform() < 0.12 ? 1 : 0;
  const SdfField f = build_sdf(occ);

  for (int rep = 0; rep < 50; ++rep) {
    const int i = static_cast<int>(rng.uniform_index(32));
    const int j = static_cast<int>(rng.uniform_index(24));
    const Eigen::Vector2d c = occ.cell_center(i, j);
    CHECK(sample_sdf(f, c).d == doctest::Approx(f.at(i, j)));
  }

  int tested = 0;
  for (int rep = 0; rep < 3000 && tested < 1000; ++rep) {
    const Eigen::Vector2d p(rng.uniform(0.2, 32 * 0.15 - 0.2), rng.uniform(0.2, 24 * 0.15 - 0.2));
    // stay away from interpolation-cell boundaries where the gradient jumps
    const double u = (p.x() - f.origin.x()) / f.resolution - 0.5;
    const double v = (p.y() - f.origin.y()) / f.resolution - 0.5;
    if (std::abs(u - std::round(u)) < 1e-3 || std::abs(v - std::round(v)) < 1e-3) continue;
    ++tested;
    const SdfSample s = sample_sdf(f, p);
    const double h = 1e-7;
    const double gx = (sample_sdf(f, {p.x() + h, p.y()}).d - sample_sdf(f, {p.x() - h, p.y()}).d) / (2 * h);
    const double gy = (sample_sdf(f, {p.x(), p.y() + h}).d - sample_sdf(f, {p.x(), p.y() - h}).d) / (2 * h);
    CHECK(std::abs(s.grad.x() - gx) < 1e-6);
    CHECK(std::abs(s.grad.y() - gy) < 1e-6);
  }
  CHECK(tested == 1000);
}

TEST_CASE("gradient next to a straight wall points away from it") {
  OccupancyGrid2D occ = make_grid(40, 40, 0.1);
  for (int j = 0; j < 40; ++j)
    for (int i = 18; i <= 20; ++i) occ.occupied[static_cast<std::size_t>(j) * 40 + i] = 1;
  const SdfField f = build_sdf(occ);
  // to the right of the wall the distance grows along +x
  const SdfSample s = sample_sdf(f, {3.17, 2.08});
  const double angle = std::atan2(s.grad.y(), s.grad.x());
  CHECK(std::abs(angle) < 5.0 * kPi / 180.0);
  CHECK(s.d > 0.0);
}

TEST_CASE("invalid grids are rejected upstream") {
  CHECK_THROWS(rasterize_occupancy(TriangleMesh{}, -1.0, 0.1, 1.0));
  CHECK_THROWS(rasterize_occupancy(TriangleMesh{}, 0.1, 1.0, 0.1));
}
