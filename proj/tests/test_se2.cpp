#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "solmplan/rng.hpp"
#include "solmplan/se2.hpp"

using namespace solmplan;

TEST_CASE("angle wrap lands in [-pi, pi)") {
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(0.5) == doctest::Approx(0.5));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(std::abs(std::remainder(w - a, 2.0 * kPi)) < 1e-9);
  }
}

TEST_CASE("compose identity and translations") {
  const PlanarPose p(1.3, -0.2, 0.7);
  const PlanarPose id;
  const PlanarPose q = compose(id, p);
  CHECK(q.x == doctest::Approx(p.x));
  CHECK(q.y == doctest::Approx(p.y));
  CHECK(q.theta == doctest::Approx(p.theta));

  const PlanarPose two = compose(PlanarPose(1, 0, 0), PlanarPose(1, 0, 0));
  CHECK(two.x == doctest::Approx(2.0));
  CHECK(two.y == doctest::Approx(0.0));
  CHECK(two.theta == doctest::Approx(0.0));
}

TEST_CASE("compose with inverse returns the identity") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const PlanarPose p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-4, 4));
    const PlanarPose e = compose(p, inverse(p));
    CHECK(std::abs(e.x) < 1e-12);
    CHECK(std::abs(e.y) < 1e-12);
    CHECK(std::abs(e.theta) < 1e-12);
  }
}

TEST_CASE("compose is associative") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const PlanarPose a(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-4, 4));
    const PlanarPose b(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-4, 4));
    const PlanarPose c(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-4, 4));
    const PlanarPose l = compose(compose(a, b), c);
    const PlanarPose r = compose(a, compose(b, c));
    CHECK(l.x == doctest::Approx(r.x).epsilon(1e-12));
    CHECK(l.y == doctest::Approx(r.y).epsilon(1e-12));
    CHECK(std::abs(wrap_angle(l.theta - r.theta)) < 1e-12);
  }
}

TEST_CASE("log of the identity and exp of a pure rotation") {
  const PlanarTwist t = log_se2(PlanarPose());
  CHECK(t.rho_x == doctest::Approx(0.0));
  CHECK(t.rho_y == doctest::Approx(0.0));
  CHECK(t.omega == doctest::Approx(0.0));

  const PlanarPose r = exp_se2({0.0, 0.0, kPi / 2});
  CHECK(std::abs(r.x) < 1e-12);
  CHECK(std::abs(r.y) < 1e-12);
  CHECK(r.theta == doctest::Approx(kPi / 2));
}

TEST_CASE("exp/log round trips") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    // twists with |omega| <= 3 wrap within the principal branch
    const PlanarTwist t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)};
    const PlanarTwist back = log_se2(exp_se2(t));
    CHECK(std::abs(back.rho_x - t.rho_x) < 1e-9);
    CHECK(std::abs(back.rho_y - t.rho_y) < 1e-9);
    CHECK(std::abs(back.omega - t.omega) < 1e-9);
  }
  for (int i = 0; i < 1000; ++i) {
    const PlanarPose p(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3.1, 3.1));
    const PlanarPose back = exp_se2(log_se2(p));
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
    CHECK(std::abs(back.theta - p.theta) < 1e-9);
  }
}

TEST_CASE("translation norm of log is conjugation-invariant when omega = 0") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const PlanarPose p(rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0);
    const PlanarPose rot(0.0, 0.0, rng.uniform(-3, 3));
    const PlanarPose conj = compose(compose(rot, p), inverse(rot));
    const PlanarTwist a = log_se2(p), b = log_se2(conj);
    CHECK(std::hypot(a.rho_x, a.rho_y) == doctest::Approx(std::hypot(b.rho_x, b.rho_y)));
    CHECK(b.omega == doctest::Approx(0.0));
  }
}
