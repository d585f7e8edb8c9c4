#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "masr/kinematics.hpp"
#include "masr/rng.hpp"
#include "masr/robot.hpp"
#include "masr/se2.hpp"

using namespace masr;

namespace {

RobotModel test_arm() {
  return RobotModel({0.2, 0.2, 0.2, 0.1, 0.1},
                    {deg_to_rad(50), deg_to_rad(50), deg_to_rad(50), deg_to_rad(50), deg_to_rad(50)},
                    0.1, 0.28, 0.04);
}

// Independent FK oracle: chain 3x3 homogeneous transforms link by link and
// truncate at the actuator.
PoseSE2 homogeneous_fk(const RobotModel& model, const Configuration& q) {
  const MaLocation loc = model.decompose_ma_position(q.d);
  auto rot = [](double a) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = std::cos(a);
    m(0, 1) = -std::sin(a);
    m(1, 0) = std::sin(a);
    m(1, 1) = std::cos(a);
    return m;
  };
  auto trans = [](double t) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = t;
    return m;
  };
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  for (std::size_t j = 0; j < loc.link; ++j)
    t = t * rot(q.theta[j]) * trans(model.link_lengths()[j]);
  t = t * rot(q.theta[loc.link]) * trans(loc.offset);
  return {t(0, 2), t(1, 2), std::atan2(t(1, 0), t(0, 0))};
}

}  // namespace

TEST_CASE("decompose_ma_position splits d into link and offset") {
  const RobotModel model = test_arm();

  SECTION("arm base") {
    const MaLocation loc = model.decompose_ma_position(0.0);
    CHECK(loc.link == 0);
    CHECK(loc.offset == 0.0);
  }
  SECTION("interior, via the cumulative-sum oracle") {
    // anchors are 0, 0.2, 0.4, 0.6, 0.7: d = 0.5 falls on the third link
    const MaLocation loc = model.decompose_ma_position(0.5);
    CHECK(loc.link == 2);
    CHECK_THAT(loc.offset, Catch::Matchers::WithinAbs(0.1, 1e-15));
  }
  SECTION("tip boundary keeps the last link") {
    const MaLocation loc = model.decompose_ma_position(0.8);
    CHECK(loc.link == 4);
    CHECK_THAT(loc.offset, Catch::Matchers::WithinAbs(0.1, 1e-15));
  }
  SECTION("anchors are right-continuous") {
    for (std::size_t j = 0; j < model.joint_count(); ++j) {
      const MaLocation loc = model.decompose_ma_position(model.joint_anchor(j));
      CHECK(loc.link == j);
      CHECK(loc.offset == 0.0);
    }
  }
  SECTION("out of range throws") {
    CHECK_THROWS_AS(model.decompose_ma_position(-0.01), std::domain_error);
    CHECK_THROWS_AS(model.decompose_ma_position(0.81), std::domain_error);
  }
}

TEST_CASE("forward kinematics matches hand-evaluated poses") {
  const RobotModel model = test_arm();

  SECTION("straight arm is colinear") {
    Configuration q{{0, 0, 0, 0, 0}, 0.5};
    const PoseSE2 x = forward_kinematics(model, q);
    CHECK_THAT(x.x, Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(x.y, Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(x.phi, Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
  SECTION("right angle on a two-link arm") {
    const RobotModel two({1.0, 1.0}, {kPi, kPi}, 0.1, 0.28, 0.0);
    Configuration q{{deg_to_rad(90), 0.0}, 1.5};
    const PoseSE2 x = forward_kinematics(two, q);
    CHECK_THAT(x.x, Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(x.y, Catch::Matchers::WithinAbs(1.5, 1e-15));
    CHECK_THAT(x.phi, Catch::Matchers::WithinAbs(deg_to_rad(90), 1e-15));
  }
  SECTION("cumulative angles 30/60/90 degrees") {
    Configuration q{{deg_to_rad(30), deg_to_rad(30), deg_to_rad(30), 0, 0}, 0.6};
    const PoseSE2 x = forward_kinematics(model, q);
    // 0.2 (cos30 + cos60 + cos90) and 0.2 (sin30 + sin60 + sin90)
    CHECK_THAT(x.x, Catch::Matchers::WithinAbs(0.1 * (std::sqrt(3.0) + 1.0), 1e-12));
    CHECK_THAT(x.y, Catch::Matchers::WithinAbs(0.1 * (std::sqrt(3.0) + 3.0), 1e-12));
    CHECK_THAT(x.phi, Catch::Matchers::WithinAbs(deg_to_rad(90), 1e-12));
  }
  SECTION("bounds violation reports the joint") {
    Configuration q{{deg_to_rad(50) + 0.01, 0, 0, 0, 0}, 0.5};
    CHECK_THROWS_WITH(forward_kinematics(model, q), Catch::Matchers::ContainsSubstring("joint 0"));
  }
}

TEST_CASE("forward kinematics agrees with the homogeneous-transform oracle") {
  const RobotModel model = test_arm();
  Rng rng(42);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Configuration q = model.sample_configuration(rng);
    const PoseSE2 a = forward_kinematics(model, q);
    const PoseSE2 b = homogeneous_fk(model, q);
    max_err = std::max({max_err, std::abs(a.x - b.x), std::abs(a.y - b.y),
                        std::abs(normalize_angle(a.phi - b.phi))});
  }
  CHECK(max_err <= 1e-9);
}

TEST_CASE("mirroring all joint angles mirrors the pose") {
  const RobotModel model = test_arm();
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Configuration q = model.sample_configuration(rng);
    Configuration neg = q;
    for (double& t : neg.theta) t = -t;
    const PoseSE2 a = forward_kinematics(model, q);
    const PoseSE2 b = forward_kinematics(model, neg);
    CHECK_THAT(b.x, Catch::Matchers::WithinAbs(a.x, 1e-12));
    CHECK_THAT(b.y, Catch::Matchers::WithinAbs(-a.y, 1e-12));
    CHECK_THAT(normalize_angle(b.phi + a.phi), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("fk_jacobian matches central finite differences") {
  const RobotModel model = test_arm();
  const std::size_t n = model.joint_count();
  Rng rng(3);
  const double h = 1e-6;

  auto far_from_anchors = [&](double d) {
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(d - model.joint_anchor(j)) < 1e-3) return false;
    return d > 1e-3 && d < model.total_length() - 1e-3;
  };

  int checked = 0;
  while (checked < 100) {
    const Configuration q = model.sample_configuration(rng);
    if (!far_from_anchors(q.d)) continue;
    bool near_bound = false;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(std::abs(q.theta[j]) - model.joint_bounds()[j]) < 2 * h) near_bound = true;
    if (near_bound) continue;
    ++checked;

    const Eigen::Matrix3Xd jac = fk_jacobian(model, q);
    for (std::size_t c = 0; c <= n; ++c) {
      Configuration lo = q, hi = q;
      if (c < n) {
        lo.theta[c] -= h;
        hi.theta[c] += h;
      } else {
        lo.d -= h;
        hi.d += h;
      }
      const PoseSE2 xl = forward_kinematics(model, lo);
      const PoseSE2 xh = forward_kinematics(model, hi);
      const double fd[3] = {(xh.x - xl.x) / (2 * h), (xh.y - xl.y) / (2 * h),
                            normalize_angle(xh.phi - xl.phi) / (2 * h)};
      for (int r = 0; r < 3; ++r) {
        const double a = jac(r, static_cast<Eigen::Index>(c));
        const double scale = std::max({1.0, std::abs(a), std::abs(fd[r])});
        CHECK(std::abs(a - fd[r]) / scale <= 1e-5);
      }
    }
  }
}

TEST_CASE("fk_jacobian structure") {
  const RobotModel model = test_arm();

  SECTION("straight arm, actuator mid-arm") {
    Configuration q{{0, 0, 0, 0, 0}, 0.5};
    const Eigen::Matrix3Xd jac = fk_jacobian(model, q);
    CHECK_THAT(jac(0, 5), Catch::Matchers::WithinAbs(1.0, 1e-12));  // dx/dd
    CHECK_THAT(jac(1, 5), Catch::Matchers::WithinAbs(0.0, 1e-12));  // dy/dd
    CHECK_THAT(jac(1, 0), Catch::Matchers::WithinAbs(0.5, 1e-12));  // dy/dtheta_0
    CHECK(jac(2, 5) == 0.0);                                        // dphi/dd
  }
  SECTION("joints at or beyond the actuator have zero position columns") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
      const Configuration q = model.sample_configuration(rng);
      const Eigen::Matrix3Xd jac = fk_jacobian(model, q);
      const MaLocation loc = model.decompose_ma_position(q.d);
      for (std::size_t j = 0; j < model.joint_count(); ++j) {
        if (model.joint_anchor(j) > q.d || (model.joint_anchor(j) >= q.d && j > loc.link)) {
          CHECK(jac(0, static_cast<Eigen::Index>(j)) == 0.0);
          CHECK(jac(1, static_cast<Eigen::Index>(j)) == 0.0);
          CHECK(jac(2, static_cast<Eigen::Index>(j)) == 0.0);
        }
        // heading column: 1 up to the carrying link, 0 after
        CHECK(jac(2, static_cast<Eigen::Index>(j)) == (j <= loc.link ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("pose_log examples") {
  SECTION("identity") {
    const PoseSE2 x(0.3, -0.2, 1.1);
    const Twist v = pose_log(x, x);
    CHECK(v.vx == 0.0);
    CHECK(v.vy == 0.0);
    CHECK(v.omega == 0.0);
  }
  SECTION("pure relative translation") {
    const PoseSE2 ref(0.0, 0.0, 0.0);
    const PoseSE2 x(0.4, -0.3, 0.0);
    const Twist v = pose_log(ref, x);
    CHECK_THAT(v.vx, Catch::Matchers::WithinAbs(0.4, 1e-15));
    CHECK_THAT(v.vy, Catch::Matchers::WithinAbs(-0.3, 1e-15));
    CHECK(v.omega == 0.0);
  }
  SECTION("quarter turn with unit offset") {
    const PoseSE2 ref(0.0, 0.0, 0.0);
    const PoseSE2 x(1.0, 0.0, deg_to_rad(90));
    const Twist v = pose_log(ref, x);
    CHECK_THAT(v.vx, Catch::Matchers::WithinAbs(kPi / 4, 1e-12));
    CHECK_THAT(v.vy, Catch::Matchers::WithinAbs(-kPi / 4, 1e-12));
    CHECK_THAT(v.omega, Catch::Matchers::WithinAbs(kPi / 2, 1e-12));
    const PoseSE2 back = pose_exp(ref, v);
    CHECK_THAT(back.x, Catch::Matchers::WithinAbs(x.x, 1e-12));
    CHECK_THAT(back.y, Catch::Matchers::WithinAbs(x.y, 1e-12));
    CHECK_THAT(back.phi, Catch::Matchers::WithinAbs(x.phi, 1e-12));
  }
}

TEST_CASE("pose_log / pose_exp round trip") {
  Rng rng(19);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const PoseSE2 a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-4, 4));
    const PoseSE2 b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-4, 4));
    const Twist v = pose_log(a, b);
    const PoseSE2 c = pose_exp(a, v);
    max_err = std::max({max_err, std::abs(c.x - b.x), std::abs(c.y - b.y),
                        std::abs(normalize_angle(c.phi - b.phi))});
    // zero twist only when the poses coincide
    if (v.squared_norm() < 1e-24) {
      CHECK_THAT(a.x, Catch::Matchers::WithinAbs(b.x, 1e-9));
      CHECK_THAT(a.y, Catch::Matchers::WithinAbs(b.y, 1e-9));
    }
  }
  CHECK(max_err <= 1e-9);
}

TEST_CASE("angle normalization is idempotent and lands in (-pi, pi]") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-30, 30);
    const double w = normalize_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(normalize_angle(w) == w);
  }
  CHECK(normalize_angle(kPi) == kPi);
  CHECK(normalize_angle(-kPi) == kPi);
  CHECK(normalize_angle(3 * kPi) == Catch::Approx(kPi));
}
