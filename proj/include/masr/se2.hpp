#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace masr {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi]. Idempotent on already-wrapped values.
inline double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) {
    a -= 2.0 * kPi;
  } else if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

/// Planar rigid transform: gripper position p = (x, y) and heading phi.
/// The heading is wrapped to (-pi, pi] on construction.
struct PoseSE2 {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;

  PoseSE2() = default;
  PoseSE2(double x_, double y_, double phi_) : x(x_), y(y_), phi(normalize_angle(phi_)) {}
};

/// Body twist (vx, vy, omega) relating two poses via the SE(2) exponential.
struct Twist {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  double squared_norm() const { return vx * vx + vy * vy + omega * omega; }
};

namespace detail {

/// Coefficients a(t) = sin(t)/t and b(t) = (1-cos(t))/t of the planar left
/// Jacobian V(t) = a I + b J, together with their derivatives. Series
/// expansions take over near t = 0.
struct VCoeffs {
  double a, b, da, db;
};

inline VCoeffs v_coeffs(double t) {
  VCoeffs c{};
  const double t2 = t * t;
  if (std::abs(t) < 1e-4) {
    c.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c.b = t / 2.0 - t2 * t / 24.0;
    c.da = -t / 3.0 + t2 * t / 30.0;
    c.db = 0.5 - t2 / 8.0 + t2 * t2 / 144.0;
  } else {
    const double s = std::sin(t);
    const double co = std::cos(t);
    c.a = s / t;
    c.b = (1.0 - co) / t;
    c.da = (t * co - s) / t2;
    c.db = (t * s - (1.0 - co)) / t2;
  }
  return c;
}

}  // namespace detail

/// Body-frame logarithm V = log(x_ref^{-1} x). The rotational component is
/// the wrapped relative heading; the translational part applies the inverse
/// left Jacobian to the relative position.
inline Twist pose_log(const PoseSE2& x_ref, const PoseSE2& x) {
  const double c = std::cos(x_ref.phi);
  const double s = std::sin(x_ref.phi);
  const double dx = x.x - x_ref.x;
  const double dy = x.y - x_ref.y;
  const double tx = c * dx + s * dy;
  const double ty = -s * dx + c * dy;
  const double w = normalize_angle(x.phi - x_ref.phi);
  const auto vc = detail::v_coeffs(w);
  const double det = vc.a * vc.a + vc.b * vc.b;
  return {(vc.a * tx + vc.b * ty) / det, (-vc.b * tx + vc.a * ty) / det, w};
}

/// Inverse of pose_log: composes exp of the twist onto x_ref.
inline PoseSE2 pose_exp(const PoseSE2& x_ref, const Twist& v) {
  const auto vc = detail::v_coeffs(v.omega);
  const double tx = vc.a * v.vx - vc.b * v.vy;
  const double ty = vc.b * v.vx + vc.a * v.vy;
  const double c = std::cos(x_ref.phi);
  const double s = std::sin(x_ref.phi);
  return {x_ref.x + c * tx - s * ty, x_ref.y + s * tx + c * ty, x_ref.phi + v.omega};
}

/// Differential of pose_log(x_ref, .) with respect to (x, y, phi) of the
/// second argument, away from the heading wrap. Rows are (vx, vy, omega).
inline Eigen::Matrix3d pose_log_jacobian(const PoseSE2& x_ref, const PoseSE2& x) {
  const double c = std::cos(x_ref.phi);
  const double s = std::sin(x_ref.phi);
  const double dx = x.x - x_ref.x;
  const double dy = x.y - x_ref.y;
  const double tx = c * dx + s * dy;
  const double ty = -s * dx + c * dy;
  const double w = normalize_angle(x.phi - x_ref.phi);
  const auto vc = detail::v_coeffs(w);
  const double det = vc.a * vc.a + vc.b * vc.b;
  const double ddet = 2.0 * (vc.a * vc.da + vc.b * vc.db);

  Eigen::Matrix2d vinv;
  vinv << vc.a, vc.b, -vc.b, vc.a;
  vinv /= det;

  Eigen::Matrix2d dvinv;
  dvinv << vc.da, vc.db, -vc.db, vc.da;
  dvinv /= det;
  Eigen::Matrix2d vmat;
  vmat << vc.a, vc.b, -vc.b, vc.a;
  dvinv -= (ddet / (det * det)) * vmat;

  Eigen::Matrix2d rref_t;
  rref_t << c, s, -s, c;

  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  j.topLeftCorner<2, 2>() = vinv * rref_t;
  j.topRightCorner<2, 1>() = dvinv * Eigen::Vector2d(tx, ty);
  j(2, 2) = 1.0;
  return j;
}

}  // namespace masr
