#include "relnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace relnav {
namespace geometry {

namespace {
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double wrap_angle(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  return m;
}

Eigen::Vector3d unskew(const Eigen::Matrix3d& m) {
  return Eigen::Vector3d(m(2, 1), m(0, 2), m(1, 0));
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  const Eigen::Matrix3d delta = r.transpose() * r - Eigen::Matrix3d::Identity();
  return delta.cwiseAbs().maxCoeff() < tol && std::abs(r.determinant() - 1.0) < tol;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double ang = phi.norm();
  const Eigen::Matrix3d px = skew(phi);
  double a, b;
  if (ang < kSmallAngle) {
    const double ang2 = ang * ang;
    a = 1.0 - ang2 / 6.0;
    b = 0.5 - ang2 / 24.0;
  } else {
    const double sh = std::sin(0.5 * ang);
    a = std::sin(ang) / ang;
    b = 2.0 * sh * sh / (ang * ang);
  }
  return Eigen::Matrix3d::Identity() + a * px + b * px * px;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  // sin and cos of the angle, read off the antisymmetric part and the trace.
  const Eigen::Vector3d sv = 0.5 * unskew(rotation - rotation.transpose());
  const double s = sv.norm();
  const double c = std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  const double ang = std::atan2(s, c);

  if (ang > kPi - 1e-9) {
    throw std::domain_error("so3_log: rotation angle within 1e-9 of pi, axis not unique");
  }
  if (ang < kSmallAngle) {
    return sv * (1.0 + ang * ang / 6.0);
  }
  if (c > -0.999) {
    return (ang / s) * sv;
  }
  // Near pi the antisymmetric part degrades; recover the axis from the
  // symmetric part and pick the sign consistent with the antisymmetric part.
  int k = 0;
  rotation.diagonal().maxCoeff(&k);
  Eigen::Vector3d a;
  a[k] = std::sqrt(std::max(0.0, (rotation(k, k) - c) / (1.0 - c)));
  for (int j = 0; j < 3; ++j) {
    if (j != k) a[j] = (rotation(j, k) + rotation(k, j)) / (2.0 * a[k] * (1.0 - c));
  }
  a.normalize();
  if (a.dot(sv) < 0.0) a = -a;
  return ang * a;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi) {
  const double ang = phi.norm();
  const Eigen::Matrix3d px = skew(phi);
  double a, b;
  if (ang < kSmallAngle) {
    const double ang2 = ang * ang;
    a = 0.5 - ang2 / 24.0;
    b = 1.0 / 6.0 - ang2 / 120.0;
  } else {
    const double ang2 = ang * ang;
    const double sh = std::sin(0.5 * ang);
    a = 2.0 * sh * sh / ang2;
    b = (ang - std::sin(ang)) / (ang2 * ang);
  }
  return Eigen::Matrix3d::Identity() + a * px + b * px * px;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double ang = phi.norm();
  const Eigen::Matrix3d px = skew(phi);
  double b;
  if (ang < kSmallAngle) {
    b = 1.0 / 12.0 + ang * ang / 720.0;
  } else {
    b = 1.0 / (ang * ang) - (1.0 + std::cos(ang)) / (2.0 * ang * std::sin(ang));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * px + b * px * px;
}

Transform::Transform()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

Transform::Transform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {}

Transform Transform::Identity() { return Transform(); }

Transform Transform::inverse() const {
  return Transform(rotation_.transpose(), -(rotation_.transpose() * translation_));
}

Transform Transform::operator*(const Transform& rhs) const {
  return Transform(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
}

Eigen::Vector3d Transform::operator*(const Eigen::Vector3d& p_b) const {
  return rotation_ * p_b + translation_;
}

Eigen::Matrix4d Transform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Eigen::Matrix<double, 3, 4> Transform::matrix34() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation_;
  m.rightCols<1>() = translation_;
  return m;
}

void Transform::reproject() {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  rotation_ = q.toRotationMatrix();
}

Transform se3_exp(const Twist6& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  return Transform(so3_exp(phi), so3_left_jacobian(phi) * rho);
}

Twist6 se3_log(const Transform& t) {
  const Eigen::Vector3d phi = so3_log(t.rotation());
  Twist6 xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * t.translation();
  xi.tail<3>() = phi;
  return xi;
}

namespace {

// Coupling block of the 6x6 left Jacobian for twist [rho; phi].
Eigen::Matrix3d se3_jacobian_q(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) {
  const double ang = phi.norm();
  const Eigen::Matrix3d rx = skew(rho);
  if (ang < kSmallAngle) {
    return 0.5 * rx;
  }
  const double ang2 = ang * ang;
  const double ang3 = ang2 * ang;
  const double ang4 = ang3 * ang;
  const double ang5 = ang4 * ang;
  const double cang = std::cos(ang);
  const double sang = std::sin(ang);
  const double m2 = (ang - sang) / ang3;
  const double m3 = (1.0 - 0.5 * ang2 - cang) / ang4;
  const double m4 = 0.5 * (m3 - 3.0 * (ang - sang - ang3 / 6.0) / ang5);

  const Eigen::Matrix3d px = skew(phi);
  const Eigen::Matrix3d pxrx = px * rx;
  const Eigen::Matrix3d rxpx = rx * px;
  const Eigen::Matrix3d pxrxpx = pxrx * px;
  return 0.5 * rx + m2 * (pxrx + rxpx + pxrxpx)
       - m3 * (px * pxrx + rxpx * px - 3.0 * pxrxpx)
       - m4 * (pxrxpx * px + px * pxrxpx);
}

}  // namespace

Eigen::Matrix<double, 6, 6> se3_left_jacobian(const Twist6& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  Eigen::Matrix<double, 6, 6> j = Eigen::Matrix<double, 6, 6>::Zero();
  const Eigen::Matrix3d j33 = so3_left_jacobian(phi);
  j.topLeftCorner<3, 3>() = j33;
  j.bottomRightCorner<3, 3>() = j33;
  j.topRightCorner<3, 3>() = se3_jacobian_q(rho, phi);
  return j;
}

Eigen::Matrix<double, 6, 6> se3_left_jacobian_inverse(const Twist6& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  Eigen::Matrix<double, 6, 6> jinv = Eigen::Matrix<double, 6, 6>::Zero();
  const Eigen::Matrix3d j33inv = so3_left_jacobian_inverse(phi);
  jinv.topLeftCorner<3, 3>() = j33inv;
  jinv.bottomRightCorner<3, 3>() = j33inv;
  jinv.topRightCorner<3, 3>() = -j33inv * se3_jacobian_q(rho, phi) * j33inv;
  return jinv;
}

Transform planar_transform(double theta, const Eigen::Vector2d& r) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix3d rot;
  rot <<   c,   s, 0.0,
          -s,   c, 0.0,
         0.0, 0.0, 1.0;
  return Transform(rot, Eigen::Vector3d(r.x(), r.y(), 0.0));
}

double planar_rotation_angle(const Transform& t) {
  return wrap_angle(std::atan2(t.rotation()(0, 1), t.rotation()(0, 0)));
}

PathOffsets path_offsets(const Transform& t_qm) {
  const Transform t_mq = t_qm.inverse();
  PathOffsets offsets;
  offsets.longitudinal = t_mq.translation().x();
  offsets.lateral = t_mq.translation().y();
  offsets.heading = planar_rotation_angle(t_qm);
  return offsets;
}

}  // namespace geometry
}  // namespace relnav
