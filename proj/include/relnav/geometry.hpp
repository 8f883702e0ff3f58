#pragma once

#include <Eigen/Core>

namespace relnav {
namespace geometry {

/// 6x1 tangent vector for SE(3), translational part first, rotational part last.
using Twist6 = Eigen::Matrix<double, 6, 1>;

/// Rotation angle below which exp/log/Jacobian series switch to their
/// second-order Taylor expansions.
inline constexpr double kSmallAngle = 1e-7;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// \brief Builds the 3x3 skew-symmetric (cross-product) matrix of a vector.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// \brief Inverse of skew for a skew-symmetric matrix (takes the off-diagonal
///        entries, no symmetry check).
Eigen::Vector3d unskew(const Eigen::Matrix3d& m);

/// True when r is orthonormal with determinant +1 to within tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

/// \brief Exponential map of SO(3): axis-angle vector to rotation matrix.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);

/// \brief Logarithm map of SO(3). Output angle lies in [0, pi).
/// \throws std::domain_error when the rotation angle is within 1e-9 of pi,
///         where the axis is not uniquely recoverable.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

/// \brief Left Jacobian of SO(3).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi);

/// \brief Inverse left Jacobian of SO(3).
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi);

/// \brief Rigid transform: rotation plus translation.
///
/// Frame convention: a Transform T_ab maps points expressed in frame b into
/// frame a, p_a = C_ab p_b + r_a. The translation is the position of frame
/// b's origin expressed in frame a. The rotation is orthonormal with unit
/// determinant by construction through exp, composition, and inverse; raw
/// construction trusts the caller and can be checked with is_rotation.
class Transform {
 public:
  /// Identity transform.
  Transform();

  Transform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Transform Identity();

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  /// Closed-form inverse [C^T, -C^T r].
  Transform inverse() const;

  /// Composition, (T_ab * T_bc) = T_ac.
  Transform operator*(const Transform& rhs) const;

  /// Applies the transform to a point.
  Eigen::Vector3d operator*(const Eigen::Vector3d& p_b) const;

  /// 4x4 homogeneous matrix.
  Eigen::Matrix4d matrix() const;

  /// Top three rows of the homogeneous matrix (serialization layout).
  Eigen::Matrix<double, 3, 4> matrix34() const;

  /// Projects the rotation block back onto SO(3). Composition chains drift at
  /// the 1e-15 scale per product; call after long chains.
  void reproject();

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// \brief Exponential map of SE(3): twist [rho; phi] to transform, with
///        rotation so3_exp(phi) and translation J_l(phi) rho.
Transform se3_exp(const Twist6& xi);

/// \brief Logarithm map of SE(3). Inverse of se3_exp for rotation angles
///        below pi; the rotational part of the output has norm below pi and
///        a pure translation maps to itself exactly.
/// \throws std::domain_error when the rotation angle is within 1e-9 of pi.
Twist6 se3_log(const Transform& t);

/// \brief Left Jacobian of SE(3) for twist ordering [rho; phi].
Eigen::Matrix<double, 6, 6> se3_left_jacobian(const Twist6& xi);

/// \brief Inverse left Jacobian of SE(3).
Eigen::Matrix<double, 6, 6> se3_left_jacobian_inverse(const Twist6& xi);

/// \brief Planar transform embedded in SE(3).
///
/// The rotation block is
///   [  cos(theta)  sin(theta)  0 ]
///   [ -sin(theta)  cos(theta)  0 ]
///   [      0           0       1 ],
/// which rotates vectors expressed in the reference (global) frame into the
/// query frame, and the translation is (r.x, r.y, 0). z, roll, and pitch are
/// identically zero.
Transform planar_transform(double theta, const Eigen::Vector2d& r);

/// Rotation angle of a planar transform, in (-pi, pi].
double planar_rotation_angle(const Transform& t);

/// Path-tracking offsets read from a live-from-map transform T_qm (frame q is
/// the live vehicle, frame m the matched map keyframe, both x-forward).
struct PathOffsets {
  double lateral = 0.0;       ///< m, positive when the vehicle is left of the map pose
  double longitudinal = 0.0;  ///< m, positive when the vehicle is ahead of the map pose
  double heading = 0.0;       ///< rad, positive when the vehicle points left of the map heading
};

/// Decomposes T_qm into path-tracking offsets: the vehicle position expressed
/// in the map keyframe's frame plus the relative heading.
PathOffsets path_offsets(const Transform& t_qm);

}  // namespace geometry
}  // namespace relnav
