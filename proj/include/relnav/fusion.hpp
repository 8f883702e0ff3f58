#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>

#include "relnav/geometry.hpp"

namespace relnav {
namespace fusion {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Direct observation of the pose being solved for, T_(query,map), with a
/// tangent-space covariance. Produced by the GNSS window pipeline.
struct GnssFactor {
  geometry::Transform measured;
  Matrix6d covariance = Matrix6d::Identity();
};

/// One visual correspondence: a 3D point stored in the map vertex's frame,
/// re-observed at a 3D position in the query frame.
struct LandmarkFactor {
  Eigen::Vector3d map_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d observed = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

using Factor = std::variant<GnssFactor, LandmarkFactor>;

/// Robust kernel settings. Both sensor channels run through the same
/// dynamic-scaling kernel by default; either can be switched to plain least
/// squares for analysis.
struct KernelConfig {
  double k = 2.0;  ///< kink of the kernel, in whitened-residual units
  bool robust_gnss = true;
  bool robust_landmarks = true;
};

struct SolverConfig {
  int max_iters = 50;
  double gradient_tol = 1e-9;  ///< infinity norm of the robust-cost gradient
  double step_tol = 1e-10;
  double initial_trust_radius = 1.0;
  double min_trust_radius = 1e-12;  ///< below this the iteration has stalled
};

struct LocalizationResult {
  geometry::Transform transform;  ///< refined T_(query,map)
  Matrix6d covariance = Matrix6d::Identity();
  bool converged = false;
  bool used_gnss = false;    ///< a GNSS factor participated and the solve stuck
  bool used_vision = false;  ///< a landmark factor participated and the solve stuck
  std::vector<double> cost_history;  ///< robust cost at the start and after
                                     ///< each accepted step; never increases
};

/// \brief Dynamic covariance scaling cost for a whitened residual norm u:
///        quadratic u^2/2 up to the kink k, then saturating smoothly toward
///        3k^2/2 so a single wild measurement can only add a bounded amount.
///
/// The saturating branch is 2k^2 u^2 / (k^2 + u^2) - k^2/2; the constant
/// makes the two branches meet at u = k with matching slope.
double dcs_rho(double u, double k);

/// A variant of the saturating branch sometimes written with -u^2/2 as its
/// constant. That form still meets the quadratic branch at u = k but then
/// decreases without bound, rewarding ever-larger residuals, so the solver
/// never uses it. It exists only so tests can show the difference.
double dcs_rho_alternate_constant(double u, double k);

/// Reweighting factor for the kernel: 1 inside the quadratic region, then
/// (2k^2 / (k^2 + u^2))^2. Equal to rho'(u)/u everywhere, which is what makes
/// iteratively reweighted least squares follow the robust cost's gradient.
double dcs_weight(double u, double k);

/// Residual of a GNSS factor at pose t: log(measured * t^-1), zero when the
/// pose agrees with the measurement.
Vector6d gnss_residual(const GnssFactor& factor, const geometry::Transform& t);

/// Derivative of gnss_residual with respect to a left perturbation
/// t <- exp(delta) * t.
Matrix6d gnss_jacobian(const GnssFactor& factor, const geometry::Transform& t);

/// Residual of a landmark factor at pose t: observed - t * map_point.
Eigen::Vector3d landmark_residual(const LandmarkFactor& factor,
                                  const geometry::Transform& t);

/// Derivative of landmark_residual with respect to a left perturbation.
Eigen::Matrix<double, 3, 6> landmark_jacobian(const LandmarkFactor& factor,
                                              const geometry::Transform& t);

/// Total robust cost of all factors at pose t.
double total_cost(const std::vector<Factor>& factors, const geometry::Transform& t,
                  const KernelConfig& kernel);

/// \brief Refines T_(query,map) from whatever factors exist this cycle.
///
/// Iteratively reweighted Gauss-Newton inside a dogleg trust region: each
/// iteration linearizes every factor, downweights the ones the kernel flags,
/// and takes the dogleg step; steps are accepted only when the true robust
/// cost drops. Convergence is a small gradient or a small step; a collapsed
/// trust region or exhausted iteration budget reports converged = false with
/// the best iterate found. The returned covariance is the inverse of the
/// final weighted information matrix; if that matrix is not positive
/// definite (too few factors to pin all six degrees of freedom), the result
/// is marked not converged.
LocalizationResult solve(const std::vector<Factor>& factors,
                         const geometry::Transform& initial_guess,
                         const SolverConfig& solver, const KernelConfig& kernel);

}  // namespace fusion
}  // namespace relnav
