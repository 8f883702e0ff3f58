#include "relnav/fusion.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace relnav {
namespace fusion {

double dcs_rho(double u, double k) {
  const double u2 = u * u;
  const double k2 = k * k;
  if (u2 <= k2) {
    return 0.5 * u2;
  }
  return 2.0 * k2 * u2 / (k2 + u2) - 0.5 * k2;
}

double dcs_rho_alternate_constant(double u, double k) {
  const double u2 = u * u;
  const double k2 = k * k;
  if (u2 <= k2) {
    return 0.5 * u2;
  }
  return 2.0 * k2 * u2 / (k2 + u2) - 0.5 * u2;
}

double dcs_weight(double u, double k) {
  const double u2 = u * u;
  const double k2 = k * k;
  if (u2 <= k2) {
    return 1.0;
  }
  const double s = 2.0 * k2 / (k2 + u2);
  return s * s;
}

Vector6d gnss_residual(const GnssFactor& factor, const geometry::Transform& t) {
  return geometry::se3_log(factor.measured * t.inverse());
}

Matrix6d gnss_jacobian(const GnssFactor& factor, const geometry::Transform& t) {
  const Vector6d e = gnss_residual(factor, t);
  return -geometry::se3_left_jacobian_inverse(-e);
}

Eigen::Vector3d landmark_residual(const LandmarkFactor& factor,
                                  const geometry::Transform& t) {
  return factor.observed - t * factor.map_point;
}

Eigen::Matrix<double, 3, 6> landmark_jacobian(const LandmarkFactor& factor,
                                              const geometry::Transform& t) {
  const Eigen::Vector3d p = t * factor.map_point;
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>() = -Eigen::Matrix3d::Identity();
  j.rightCols<3>() = geometry::skew(p);
  return j;
}

namespace {

/// One factor linearized at the current pose, pre-whitened by its own
/// information matrix.
struct Linearization {
  Eigen::VectorXd e;
  Eigen::MatrixXd j;
  Eigen::MatrixXd info;
  double u = 0.0;      ///< whitened residual norm
  bool robust = false; ///< kernel applies to this factor
};

Linearization linearize(const Factor& factor, const geometry::Transform& t,
                        const KernelConfig& kernel) {
  Linearization lin;
  if (const auto* g = std::get_if<GnssFactor>(&factor)) {
    lin.e = gnss_residual(*g, t);
    lin.j = gnss_jacobian(*g, t);
    lin.info = Eigen::LLT<Matrix6d>(g->covariance).solve(Matrix6d::Identity());
    lin.robust = kernel.robust_gnss;
  } else {
    const auto& l = std::get<LandmarkFactor>(factor);
    lin.e = landmark_residual(l, t);
    lin.j = landmark_jacobian(l, t);
    lin.info = Eigen::LLT<Eigen::Matrix3d>(l.covariance).solve(Eigen::Matrix3d::Identity());
    lin.robust = kernel.robust_landmarks;
  }
  lin.u = std::sqrt(lin.e.dot(lin.info * lin.e));
  return lin;
}

double factor_cost(const Linearization& lin, const KernelConfig& kernel) {
  if (lin.robust) {
    return dcs_rho(lin.u, kernel.k);
  }
  return 0.5 * lin.u * lin.u;
}

/// Weighted Gauss-Newton gradient and Hessian of the robust cost at t.
void assemble(const std::vector<Factor>& factors, const geometry::Transform& t,
              const KernelConfig& kernel, Vector6d* gradient, Matrix6d* hessian,
              double* cost) {
  gradient->setZero();
  hessian->setZero();
  *cost = 0.0;
  for (const Factor& factor : factors) {
    const Linearization lin = linearize(factor, t, kernel);
    const double w = lin.robust ? dcs_weight(lin.u, kernel.k) : 1.0;
    const Eigen::MatrixXd whitened_jt_info = lin.j.transpose() * lin.info;
    *gradient += w * whitened_jt_info * lin.e;
    *hessian += w * whitened_jt_info * lin.j;
    *cost += factor_cost(lin, kernel);
  }
}

/// Dogleg step for the model m(d) = g.d + d'Hd/2 within radius. gn_valid
/// says whether the Gauss-Newton point could be computed.
Vector6d dogleg_step(const Vector6d& g, const Matrix6d& h, const Vector6d& gn,
                     bool gn_valid, double radius) {
  if (gn_valid && gn.norm() <= radius) {
    return gn;
  }
  const double ghg = g.dot(h * g);
  if (ghg <= 0.0) {
    // Model has no curvature along the gradient; fall back to the boundary.
    return -(radius / g.norm()) * g;
  }
  const Vector6d cauchy = -(g.squaredNorm() / ghg) * g;
  if (!gn_valid || cauchy.norm() >= radius) {
    return -(radius / g.norm()) * g;
  }
  // Walk from the Cauchy point toward the Gauss-Newton point until the
  // trust-region boundary. ||cauchy + beta * d|| = radius has one positive
  // root because ||cauchy|| < radius.
  const Vector6d d = gn - cauchy;
  const double a = d.squaredNorm();
  const double b = 2.0 * cauchy.dot(d);
  const double c = cauchy.squaredNorm() - radius * radius;
  const double beta = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  return cauchy + beta * d;
}

}  // namespace

double total_cost(const std::vector<Factor>& factors, const geometry::Transform& t,
                  const KernelConfig& kernel) {
  double cost = 0.0;
  for (const Factor& factor : factors) {
    cost += factor_cost(linearize(factor, t, kernel), kernel);
  }
  return cost;
}

LocalizationResult solve(const std::vector<Factor>& factors,
                         const geometry::Transform& initial_guess,
                         const SolverConfig& solver, const KernelConfig& kernel) {
  LocalizationResult result;
  result.transform = initial_guess;
  result.converged = false;

  bool has_gnss = false;
  bool has_vision = false;
  for (const Factor& factor : factors) {
    if (std::holds_alternative<GnssFactor>(factor)) {
      has_gnss = true;
    } else {
      has_vision = true;
    }
  }

  double radius = solver.initial_trust_radius;
  Vector6d gradient;
  Matrix6d hessian;
  double cost = 0.0;
  if (factors.empty()) {
    result.cost_history.push_back(0.0);
    return result;
  }
  assemble(factors, result.transform, kernel, &gradient, &hessian, &cost);
  result.cost_history.push_back(cost);

  for (int iter = 0; iter < solver.max_iters; ++iter) {
    if (gradient.lpNorm<Eigen::Infinity>() < solver.gradient_tol) {
      result.converged = true;
      break;
    }

    Eigen::LDLT<Matrix6d> ldlt(hessian);
    const bool gn_valid =
        ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
    const Vector6d gn = gn_valid ? Vector6d(-ldlt.solve(gradient)) : Vector6d::Zero();

    if (gn_valid) {
      if (gn.norm() < solver.step_tol) {
        result.converged = true;
        break;
      }
      // Once the Newton step's predicted improvement drops beneath the
      // resolution of the cost itself, ratio-testing it against measured
      // descent is comparing rounding noise. Take the refinement on the
      // model's word and let the gradient test decide convergence.
      const double gn_predicted = -0.5 * gradient.dot(gn);
      if (gn_predicted <= 1e-12 * (1.0 + std::abs(cost)) && gn.norm() <= 1e-3) {
        geometry::Transform refined = geometry::se3_exp(gn) * result.transform;
        refined.reproject();
        result.transform = refined;
        assemble(factors, result.transform, kernel, &gradient, &hessian, &cost);
        continue;
      }
    }

    bool stepped = false;
    while (radius >= solver.min_trust_radius) {
      const Vector6d step = dogleg_step(gradient, hessian, gn, gn_valid, radius);
      const double predicted = -(gradient.dot(step) + 0.5 * step.dot(hessian * step));
      geometry::Transform trial = geometry::se3_exp(step) * result.transform;
      trial.reproject();
      const double trial_cost = total_cost(factors, trial, kernel);
      const double actual = cost - trial_cost;
      const double gain = predicted > 0.0 ? actual / predicted : -1.0;

      if (gain > 0.75) {
        radius *= 2.0;
      } else if (gain < 0.25) {
        radius *= 0.25;
      }

      if (actual > 0.0) {
        result.transform = trial;
        assemble(factors, result.transform, kernel, &gradient, &hessian, &cost);
        result.cost_history.push_back(cost);
        if (step.norm() < solver.step_tol) {
          result.converged = true;
        }
        stepped = true;
        break;
      }
    }
    if (!stepped) {
      break;  // trust region collapsed without finding descent
    }
    if (result.converged) {
      break;
    }
  }

  // Uncertainty of the final iterate: inverse of the weighted information.
  // A solve that cannot pin all six axes is not a localization.
  Eigen::LDLT<Matrix6d> ldlt(hessian);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
    result.covariance = ldlt.solve(Matrix6d::Identity());
  } else {
    result.covariance = Matrix6d::Identity() * std::numeric_limits<double>::infinity();
    result.converged = false;
  }

  result.used_gnss = has_gnss && result.converged;
  result.used_vision = has_vision && result.converged;
  return result;
}

}  // namespace fusion
}  // namespace relnav
