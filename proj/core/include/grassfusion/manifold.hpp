#pragma once

#include <Eigen/Dense>

#include "grassfusion/errors.hpp"

namespace gf {

// Point on the Grassmannian G(m,r), represented by a column-orthonormal
// m x r basis. Only span(basis) is meaningful; right rotations are gauge.
struct StiefelPoint {
  Eigen::MatrixXd basis;

  Eigen::Index m() const { return basis.rows(); }
  Eigen::Index r() const { return basis.cols(); }
};

// Horizontal tangent at some StiefelPoint U: U^T * delta = 0.
struct TangentVector {
  Eigen::MatrixXd delta;
};

struct PrincipalAngles {
  Eigen::VectorXd cosines;  // singular values of U^T V, clamped to [0,1], non-increasing
  Eigen::VectorXd angles;   // arccos of the above, in [0, pi/2]
};

// Gram-Schmidt orthonormalization; the first output column is the first input
// column normalized (proxy initialization relies on this).
StiefelPoint orthonormalize(const Eigen::MatrixXd& mat);

PrincipalAngles principal_angles(const StiefelPoint& U, const StiefelPoint& V);

// sqrt(sum of squared principal angles); the intrinsic Grassmannian metric.
double geodesic_distance(const StiefelPoint& U, const StiefelPoint& V);

// 1 - sigma_1^2(X0^T U): zero iff span(X0) intersects span(U) nontrivially.
double chordal_residual(const Eigen::MatrixXd& X0, const StiefelPoint& U);

TangentVector project_tangent(const StiefelPoint& U, const Eigen::MatrixXd& G);

// Exponential-map step along `direction` with step size eta. With the compact
// SVD direction = Gamma * diag(Y) * E^T this is
//   U * E * diag(cos(eta Y)) * E^T + Gamma * diag(sin(eta Y)) * E^T,
// re-orthonormalized whenever roundoff drift exceeds 1e-10.
StiefelPoint geodesic_step(const StiefelPoint& U, const TangentVector& direction, double eta);

}  // namespace gf
