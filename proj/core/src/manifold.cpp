#include "grassfusion/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gf {

namespace {

void check_same_shape(const StiefelPoint& U, const StiefelPoint& V) {
  if (U.m() != V.m() || U.r() != V.r())
    throw ShapeError("principal_angles: shape mismatch (" + std::to_string(U.m()) + "x" +
                     std::to_string(U.r()) + " vs " + std::to_string(V.m()) + "x" +
                     std::to_string(V.r()) + ")");
}

}  // namespace

StiefelPoint orthonormalize(const Eigen::MatrixXd& mat) {
  const Eigen::Index m = mat.rows(), r = mat.cols();
  if (r < 1 || m < r)
    throw ParameterError("orthonormalize: need m >= r >= 1, got " + std::to_string(m) + "x" +
                         std::to_string(r));
  Eigen::MatrixXd q = mat;
  for (Eigen::Index j = 0; j < r; ++j) {
    // two MGS passes keep ||Q^T Q - I|| at roundoff level
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    const double nrm = q.col(j).norm();
    if (nrm <= 1e-12 * std::max(1.0, mat.col(j).norm()))
      throw DegenerateInputError("orthonormalize: column " + std::to_string(j) +
                                 " is linearly dependent on earlier columns");
    q.col(j) /= nrm;
  }
  return {std::move(q)};
}

PrincipalAngles principal_angles(const StiefelPoint& U, const StiefelPoint& V) {
  check_same_shape(U, V);
  Eigen::MatrixXd B = U.basis.transpose() * V.basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  PrincipalAngles out;
  out.cosines = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);
  out.angles = out.cosines.array().acos();
  return out;
}

double geodesic_distance(const StiefelPoint& U, const StiefelPoint& V) {
  const PrincipalAngles pa = principal_angles(U, V);
  return pa.angles.norm();
}

double chordal_residual(const Eigen::MatrixXd& X0, const StiefelPoint& U) {
  if (X0.rows() != U.m())
    throw ShapeError("chordal_residual: ambient dimension mismatch (" +
                     std::to_string(X0.rows()) + " vs " + std::to_string(U.m()) + ")");
  Eigen::MatrixXd B = X0.transpose() * U.basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  const double s1 = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  return 1.0 - s1 * s1;
}

TangentVector project_tangent(const StiefelPoint& U, const Eigen::MatrixXd& G) {
  if (G.rows() != U.m() || G.cols() != U.r())
    throw ShapeError("project_tangent: gradient shape mismatch");
  return {G - U.basis * (U.basis.transpose() * G)};
}

StiefelPoint geodesic_step(const StiefelPoint& U, const TangentVector& direction, double eta) {
  if (direction.delta.rows() != U.m() || direction.delta.cols() != U.r())
    throw ShapeError("geodesic_step: direction shape mismatch");
  const double tangency = (U.basis.transpose() * direction.delta).norm();
  if (tangency > 1e-8)
    throw ContractViolationError("geodesic_step: direction is not horizontal at U (||U^T d|| = " +
                                 std::to_string(tangency) + ")");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(direction.delta,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd theta = eta * svd.singularValues();
  const Eigen::MatrixXd& E = svd.matrixV();
  Eigen::MatrixXd out = U.basis * (E * theta.array().cos().matrix().asDiagonal() * E.transpose()) +
                        svd.matrixU() * theta.array().sin().matrix().asDiagonal() * E.transpose();
  const Eigen::Index r = U.r();
  const double drift =
      (out.transpose() * out - Eigen::MatrixXd::Identity(r, r)).norm();
  if (drift > 1e-10) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(out);
    out = qr.householderQ() * Eigen::MatrixXd::Identity(U.m(), r);
  }
  return {std::move(out)};
}

}  // namespace gf
