// l1verify - SO(3) kernel
// Skew maps, nearest-rotation projection and the attitude error vector used by
// the geometric tracking controller.
#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "l1verify/error.hpp"

namespace l1v {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline const Vec3 kE3{0.0, 0.0, 1.0};

/// Tolerance on |S + S^T| accepted by vee().
inline constexpr double kSkewTolerance = 1e-9;

inline bool all_finite(const Vec3& v) { return v.allFinite(); }
inline bool all_finite(const Mat3& m) { return m.allFinite(); }

/// Cross-product matrix: wedge(w) * u == w.cross(u).
///
///             [  0  -z   y ]
/// wedge(w) =  [  z   0  -x ]
///             [ -y   x   0 ]
inline Mat3 wedge(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

/// Inverse of wedge. Throws NotSkewSymmetric when S is not skew within
/// kSkewTolerance.
inline Vec3 vee(const Mat3& s) {
  const double asym = (s + s.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSkewTolerance)) {
    throw Error(ErrorCode::NotSkewSymmetric,
                "max |S + S^T| = " + std::to_string(asym));
  }
  return Vec3{s(2, 1), s(0, 2), s(1, 0)};
}

/// Skew-symmetric part of an arbitrary matrix, mapped to a vector.
inline Vec3 vee_skew_part(const Mat3& a) { return vee(0.5 * (a - a.transpose())); }

/// Nearest rotation in the Frobenius norm (orthogonal polar factor).
///
/// Uses an SVD: A = U S V^T  ->  R = U V^T. Inputs with det(A) <= 0 or a
/// vanishing singular value are rejected.
inline Mat3 project_to_so3(const Mat3& a) {
  if (!all_finite(a)) throw Error(ErrorCode::NonFinite, "project_to_so3 input");
  Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(2) > 1e-12 * std::max(1.0, sv(0))) || !(a.determinant() > 0.0)) {
    throw Error(ErrorCode::Degenerate, "matrix is rank-deficient or has det <= 0");
  }
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  // One Newton polar step removes the residual SVD rounding.
  r = 0.5 * (r + r.inverse().transpose());
  return r;
}

/// Attitude error e_R = 1/2 vee(R_d^T R - R^T R_d).
inline Vec3 rotation_error(const Mat3& r, const Mat3& r_d) {
  return vee_skew_part(r_d.transpose() * r);
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

/// max |R^T R - I|
inline double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace l1v
