// l1verify - reference trajectories and the baseline geometric tracking controller
#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "l1verify/error.hpp"
#include "l1verify/geometry.hpp"
#include "l1verify/vehicle.hpp"

namespace l1v {

/// Diagonal gains.
struct Gains {
  Vec3 Kp = Vec3::Constant(4.0 * 0.752);
  Vec3 Kv = Vec3::Constant(4.0 * 0.752);
  Vec3 KR = Vec3::Constant(0.6);
  Vec3 KOmega = Vec3::Constant(0.1);

  /// Defaults scale the translational gains with the design mass.
  static Gains defaults_for(double m0) {
    Gains g;
    g.Kp = g.Kv = Vec3::Constant(4.0 * m0);
    return g;
  }

  void validate() const {
    for (const Vec3* k : {&Kp, &Kv, &KR, &KOmega}) {
      if (!k->allFinite() || !(k->minCoeff() > 0.0))
        throw Error(ErrorCode::ValidationError, "gains must be strictly positive");
    }
  }
};

enum class ReferenceFamily { Hover, Circle, FigureEight };

inline const char* to_string(ReferenceFamily f) {
  switch (f) {
    case ReferenceFamily::Hover: return "hover";
    case ReferenceFamily::Circle: return "circle";
    case ReferenceFamily::FigureEight: return "figure-eight";
  }
  return "?";
}

inline ReferenceFamily reference_family_from_string(const std::string& s) {
  if (s == "hover") return ReferenceFamily::Hover;
  if (s == "circle") return ReferenceFamily::Circle;
  if (s == "figure-eight") return ReferenceFamily::FigureEight;
  throw Error(ErrorCode::UnknownFamily, "unknown reference family '" + s + "'");
}

/// Parameters of a built-in reference family. Unused fields are ignored by the
/// family that does not need them.
struct ReferenceSpec {
  ReferenceFamily family = ReferenceFamily::Hover;
  Vec3 p0{0.0, 0.0, -1.0};  // hover point; circle / figure-eight centre (x, y)
  double radius = 1.0;      // circle
  double a = 1.0;           // figure-eight x amplitude
  double b = 1.0;           // figure-eight y amplitude
  double period = 2.0 * std::numbers::pi;
  double altitude = -1.0;   // circle / figure-eight z (down-positive frame)
  double psi = 0.0;         // constant yaw

  void validate() const {
    if (!p0.allFinite() || !std::isfinite(radius) || !std::isfinite(a) || !std::isfinite(b) ||
        !std::isfinite(altitude) || !std::isfinite(psi))
      throw Error(ErrorCode::ValidationError, "reference parameters must be finite");
    if (family != ReferenceFamily::Hover && !(period > 0.0))
      throw Error(ErrorCode::ValidationError, "reference period > 0");
  }
};

struct ReferencePoint {
  Vec3 p_d = Vec3::Zero();
  Vec3 v_d = Vec3::Zero();
  Vec3 a_d = Vec3::Zero();
  double psi_d = 0.0;
};

inline ReferencePoint reference(double t, const ReferenceSpec& spec) {
  ReferencePoint r;
  r.psi_d = spec.psi;
  switch (spec.family) {
    case ReferenceFamily::Hover:
      r.p_d = spec.p0;
      break;
    case ReferenceFamily::Circle: {
      const double w = 2.0 * std::numbers::pi / spec.period;
      const double c = std::cos(w * t), s = std::sin(w * t);
      const double rad = spec.radius;
      r.p_d = {spec.p0.x() + rad * c, spec.p0.y() + rad * s, spec.altitude};
      r.v_d = {-rad * w * s, rad * w * c, 0.0};
      r.a_d = {-rad * w * w * c, -rad * w * w * s, 0.0};
      break;
    }
    case ReferenceFamily::FigureEight: {
      // x = a sin(wt), y = (b/2) sin(2wt)
      const double w = 2.0 * std::numbers::pi / spec.period;
      const double s1 = std::sin(w * t), c1 = std::cos(w * t);
      const double s2 = std::sin(2.0 * w * t), c2 = std::cos(2.0 * w * t);
      r.p_d = {spec.p0.x() + spec.a * s1, spec.p0.y() + 0.5 * spec.b * s2, spec.altitude};
      r.v_d = {spec.a * w * c1, spec.b * w * c2, 0.0};
      r.a_d = {-spec.a * w * w * s1, -2.0 * spec.b * w * w * s2, 0.0};
      break;
    }
  }
  return r;
}

/// F_d = -Kp e_p - Kv e_v - m0 g e3 + m0 a_d, with e_p = p - p_d, e_v = v - v_d.
inline Vec3 desired_force(const QuadState& x, const ReferencePoint& ref, const Gains& gains,
                          const VehicleParams& params) {
  const Vec3 e_p = x.p - ref.p_d;
  const Vec3 e_v = x.v - ref.v_d;
  return -gains.Kp.cwiseProduct(e_p) - gains.Kv.cwiseProduct(e_v) -
         params.m0 * params.g * kE3 + params.m0 * ref.a_d;
}

inline constexpr double kMinForce = 1e-6;
/// Central-difference step used to differentiate R_d(t).
inline constexpr double kAttitudeFdStep = 1e-4;

/// Rotation whose third column is -F_d/|F_d| and whose first column lies in the
/// plane spanned by the yaw heading and that axis.
inline Mat3 attitude_from_force(const Vec3& F_d, double psi_d) {
  const double n = F_d.norm();
  if (!(n >= kMinForce)) throw Error(ErrorCode::DegenerateForce, "|F_d| < 1e-6 N");
  const Vec3 b3 = -F_d / n;
  const Vec3 b1c{std::cos(psi_d), std::sin(psi_d), 0.0};
  const Vec3 c = b3.cross(b1c);
  const double cn = c.norm();
  if (!(cn > 1e-9)) throw Error(ErrorCode::DegenerateForce, "thrust axis parallel to heading");
  const Vec3 b2 = c / cn;
  const Vec3 b1 = b2.cross(b3);
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

struct AttitudeTarget {
  Mat3 R_d = Mat3::Identity();
  Vec3 Omega_d = Vec3::Zero();
  Vec3 Omega_d_dot = Vec3::Zero();
};

/// Desired attitude and its body rates from a force history.
///
/// `force_at(s)` must return the desired force at time t + s. R_d comes from
/// force_at(0); Omega_d and its derivative are obtained by central differences
/// of R_d with step kAttitudeFdStep:
///   Omega_d^     = skew(R_d^T R_d')
///   Omega_d_dot^ = skew(R_d^T R_d'')   (Omega^ Omega^ is symmetric)
template <class ForceFn>
AttitudeTarget desired_attitude(ForceFn&& force_at, double psi_d) {
  const double h = kAttitudeFdStep;
  AttitudeTarget out;
  out.R_d = attitude_from_force(force_at(0.0), psi_d);
  const Mat3 r_plus = attitude_from_force(force_at(h), psi_d);
  const Mat3 r_minus = attitude_from_force(force_at(-h), psi_d);
  const Mat3 r_dot = (r_plus - r_minus) / (2.0 * h);
  const Mat3 r_ddot = (r_plus - 2.0 * out.R_d + r_minus) / (h * h);
  out.Omega_d = vee_skew_part(out.R_d.transpose() * r_dot);
  out.Omega_d_dot = vee_skew_part(out.R_d.transpose() * r_ddot);
  return out;
}

/// Everything the geometric controller computes on one evaluation.
struct GeometricTerms {
  ControlInput u;
  Vec3 F_d = Vec3::Zero();
  AttitudeTarget target;
  Vec3 e_p = Vec3::Zero();
  Vec3 e_v = Vec3::Zero();
  Vec3 e_R = Vec3::Zero();
  Vec3 e_Omega = Vec3::Zero();
};

/// Geometric tracking control on the nominal model (design mass m0).
///
///   f = -F_d . (R e3)
///   M = -KR e_R - KOmega e_Omega + Omega x J Omega
///       - J (Omega^ R^T R_d Omega_d - R^T R_d Omega_d_dot)
///
/// R_d(t + s) for the rate feedforward is built from F_d evaluated on the
/// reference at t + s and on the state extrapolated with the nominal
/// acceleration g e3 - f R e3 / m0 and its rotational jerk -f R Omega^ e3 / m0.
inline GeometricTerms geometric_control_terms(const QuadState& x, const ReferenceSpec& ref_spec,
                                              double t, const Gains& gains,
                                              const VehicleParams& params) {
  GeometricTerms out;
  const ReferencePoint ref = reference(t, ref_spec);
  out.e_p = x.p - ref.p_d;
  out.e_v = x.v - ref.v_d;
  out.F_d = desired_force(x, ref, gains, params);
  const Vec3 b3 = x.R * kE3;
  out.u.f = -out.F_d.dot(b3);

  const Vec3 accel = params.g * kE3 - out.u.f * b3 / params.m0;
  const Vec3 jerk = -out.u.f * (x.R * wedge(x.Omega) * kE3) / params.m0;
  auto force_at = [&](double s) -> Vec3 {
    if (s == 0.0) return out.F_d;
    QuadState xs = x;
    xs.p = x.p + s * x.v + 0.5 * s * s * accel + (s * s * s / 6.0) * jerk;
    xs.v = x.v + s * accel + 0.5 * s * s * jerk;
    return desired_force(xs, reference(t + s, ref_spec), gains, params);
  };
  out.target = desired_attitude(force_at, ref.psi_d);

  const Mat3& R = x.R;
  const Mat3& R_d = out.target.R_d;
  const Mat3 rt_rd = R.transpose() * R_d;
  out.e_R = rotation_error(R, R_d);
  out.e_Omega = x.Omega - rt_rd * out.target.Omega_d;
  const Mat3& J = params.J;
  out.u.M = -gains.KR.cwiseProduct(out.e_R) - gains.KOmega.cwiseProduct(out.e_Omega) +
            x.Omega.cross(J * x.Omega) -
            J * (wedge(x.Omega) * rt_rd * out.target.Omega_d - rt_rd * out.target.Omega_d_dot);
  return out;
}

inline ControlInput geometric_control(const QuadState& x, const ReferenceSpec& ref_spec, double t,
                                      const Gains& gains, const VehicleParams& params) {
  return geometric_control_terms(x, ref_spec, t, gains, params).u;
}

}  // namespace l1v
