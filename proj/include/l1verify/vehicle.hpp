// l1verify - quadrotor rigid-body dynamics with an augmented mass state
#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "l1verify/error.hpp"
#include "l1verify/geometry.hpp"

namespace l1v {

/// Dimension of the simulated state: p(3) v(3) R(9, row-major) Omega(3) m(1).
inline constexpr int kStateDim = 19;
using StateVector = Eigen::Matrix<double, kStateDim, 1>;

namespace idx {
inline constexpr int px = 0, py = 1, pz = 2;
inline constexpr int vx = 3, vy = 4, vz = 5;
inline constexpr int r0 = 6;  // R(i,j) lives at r0 + 3*i + j
inline constexpr int wx = 15, wy = 16, wz = 17;
inline constexpr int mass = 18;
}  // namespace idx

/// Column names used by every CSV/JSON artifact, in StateVector order.
inline const char* state_dim_name(int i) {
  static const char* names[kStateDim] = {"px",  "py",  "pz",  "vx",  "vy",  "vz",  "R00",
                                         "R01", "R02", "R10", "R11", "R12", "R20", "R21",
                                         "R22", "wx",  "wy",  "wz",  "m"};
  return names[i];
}

inline int state_dim_index(const std::string& name) {
  for (int i = 0; i < kStateDim; ++i) {
    if (name == state_dim_name(i)) return i;
  }
  return -1;
}

struct QuadState {
  Vec3 p = Vec3::Zero();       // m, inertial
  Vec3 v = Vec3::Zero();       // m/s, inertial
  Mat3 R = Mat3::Identity();   // body -> inertial
  Vec3 Omega = Vec3::Zero();   // rad/s, body
  double m_actual = 0.752;     // kg

  StateVector to_vector() const {
    StateVector x;
    x.segment<3>(idx::px) = p;
    x.segment<3>(idx::vx) = v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) x(idx::r0 + 3 * i + j) = R(i, j);
    x.segment<3>(idx::wx) = Omega;
    x(idx::mass) = m_actual;
    return x;
  }

  static QuadState from_vector(const StateVector& x) {
    QuadState s;
    s.p = x.segment<3>(idx::px);
    s.v = x.segment<3>(idx::vx);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s.R(i, j) = x(idx::r0 + 3 * i + j);
    s.Omega = x.segment<3>(idx::wx);
    s.m_actual = x(idx::mass);
    return s;
  }
};

struct VehicleParams {
  double m0 = 0.752;  // design mass used by the controllers
  Mat3 J = Vec3{0.0025, 0.0021, 0.0043}.asDiagonal();
  double g = 9.81;
  double f_max = 4.0 * 0.752 * 9.81;

  void validate() const {
    if (!(m0 > 0.0) || !std::isfinite(m0)) throw Error(ErrorCode::ValidationError, "m0 > 0");
    if (!(g > 0.0) || !std::isfinite(g)) throw Error(ErrorCode::ValidationError, "g > 0");
    if (!(f_max > 0.0) || !std::isfinite(f_max))
      throw Error(ErrorCode::ValidationError, "f_max > 0");
    if (!J.allFinite() || (J - J.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorCode::ValidationError, "J symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(J);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw Error(ErrorCode::ValidationError, "J positive-definite");
  }
};

struct ControlInput {
  double f = 0.0;            // N, collective thrust
  Vec3 M = Vec3::Zero();     // N m, body frame

  bool operator==(const ControlInput& o) const { return f == o.f && M == o.M; }
};

/// Clamps thrust into [0, f_max]. Returns true if clamping changed the value.
inline bool clamp_thrust(ControlInput& u, const VehicleParams& params) {
  const double clamped = std::clamp(u.f, 0.0, params.f_max);
  const bool changed = clamped != u.f;
  u.f = clamped;
  return changed;
}

struct StateDerivative {
  Vec3 p_dot;
  Vec3 v_dot;
  Mat3 R_dot;
  Vec3 Omega_dot;
  double m_dot;

  StateVector to_vector() const {
    QuadState packed{p_dot, v_dot, R_dot, Omega_dot, m_dot};
    return packed.to_vector();
  }
};

/// Equations of motion, z axis pointing down:
///   p' = v
///   v' = g e3 - f R e3 / m
///   R' = R wedge(Omega)
///   Omega' = J^-1 (M - Omega x J Omega)
///   m' = m_dot
/// The mass in v' is the actual (augmented-state) mass, never m0.
inline StateDerivative derivative(const QuadState& x, const ControlInput& u, double m_dot,
                                  const VehicleParams& params) {
  StateDerivative d;
  d.p_dot = x.v;
  d.v_dot = params.g * kE3 - u.f * (x.R * kE3) / x.m_actual;
  d.R_dot = x.R * wedge(x.Omega);
  d.Omega_dot = params.J.ldlt().solve(u.M - x.Omega.cross(params.J * x.Omega));
  d.m_dot = m_dot;
  if (!d.p_dot.allFinite() || !d.v_dot.allFinite() || !d.R_dot.allFinite() ||
      !d.Omega_dot.allFinite() || !std::isfinite(d.m_dot)) {
    throw Error(ErrorCode::NonFinite, "non-finite state derivative");
  }
  return d;
}

inline constexpr double kMaxStep = 0.01;

/// Classical RK4 step with input and m_dot frozen over the step, followed by
/// projection of R back onto SO(3).
inline QuadState step(const QuadState& x, ControlInput u, double m_dot,
                      const VehicleParams& params, double dt) {
  if (!(dt > 0.0) || dt > kMaxStep) {
    throw Error(ErrorCode::ValidationError, "step size must satisfy 0 < dt <= 0.01");
  }
  clamp_thrust(u, params);
  auto f = [&](const StateVector& s) {
    return derivative(QuadState::from_vector(s), u, m_dot, params).to_vector();
  };
  const StateVector x0 = x.to_vector();
  const StateVector k1 = f(x0);
  const StateVector k2 = f(x0 + 0.5 * dt * k1);
  const StateVector k3 = f(x0 + 0.5 * dt * k2);
  const StateVector k4 = f(x0 + dt * k3);
  QuadState next = QuadState::from_vector(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  next.R = project_to_so3(next.R);
  return next;
}

}  // namespace l1v
