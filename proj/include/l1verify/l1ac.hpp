// l1verify - L1 adaptive augmentation of the geometric controller
//
// Matched-uncertainty architecture on the velocity and body-rate channels:
// a state predictor driven by the commanded input, a piecewise-constant
// adaptation law and a first-order low-pass filter per input channel
// (1 thrust + 3 moments).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "l1verify/control.hpp"
#include "l1verify/error.hpp"
#include "l1verify/geometry.hpp"
#include "l1verify/vehicle.hpp"

namespace l1v {

using Vec4 = Eigen::Vector4d;

struct L1Params {
  bool enabled = false;
  Vec3 As_v = Vec3::Constant(-10.0);
  Vec3 As_omega = Vec3::Constant(-10.0);
  double omega_c_f = 5.0;   // rad/s
  double omega_c_M = 80.0;  // rad/s
  double Ts = 1e-3;         // s
  double sat_f = 0.5 * 0.752 * 9.81;  // N
  double sat_M = 0.5;                 // N m

  static L1Params defaults_for(const VehicleParams& vp) {
    L1Params p;
    p.sat_f = 0.5 * vp.m0 * vp.g;
    return p;
  }

  void validate() const {
    if (!As_v.allFinite() || !As_omega.allFinite() || !(As_v.maxCoeff() < 0.0) ||
        !(As_omega.maxCoeff() < 0.0))
      throw Error(ErrorCode::ValidationError, "As components < 0");
    if (!(omega_c_f > 0.0) || !(omega_c_M > 0.0) || !std::isfinite(omega_c_f) ||
        !std::isfinite(omega_c_M))
      throw Error(ErrorCode::ValidationError, "filter bandwidths > 0");
    if (!(Ts > 0.0) || !std::isfinite(Ts)) throw Error(ErrorCode::ValidationError, "Ts > 0");
    if (!(sat_f > 0.0) || !(sat_M > 0.0))
      throw Error(ErrorCode::ValidationError, "L1 saturation limits > 0");
  }
};

struct L1State {
  Vec3 v_hat = Vec3::Zero();
  Vec3 omega_hat = Vec3::Zero();
  Vec4 sigma_hat = Vec4::Zero();  // [thrust, Mx, My, Mz]
  Vec4 u_l1 = Vec4::Zero();       // filtered compensation, same layout
  std::int64_t tick = 0;

  /// Predictor starts on the measured state.
  static L1State init(const QuadState& x) {
    L1State s;
    s.v_hat = x.v;
    s.omega_hat = x.Omega;
    return s;
  }
};

/// Per-component gain of the piecewise-constant law, -Phi^-1 exp(As Ts) with
/// Phi = As^-1 (exp(As Ts) - 1).
inline double pwc_gain(double as, double ts) {
  const double e = std::exp(as * ts);
  const double phi = std::expm1(as * ts) / as;
  return -e / phi;
}

inline Vec3 pwc_gain(const Vec3& as, double ts) {
  return {pwc_gain(as.x(), ts), pwc_gain(as.y(), ts), pwc_gain(as.z(), ts)};
}

struct PredictorRates {
  Vec3 v_hat_dot;
  Vec3 omega_hat_dot;
};

/// Predictor dynamics on the nominal model:
///   v_hat'     = g e3 - (f + sigma_f) R e3 / m0 + As_v o (v_hat - v)
///   omega_hat' = J^-1 (M + sigma_M - Omega x J Omega) + As_omega o (omega_hat - Omega)
inline PredictorRates predictor_derivative(const L1State& l1, const QuadState& x,
                                           const ControlInput& u_total,
                                           const VehicleParams& params, const L1Params& l1p) {
  PredictorRates d;
  const Vec3 b3 = x.R * kE3;
  const double sigma_f = l1.sigma_hat(0);
  const Vec3 sigma_M = l1.sigma_hat.tail<3>();
  d.v_hat_dot = params.g * kE3 - (u_total.f + sigma_f) * b3 / params.m0 +
                l1p.As_v.cwiseProduct(l1.v_hat - x.v);
  d.omega_hat_dot =
      params.J.ldlt().solve(u_total.M + sigma_M - x.Omega.cross(params.J * x.Omega)) +
      l1p.As_omega.cwiseProduct(l1.omega_hat - x.Omega);
  return d;
}

/// Forward-Euler predictor update.
inline L1State predictor_step(const L1State& l1, const QuadState& x, const ControlInput& u_total,
                              const VehicleParams& params, const L1Params& l1p, double dt) {
  const PredictorRates d = predictor_derivative(l1, x, u_total, params, l1p);
  L1State next = l1;
  next.v_hat += dt * d.v_hat_dot;
  next.omega_hat += dt * d.omega_hat_dot;
  if (!next.v_hat.allFinite() || !next.omega_hat.allFinite())
    throw Error(ErrorCode::NonFinite, "L1 predictor state");
  return next;
}

/// Piecewise-constant adaptation, mapped onto the matched input channels.
/// Thrust is estimated from the component of the velocity-channel estimate
/// along the body z axis; moments from the body-rate channel scaled by J.
inline Vec4 adaptation_update(const Vec3& v_tilde, const Vec3& omega_tilde, const QuadState& x,
                              const VehicleParams& params, const L1Params& l1p) {
  const Vec3 sigma_v = pwc_gain(l1p.As_v, l1p.Ts).cwiseProduct(v_tilde);
  const Vec3 sigma_w = pwc_gain(l1p.As_omega, l1p.Ts).cwiseProduct(omega_tilde);
  Vec4 out;
  out(0) = -params.m0 * (x.R * kE3).dot(sigma_v);
  out.tail<3>() = params.J * sigma_w;
  return out;
}

/// Exact discretisation of u' = omega_c (-sigma - u), per channel. Channel 0
/// uses the thrust bandwidth, channels 1..3 the moment bandwidth.
inline Vec4 lpf_step(const Vec4& u, const Vec4& sigma_hat, const L1Params& l1p, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::ValidationError, "lpf dt > 0");
  const double af = std::exp(-l1p.omega_c_f * dt);
  const double am = std::exp(-l1p.omega_c_M * dt);
  Vec4 out;
  out(0) = u(0) * af + (-sigma_hat(0)) * (1.0 - af);
  for (int i = 1; i < 4; ++i) out(i) = u(i) * am + (-sigma_hat(i)) * (1.0 - am);
  return out;
}

inline Vec4 saturate_l1(const Vec4& u, const L1Params& l1p) {
  Vec4 s;
  s(0) = std::clamp(u(0), -l1p.sat_f, l1p.sat_f);
  for (int i = 1; i < 4; ++i) s(i) = std::clamp(u(i), -l1p.sat_M, l1p.sat_M);
  return s;
}

struct L1Output {
  ControlInput u_total;
  ControlInput u_baseline;
  L1State next;
};

/// Number of simulation steps per adaptation period.
inline std::int64_t adaptation_stride(const L1Params& l1p, double dt) {
  return std::max<std::int64_t>(1, std::llround(l1p.Ts / dt));
}

/// One control tick of the augmented controller at time t.
///
/// Order within the tick: adaptation from the current prediction error (once
/// per Ts), filter update, u_total = baseline + u_l1, then the predictor is
/// advanced with u_total to the next tick. With l1p.enabled == false the
/// baseline command is returned untouched and the L1 state is frozen.
inline L1Output l1_augmented_control(const QuadState& x, const ReferenceSpec& ref, double t,
                                     const Gains& gains, const VehicleParams& params,
                                     const L1Params& l1p, const L1State& l1, double dt) {
  L1Output out;
  out.u_baseline = geometric_control(x, ref, t, gains, params);
  if (!l1p.enabled) {
    out.u_total = out.u_baseline;
    out.next = l1;
    return out;
  }
  L1State s = l1;
  if (s.tick % adaptation_stride(l1p, dt) == 0) {
    s.sigma_hat = adaptation_update(s.v_hat - x.v, s.omega_hat - x.Omega, x, params, l1p);
  }
  s.u_l1 = saturate_l1(lpf_step(s.u_l1, s.sigma_hat, l1p, dt), l1p);
  out.u_total.f = out.u_baseline.f + s.u_l1(0);
  out.u_total.M = out.u_baseline.M + s.u_l1.tail<3>();
  out.next = predictor_step(s, x, out.u_total, params, l1p, dt);
  out.next.tick = s.tick + 1;
  return out;
}

}  // namespace l1v
