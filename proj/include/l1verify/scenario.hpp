// l1verify - uncertainty injection and the closed-loop simulator
#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l1verify/control.hpp"
#include "l1verify/error.hpp"
#include "l1verify/l1ac.hpp"
#include "l1verify/vehicle.hpp"

namespace l1v {

/// m'(t) = m_bar (1 + a sin(omega_m t + phase)), with the mean m_bar uncertain
/// in [m_lo, m_hi].
struct MassProfile {
  double m_lo = 0.752 * 0.8;
  double m_hi = 0.752 * 1.2;
  double amplitude = 0.1;
  double omega_m = 2.0;
  double phase = 0.0;

  static MassProfile defaults_for(double m0) {
    MassProfile p;
    p.m_lo = 0.8 * m0;
    p.m_hi = 1.2 * m0;
    return p;
  }

  void validate() const {
    if (!(m_lo > 0.0) || !(m_lo <= m_hi) || !std::isfinite(m_hi))
      throw Error(ErrorCode::ValidationError, "0 < m_lo <= m_hi");
    if (!(amplitude >= 0.0 && amplitude < 1.0))
      throw Error(ErrorCode::ValidationError, "0 <= amplitude < 1");
    if (!std::isfinite(omega_m) || !std::isfinite(phase))
      throw Error(ErrorCode::ValidationError, "mass profile rate/phase finite");
  }

  /// Recovers the mean mass from the initial mass state.
  double mean_from_initial(double m_initial) const {
    return m_initial / (1.0 + amplitude * std::sin(phase));
  }
};

struct MassSample {
  double m;
  double m_dot;
};

inline MassSample mass_value(double t, double m_bar, const MassProfile& prof) {
  const double arg = prof.omega_m * t + prof.phase;
  return {m_bar * (1.0 + prof.amplitude * std::sin(arg)),
          m_bar * prof.amplitude * prof.omega_m * std::cos(arg)};
}

/// Pure input delay with a start-up hold value.
class DelayBuffer {
 public:
  DelayBuffer(double tau, ControlInput hold_value) : tau_(tau), hold_(std::move(hold_value)) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::ValidationError, "tau >= 0");
  }

  double tau() const { return tau_; }
  std::size_t size() const { return records_.size(); }

  /// Pushes (t, u) and returns the newest record stamped at or before t - tau,
  /// or the hold value if there is none yet.
  ControlInput apply(const ControlInput& u, double t) {
    if (!records_.empty() && t < records_.back().t)
      throw Error(ErrorCode::NonMonotonicTime, "delay buffer time went backwards");
    if (tau_ == 0.0) return u;
    records_.push_back({t, u});
    // Grid times are index-derived; the slack absorbs t - tau rounding.
    const double cutoff = t - tau_ + kTimeSlack;
    while (records_.size() >= 2 && records_[1].t <= cutoff) records_.pop_front();
    if (records_.front().t <= cutoff) return records_.front().u;
    return hold_;
  }

 private:
  static constexpr double kTimeSlack = 1e-9;
  struct Record {
    double t;
    ControlInput u;
  };
  double tau_;
  ControlInput hold_;
  std::deque<Record> records_;
};

/// Axis-aligned box over an n-dimensional state.
struct HyperRect {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  HyperRect() = default;
  HyperRect(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h)) {
    validate();
  }

  static HyperRect point(const Eigen::VectorXd& x) { return HyperRect(x, x); }

  Eigen::Index dim() const { return lo.size(); }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd half_width() const { return 0.5 * (hi - lo); }

  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }

  bool intersects(const HyperRect& o) const {
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
  }

  void validate() const {
    if (lo.size() != hi.size()) throw Error(ErrorCode::ValidationError, "box dimension mismatch");
    if (!(lo.array() <= hi.array()).all()) throw Error(ErrorCode::ValidationError, "box lo <= hi");
  }
};

/// Full description of one experiment.
struct Scenario {
  VehicleParams vehicle;
  Gains gains;
  ReferenceSpec reference;
  MassProfile mass;
  double tau = 0.0;
  L1Params l1;
  double t_f = 5.0;
  double dt = 1e-3;
  HyperRect x0;

  // verification hyperparameters
  double epsilon = 0.05;
  double delta = 0.01;
  int segments = 10;
  std::uint64_t seed = 0;
  int samples = 0;  // 0: derive from (epsilon, delta)
  std::vector<std::pair<int, std::pair<double, double>>> unsafe;  // (dim, [lo, hi])

  std::int64_t steps() const { return std::llround(t_f / dt); }

  /// Initial set: a point at the start of the reference, at rest and level,
  /// with the mass interval taken from the uncertainty profile.
  static HyperRect default_initial_set(const ReferenceSpec& ref, const MassProfile& mass) {
    QuadState s;
    const ReferencePoint r0 = l1v::reference(0.0, ref);
    s.p = r0.p_d;
    s.v = r0.v_d;
    s.m_actual = mass.m_lo;
    StateVector lo = s.to_vector();
    s.m_actual = mass.m_hi;
    StateVector hi = s.to_vector();
    lo(idx::pz) -= 0.02;
    hi(idx::pz) += 0.02;
    return HyperRect(lo, hi);
  }

  static Scenario defaults() {
    Scenario sc;
    sc.x0 = default_initial_set(sc.reference, sc.mass);
    return sc;
  }

  void validate() const {
    vehicle.validate();
    gains.validate();
    reference.validate();
    mass.validate();
    l1.validate();
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::ValidationError, "tau >= 0");
    if (!(t_f > 0.0) || !std::isfinite(t_f)) throw Error(ErrorCode::ValidationError, "t_f > 0");
    if (!(dt > 0.0) || dt > kMaxStep) throw Error(ErrorCode::ValidationError, "0 < dt <= 0.01");
    if (std::abs(static_cast<double>(steps()) * dt - t_f) > 1e-9 * t_f)
      throw Error(ErrorCode::ValidationError, "dt divides t_f");
    if (x0.dim() != kStateDim) throw Error(ErrorCode::ValidationError, "x0 has 19 dimensions");
    x0.validate();
    if (!x0.lo.allFinite() || !x0.hi.allFinite())
      throw Error(ErrorCode::ValidationError, "x0 bounds finite");
    if (!(x0.lo(idx::mass) > 0.0)) throw Error(ErrorCode::ValidationError, "x0 mass > 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::ValidationError, "0 < epsilon < 1");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::ValidationError, "0 < delta < 1");
    if (segments < 1) throw Error(ErrorCode::ValidationError, "segments >= 1");
    if (samples < 0) throw Error(ErrorCode::ValidationError, "samples >= 0");
    for (const auto& [d, iv] : unsafe) {
      if (d < 0 || d >= kStateDim) throw Error(ErrorCode::ValidationError, "unsafe dimension");
      if (!(iv.first <= iv.second)) throw Error(ErrorCode::ValidationError, "unsafe lo <= hi");
    }
  }

  /// Unsafe box over all 19 dimensions; unconstrained dimensions are infinite.
  HyperRect unsafe_box() const {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(kStateDim, -INFINITY);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(kStateDim, INFINITY);
    for (const auto& [d, iv] : unsafe) {
      lo(d) = iv.first;
      hi(d) = iv.second;
    }
    return HyperRect(lo, hi);
  }
};

struct TrajectorySample {
  double t;
  QuadState x;
  ControlInput u_cmd;
  ControlInput u_applied;
  Vec4 u_l1 = Vec4::Zero();
  Vec4 sigma_hat = Vec4::Zero();
  bool thrust_clamped = false;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  /// Rows are time steps, columns the 19 state dimensions.
  Eigen::MatrixXd states() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), kStateDim);
    for (std::size_t k = 0; k < samples.size(); ++k)
      m.row(static_cast<Eigen::Index>(k)) = samples[k].x.to_vector().transpose();
    return m;
  }
};

inline constexpr double kDivergenceRadius = 1e3;

/// Closed-loop rollout: reference -> controller (baseline or L1-augmented)
/// -> input delay -> thrust clamp -> vehicle step with the mass profile.
///
/// `seed` is reserved for stochastic extensions; the built-in scenarios are

inline Trajectory simulate(const Scenario& sc, const StateVector& x0,
                           [[maybe_unused]] std::uint64_t seed = 0) {
  const std::int64_t n = sc.steps();
  const double dt = sc.dt;
  QuadState x = QuadState::from_vector(x0);
  x.R = project_to_so3(x.R);
  if (!(x.m_actual > 0.0)) throw Error(ErrorCode::ValidationError, "initial mass > 0");
  const double m_bar = sc.mass.mean_from_initial(x.m_actual);

  ControlInput hover;
  hover.f = sc.vehicle.m0 * sc.vehicle.g;
  DelayBuffer delay(sc.tau, hover);
  L1State l1 = L1State::init(x);

  Trajectory traj;
  traj.samples.reserve(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const L1Output ctl = l1_augmented_control(x, sc.reference, t, sc.gains, sc.vehicle, sc.l1, l1, dt);
    ControlInput applied = delay.apply(ctl.u_total, t);
    const bool clamped = clamp_thrust(applied, sc.vehicle);
    traj.samples.push_back({t, x, ctl.u_total, applied, ctl.next.u_l1, ctl.next.sigma_hat, clamped});
    if (k == n) break;
    l1 = ctl.next;
    const double m_dot = mass_value(t + 0.5 * dt, m_bar, sc.mass).m_dot;
    x = step(x, applied, m_dot, sc.vehicle, dt);
    if (!(x.p.norm() <= kDivergenceRadius))
      throw Error(ErrorCode::SimulationDiverged,
                  "|p| exceeded 1e3 m at t = " + std::to_string(t + dt));
  }
  return traj;
}

/// Black-box simulator interface consumed by the reachability engine:
/// (initial state, t_f, dt) -> (steps + 1) x dim matrix of states on the grid
/// t_k = k dt.
using Simulator =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& x0, double t_f, double dt)>;

inline Simulator make_simulator(const Scenario& sc, std::uint64_t seed = 0) {
  return [sc, seed](const Eigen::VectorXd& x0, double t_f, double dt) {
    Scenario run = sc;
    run.t_f = t_f;
    run.dt = dt;
    return simulate(run, StateVector(x0), seed).states();
  };
}

}  // namespace l1v
