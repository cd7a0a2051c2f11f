#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "l1verify/l1ac.hpp"
#include "l1verify/scenario.hpp"

using namespace l1v;

namespace {

Scenario hover_scenario(bool l1_on) {
  Scenario sc = Scenario::defaults();
  sc.l1 = L1Params::defaults_for(sc.vehicle);
  sc.l1.enabled = l1_on;
  sc.mass.amplitude = 0.0;
  return sc;
}

StateVector hover_x0(const Scenario& sc, double m) {
  StateVector x0 = sc.x0.center();
  x0(idx::mass) = m;
  return x0;
}

}  // namespace

TEST(PwcGain, ScalarValue) {
  // Phi = (e^{-0.01} - 1) / -10; estimate for an error of 0.01
  const double phi = (std::exp(-0.01) - 1.0) / -10.0;
  EXPECT_NEAR(phi, 9.95017e-4, 1e-9);
  EXPECT_NEAR(pwc_gain(-10.0, 1e-3) * 0.01, -9.950083333, 1e-9);
  EXPECT_NEAR(pwc_gain(-10.0, 1e-3) * 0.01, -9.9502, 1e-4 * 9.9502 + 5e-5);
  EXPECT_NEAR(pwc_gain(-10.0, 1e-3), -std::exp(-0.01) / phi, 1e-9);
  EXPECT_LT(pwc_gain(-10.0, 1e-3), 0.0);
}

TEST(Adaptation, LinearInPredictionError) {
  VehicleParams vp;
  const L1Params l1p = L1Params::defaults_for(vp);
  QuadState x;
  x.R = rot_x(0.3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a(n(rng), n(rng), n(rng)), b(n(rng), n(rng), n(rng));
    const Vec3 c(n(rng), n(rng), n(rng)), d(n(rng), n(rng), n(rng));
    const double s = n(rng);
    const Vec4 lhs = adaptation_update(a + s * b, c + s * d, x, vp, l1p);
    const Vec4 rhs = adaptation_update(a, c, x, vp, l1p) + s * adaptation_update(b, d, x, vp, l1p);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_EQ(adaptation_update(Vec3::Zero(), Vec3::Zero(), x, vp, l1p), Vec4::Zero());
}

TEST(Adaptation, ThrustChannelSign) {
  // A predictor lagging below the real descent (v_hat_z < v_z, i.e. v_tilde_z < 0)
  // means the vehicle is heavier than modelled: thrust estimate becomes negative.
  VehicleParams vp;
  const L1Params l1p = L1Params::defaults_for(vp);
  QuadState x;
  const Vec4 s = adaptation_update(Vec3(0, 0, -0.01), Vec3::Zero(), x, vp, l1p);
  EXPECT_NEAR(s(0), -vp.m0 * pwc_gain(-10.0, 1e-3) * -0.01, 1e-15);
  EXPECT_LT(s(0), 0.0);
}

TEST(LowPass, SingleStepValue) {
  L1Params l1p;
  l1p.omega_c_f = 50.0;
  const Vec4 u = lpf_step(Vec4::Zero(), Vec4(1, 1, 1, 1), l1p, 1e-3);
  EXPECT_NEAR(u(0), -(1.0 - std::exp(-0.05)), 1e-15);
  EXPECT_NEAR(u(0), -0.048771, 1e-6);
  EXPECT_NEAR(u(1), -(1.0 - std::exp(-0.08)), 1e-15);
}

TEST(LowPass, ConvergesWithinFiveTimeConstants) {
  L1Params l1p;
  const Vec4 sigma(2.0, -0.3, 0.1, 0.05);
  Vec4 u = Vec4::Zero();
  const int n = static_cast<int>(std::ceil(5.0 / l1p.omega_c_f / 1e-3));
  for (int k = 0; k < n; ++k) u = lpf_step(u, sigma, l1p, 1e-3);
  for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(u(i) + sigma(i)), 0.01 * std::abs(sigma(i)) + 1e-15);
}

TEST(LowPass, OutputStaysInConvexHull) {
  L1Params l1p;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> un(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Vec4 u(un(rng), un(rng), un(rng), un(rng)), s(un(rng), un(rng), un(rng), un(rng));
    const Vec4 out = lpf_step(u, s, l1p, 1e-3 * (1 + i % 7));
    for (int j = 0; j < 4; ++j) {
      EXPECT_LE(out(j), std::max(u(j), -s(j)) + 1e-15);
      EXPECT_GE(out(j), std::min(u(j), -s(j)) - 1e-15);
    }
  }
}

TEST(Saturation, ClampsEachChannel) {
  L1Params l1p;
  const Vec4 s = saturate_l1(Vec4(100, -100, 0.1, 3), l1p);
  EXPECT_EQ(s(0), l1p.sat_f);
  EXPECT_EQ(s(1), -l1p.sat_M);
  EXPECT_EQ(s(2), 0.1);
  EXPECT_EQ(s(3), l1p.sat_M);
}

TEST(L1Control, DisabledReturnsBaselineBitExact) {
  Scenario sc = hover_scenario(false);
  QuadState x = QuadState::from_vector(hover_x0(sc, 0.9));
  x.R = rot_x(0.05);
  x.v = Vec3(0.1, 0, 0.2);
  const L1State l1 = L1State::init(x);
  for (double t : {0.0, 0.5, 2.0}) {
    const auto out = l1_augmented_control(x, sc.reference, t, sc.gains, sc.vehicle, sc.l1, l1, sc.dt);
    const auto base = geometric_control(x, sc.reference, t, sc.gains, sc.vehicle);
    EXPECT_EQ(out.u_total, base);
  }
  // Whole trajectories agree bit for bit with the L1 block switched off.
  const Trajectory a = simulate(sc, hover_x0(sc, 0.9));
  for (const auto& s : a.samples) {
    EXPECT_EQ(s.u_l1, Vec4::Zero());
    const auto base = geometric_control(s.x, sc.reference, s.t, sc.gains, sc.vehicle);
    ASSERT_EQ(s.u_cmd, base);
  }
}

TEST(L1Control, NoUncertaintyMeansNoCompensation) {
  Scenario sc = hover_scenario(true);
  const Trajectory tr = simulate(sc, hover_x0(sc, sc.vehicle.m0));
  double worst = 0.0;
  for (const auto& s : tr.samples) worst = std::max(worst, s.u_l1.cwiseAbs().maxCoeff());
  EXPECT_LE(worst, 1e-3 * sc.vehicle.m0 * sc.vehicle.g);
}

TEST(L1Control, CompensatesHeavierVehicle) {
  Scenario sc = hover_scenario(true);
  sc.t_f = 3.0;
  const double m = 1.2 * sc.vehicle.m0;
  const Trajectory tr = simulate(sc, hover_x0(sc, m));
  const double expected = 0.2 * sc.vehicle.m0 * sc.vehicle.g;
  for (const auto& s : tr.samples) {
    if (s.t < 2.0) continue;
    EXPECT_NEAR(s.u_l1(0), expected, 0.05 * expected) << "t = " << s.t;
    if (!(std::abs(s.u_l1(0) - expected) <= 0.05 * expected)) break;
  }
}

TEST(L1Control, PredictorTracksVelocity) {
  Scenario sc = hover_scenario(true);
  sc.mass.amplitude = 0.1;
  const StateVector x0 = hover_x0(sc, 0.85);
  QuadState x = QuadState::from_vector(x0);
  L1State l1 = L1State::init(x);
  const double m_bar = sc.mass.mean_from_initial(x.m_actual);
  double worst = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double t = k * sc.dt;
    const auto out = l1_augmented_control(x, sc.reference, t, sc.gains, sc.vehicle, sc.l1, l1, sc.dt);
    l1 = out.next;
    ControlInput u = out.u_total;
    clamp_thrust(u, sc.vehicle);
    x = step(x, u, mass_value(t + 0.5 * sc.dt, m_bar, sc.mass).m_dot, sc.vehicle, sc.dt);
    worst = std::max(worst, (l1.v_hat - x.v).norm());
  }
  EXPECT_LT(worst, 0.05);
}

TEST(L1Control, AdaptationStrideFromTs) {
  L1Params l1p;
  l1p.Ts = 5e-3;
  EXPECT_EQ(adaptation_stride(l1p, 1e-3), 5);
  l1p.Ts = 1e-4;
  EXPECT_EQ(adaptation_stride(l1p, 1e-3), 1);
}

TEST(L1Params, Validation) {
  L1Params p;
  EXPECT_NO_THROW(p.validate());
  p.As_v.x() = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = L1Params{};
  p.omega_c_M = -1.0;
  EXPECT_THROW(p.validate(), Error);
}
