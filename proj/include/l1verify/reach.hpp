// l1verify - data-driven reachability over a black-box simulator
//
// Pipeline: PAC sample count -> deterministic sampling of the initial box ->
// simulation -> per-dimension piecewise-exponential discrepancy fit ->
// bloating of the centre trajectory into a tube of axis-aligned boxes.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "l1verify/error.hpp"
#include "l1verify/scenario.hpp"

namespace l1v {

/// Smallest resolvable separation (state units).
inline constexpr double kSeparationFloor = 1e-9;
/// Relative inflation absorbing rounding in the fitted multipliers.
inline constexpr double kRoundingInflation = 1e-9;

/// k = ceil(ln(1/delta) / ln(1/(1 - epsilon))).
inline int pac_sample_count(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::ValidationError, "epsilon and delta must lie in (0, 1)");
  const double k = std::log(1.0 / delta) / -std::log1p(-epsilon);
  // Guard against ln ratios that are integers up to rounding (e.g. 0.5, 0.5).
  const double rounded = std::round(k);
  if (std::abs(k - rounded) <= 1e-12 * std::max(1.0, rounded)) return std::max(1, static_cast<int>(rounded));
  return std::max(1, static_cast<int>(std::ceil(k)));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based uniform draw in [0, 1), keyed by (seed, sample index, dimension).
inline double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t dim) {
  const std::uint64_t h =
      detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ index) ^ dim);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Box centre first, then k - 1 uniform i.i.d. points.
inline std::vector<Eigen::VectorXd> sample_initial(const HyperRect& box, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::ValidationError, "sample count k >= 1");
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  out.push_back(box.center());
  const Eigen::VectorXd width = box.hi - box.lo;
  for (int i = 1; i < k; ++i) {
    Eigen::VectorXd x(box.dim());
    for (Eigen::Index d = 0; d < box.dim(); ++d) {
      x(d) = box.lo(d) + counter_uniform(seed, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(d)) * width(d);
    }
    out.push_back(std::move(x));
  }
  return out;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Results must be written to per-index slots. If several
/// calls throw, the exception of the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct DiscrepancySegment {
  std::int64_t k_start;  // grid index where the window starts
  std::int64_t k_end;    // inclusive end index
  double K;              // multiplier, >= 1
  double gamma;          // exponent, 1/s
};

/// Per-dimension piecewise-exponential sensitivity bound.
///
/// With r_i(0) the initial radius of dimension i and window j starting at t_j:
///   r_i(t) = r_i(t_j) K_ij exp(gamma_ij (t - t_j)),   t in window j
///   r_i(t_{j+1}) = r_i(t_j) K_ij exp(gamma_ij (t_{j+1} - t_j))
/// Separations are measured against the initial displacement in the
/// box-normalised infinity norm, so the initial set has unit radius and every
/// dimension (including ones with zero initial width) gets a bound.
struct DiscrepancyModel {
  double dt = 0.0;
  Eigen::VectorXd initial_radius;
  std::vector<std::vector<DiscrepancySegment>> dims;
  std::vector<bool> degenerate;  // all separations below the floor

  /// Radius of every dimension on the grid, propagated from r0.
  Eigen::MatrixXd radii(const Eigen::VectorXd& r0) const {
    const auto n_dims = static_cast<Eigen::Index>(dims.size());
    const std::int64_t last = dims.empty() ? 0 : dims.front().back().k_end;
    Eigen::MatrixXd r(last + 1, n_dims);
    for (Eigen::Index i = 0; i < n_dims; ++i) {
      double base = r0(i);
      for (const auto& seg : dims[static_cast<std::size_t>(i)]) {
        const double t_j = static_cast<double>(seg.k_start) * dt;
        const std::int64_t stop = seg.k_end == last ? seg.k_end : seg.k_end - 1;
        for (std::int64_t k = seg.k_start; k <= stop; ++k) {
          r(k, i) = base * seg.K * std::exp(seg.gamma * (static_cast<double>(k) * dt - t_j));
        }
        base *= seg.K * std::exp(seg.gamma * (static_cast<double>(seg.k_end) * dt - t_j));
      }
    }
    return r;
  }

  Eigen::MatrixXd radii() const { return radii(initial_radius); }
};

/// Window boundaries: `segments` (near-)equal windows over [0, steps].
inline std::vector<std::int64_t> segment_bounds(std::int64_t steps, int segments) {
  const std::int64_t n = std::max<std::int64_t>(1, std::min<std::int64_t>(segments, std::max<std::int64_t>(steps, 1)));
  std::vector<std::int64_t> b(static_cast<std::size_t>(n + 1));
  for (std::int64_t j = 0; j <= n; ++j) b[static_cast<std::size_t>(j)] = (j * steps) / n;
  return b;
}

/// Fits a DiscrepancyModel from a centre trajectory and its neighbours.
///
/// `half_width` is the initial-set half-width per dimension; it defines the
/// normalised distance d0 = max_j |dx_j(0)| / w_j between initial states.
/// For every dimension the worst-case ratio rho(t) = max_pairs |dx_i(t)| / d0
/// is fitted per window by least squares in log space (values below the
/// floor are clamped first), then K is raised until the bound dominates every
/// observed ratio on the window.
inline DiscrepancyModel learn_discrepancy(const Eigen::MatrixXd& center,
                                          const std::vector<Eigen::MatrixXd>& others,
                                          const Eigen::VectorXd& half_width, double dt,
                                          int segments) {
  if (others.empty()) throw Error(ErrorCode::ValidationError, "need at least one neighbour trajectory");
  const Eigen::Index n_t = center.rows(), n_d = center.cols();
  if (half_width.size() != n_d) throw Error(ErrorCode::ValidationError, "half-width dimension");
  for (const auto& o : others)
    if (o.rows() != n_t || o.cols() != n_d)
      throw Error(ErrorCode::ValidationError, "trajectories must share the time grid");

  // Worst-case normalised separation per (time, dim).
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(n_t, n_d);
  for (const auto& o : others) {
    double d0 = 0.0;
    for (Eigen::Index j = 0; j < n_d; ++j) {
      if (half_width(j) > 0.0) d0 = std::max(d0, std::abs(o(0, j) - center(0, j)) / half_width(j));
    }
    if (!(d0 > 0.0)) continue;  // identical initial state, nothing to learn
    rho = rho.cwiseMax((o - center).cwiseAbs() / d0);
  }

  DiscrepancyModel model;
  model.dt = dt;
  model.initial_radius = half_width.cwiseMax(kSeparationFloor);
  model.dims.resize(static_cast<std::size_t>(n_d));
  model.degenerate.assign(static_cast<std::size_t>(n_d), false);
  const auto bounds = segment_bounds(n_t - 1, segments);

  for (Eigen::Index i = 0; i < n_d; ++i) {
    auto& segs = model.dims[static_cast<std::size_t>(i)];
    const bool degenerate = !(rho.col(i).maxCoeff() > kSeparationFloor);
    model.degenerate[static_cast<std::size_t>(i)] = degenerate;
    double base = model.initial_radius(i);
    for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
      DiscrepancySegment seg{bounds[j], bounds[j + 1], 1.0, 0.0};
      if (!degenerate) {
        const double t_j = static_cast<double>(seg.k_start) * dt;
        // least-squares slope of log(max(rho, floor)) against t
        double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
        const double n = static_cast<double>(seg.k_end - seg.k_start + 1);
        for (std::int64_t k = seg.k_start; k <= seg.k_end; ++k) {
          const double t = static_cast<double>(k) * dt - t_j;
          const double y = std::log(std::max(rho(k, i), kSeparationFloor));
          st += t; sy += y; stt += t * t; sty += t * y;
        }
        const double var = stt - st * st / n;
        seg.gamma = var > 0.0 ? (sty - st * sy / n) / var : 0.0;
        double k_needed = 1.0;
        for (std::int64_t k = seg.k_start; k <= seg.k_end; ++k) {
          const double bound = base * std::exp(seg.gamma * (static_cast<double>(k) * dt - t_j));
          k_needed = std::max(k_needed, rho(k, i) / bound);
        }
        seg.K = k_needed * (1.0 + kRoundingInflation);
        base *= seg.K * std::exp(seg.gamma * (static_cast<double>(seg.k_end) * dt - t_j));
      }
      segs.push_back(seg);
    }
  }
  return model;
}

struct TubeProvenance {
  std::string scenario_hash;
  int samples = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// Boxes on the uniform grid t_k = k dt.
struct Reachtube {
  double dt = 0.0;
  Eigen::MatrixXd lo;  // rows: time, cols: dims
  Eigen::MatrixXd hi;
  Eigen::MatrixXd center;
  TubeProvenance provenance;

  Eigen::Index size() const { return lo.rows(); }
  double time(Eigen::Index k) const { return static_cast<double>(k) * dt; }
  HyperRect rect(Eigen::Index k) const { return HyperRect(lo.row(k).transpose(), hi.row(k).transpose()); }

  bool contains(const Eigen::MatrixXd& traj) const {
    return traj.rows() == lo.rows() && (traj.array() >= lo.array()).all() &&
           (traj.array() <= hi.array()).all();
  }
};

struct ReachOptions {
  double epsilon = 0.05;
  double delta = 0.01;
  int segments = 10;
  std::uint64_t seed = 0;
  int samples = 0;       // overrides the PAC count when > 0
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct ReachResult {
  Reachtube tube;
  DiscrepancyModel model;
  std::vector<Eigen::MatrixXd> training;  // centre trajectory first
};

/// Simulates every point on up to `threads` workers, in index order.
inline std::vector<Eigen::MatrixXd> simulate_all(const Simulator& sim,
                                                 const std::vector<Eigen::VectorXd>& x0s,
                                                 double t_f, double dt, unsigned threads) {
  std::vector<Eigen::MatrixXd> out(x0s.size());
  parallel_for(x0s.size(), threads, [&](std::size_t i) { out[i] = sim(x0s[i], t_f, dt); });
  return out;
}

/// Bloats the centre trajectory with a fitted model into a tube.
inline Reachtube bloat(const Eigen::MatrixXd& center, const DiscrepancyModel& model, double dt) {
  const Eigen::MatrixXd r = model.radii();
  Reachtube tube;
  tube.dt = dt;
  tube.center = center;
  tube.lo = center - r;
  tube.hi = center + r;
  return tube;
}

inline ReachResult compute_reachtube(const Simulator& sim, const HyperRect& x0, double t_f,
                                     double dt, const ReachOptions& opt) {
  const int k = opt.samples > 0 ? opt.samples : pac_sample_count(opt.epsilon, opt.delta);
  const auto points = sample_initial(x0, std::max(k, 2), opt.seed);
  ReachResult res;
  res.training = simulate_all(sim, points, t_f, dt, opt.threads);
  std::vector<Eigen::MatrixXd> others(res.training.begin() + 1, res.training.end());
  res.model = learn_discrepancy(res.training.front(), others, x0.half_width(), dt, opt.segments);
  res.tube = bloat(res.training.front(), res.model, dt);
  res.tube.provenance = {"", std::max(k, 2), opt.epsilon, opt.delta, opt.seed};
  for (std::size_t i = 0; i < res.training.size(); ++i) {
    if (!res.tube.contains(res.training[i]))
      throw Error(ErrorCode::ContainmentViolation,
                  "training trajectory " + std::to_string(i) + " escapes the tube");
  }
  return res;
}

/// Reachtube of a scenario's closed loop over its initial set.
inline ReachResult compute_reachtube(const Scenario& sc, const ReachOptions& opt) {
  return compute_reachtube(make_simulator(sc), sc.x0, sc.t_f, sc.dt, opt);
}

/// Counts fresh trajectories (drawn with `seed`, centre excluded) that stay
/// inside the tube at every grid point.
inline int count_contained(const Reachtube& tube, const Simulator& sim, const HyperRect& x0,
                           double t_f, int n, std::uint64_t seed, unsigned threads = 0) {
  auto points = sample_initial(x0, n + 1, seed);
  points.erase(points.begin());
  std::vector<char> inside(points.size(), 0);
  parallel_for(points.size(), threads,
               [&](std::size_t i) { inside[i] = tube.contains(sim(points[i], t_f, tube.dt)); });
  return static_cast<int>(std::count(inside.begin(), inside.end(), 1));
}

enum class Verdict { Safe, Unsafe, Unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Safe: return "Safe";
    case Verdict::Unsafe: return "Unsafe";
    case Verdict::Unknown: return "Unknown";
  }
  return "?";
}

/// Safe: no box meets `unsafe`. Unsafe: some witness state lies in `unsafe`.
/// Unknown: boxes meet `unsafe` but no witness does.
inline Verdict check_safety(const Reachtube& tube, const HyperRect& unsafe,
                            const std::vector<Eigen::MatrixXd>& witnesses) {
  if (tube.size() == 0) throw Error(ErrorCode::ValidationError, "empty tube");
  for (const auto& w : witnesses) {
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      if (unsafe.contains(w.row(k).transpose())) return Verdict::Unsafe;
    }
  }
  for (Eigen::Index k = 0; k < tube.size(); ++k) {
    if (tube.rect(k).intersects(unsafe)) return Verdict::Unknown;
  }
  return Verdict::Safe;
}

}  // namespace l1v
