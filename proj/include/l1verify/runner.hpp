// l1verify - batch commands behind the CLI: simulate, verify, compare-l1, delay-sweep
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l1verify/artifacts.hpp"
#include "l1verify/reach.hpp"
#include "l1verify/scenario.hpp"
#include "l1verify/scenario_io.hpp"

namespace l1v {

/// z-axis figures of merit of a tube against the reference.
struct TubeMetrics {
  double z_halfwidth = 0.0;      // max_k max(hi_z - z_ref, z_ref - lo_z)
  double z_center_error = 0.0;   // max_k |centre_z - z_ref|
  double z_midpoint_bias = 0.0;  // max_k |(lo_z + hi_z)/2 - z_ref|
  double z_bracket_fraction = 0.0;
};

inline TubeMetrics tube_metrics(const Reachtube& tube, const ReferenceSpec& ref) {
  TubeMetrics m;
  Eigen::Index bracketed = 0;
  for (Eigen::Index k = 0; k < tube.size(); ++k) {
    const double zr = reference(tube.time(k), ref).p_d.z();
    const double lo = tube.lo(k, idx::pz), hi = tube.hi(k, idx::pz);
    m.z_halfwidth = std::max({m.z_halfwidth, hi - zr, zr - lo});
    m.z_center_error = std::max(m.z_center_error, std::abs(tube.center(k, idx::pz) - zr));
    m.z_midpoint_bias = std::max(m.z_midpoint_bias, std::abs(0.5 * (lo + hi) - zr));
    if (lo <= zr && zr <= hi) ++bracketed;
  }
  m.z_bracket_fraction = tube.size() > 0 ? static_cast<double>(bracketed) / static_cast<double>(tube.size()) : 0.0;
  return m;
}

inline double max_z_tracking_error(const Trajectory& traj, const ReferenceSpec& ref) {
  double e = 0.0;
  for (const auto& s : traj.samples) e = std::max(e, std::abs(s.x.p.z() - reference(s.t, ref).p_d.z()));
  return e;
}

inline ReachOptions reach_options(const Scenario& sc, unsigned threads) {
  ReachOptions o;
  o.epsilon = sc.epsilon;
  o.delta = sc.delta;
  o.segments = sc.segments;
  o.seed = sc.seed;
  o.samples = sc.samples;
  o.threads = threads;
  return o;
}

struct VerifyOutcome {
  ReachResult reach;
  TubeMetrics metrics;
  std::optional<Verdict> verdict;  // set when the scenario has an unsafe box
  json report;
};

/// Reachtube of a scenario plus its report (no files written).
inline VerifyOutcome verify_scenario(const Scenario& sc, unsigned threads) {
  VerifyOutcome out;
  out.reach = compute_reachtube(sc, reach_options(sc, threads));
  out.reach.tube.provenance.scenario_hash = scenario_hash(sc);
  out.metrics = tube_metrics(out.reach.tube, sc.reference);
  if (!sc.unsafe.empty()) out.verdict = check_safety(out.reach.tube, sc.unsafe_box(), out.reach.training);

  json widths = json::object();
  for (int d = 0; d < kStateDim; ++d)
    widths[state_dim_name(d)] = (out.reach.tube.hi.col(d) - out.reach.tube.lo.col(d)).maxCoeff();
  out.report = {{"schema_version", kSchemaVersion},
                {"command", "verify"},
                {"status", "ok"},
                {"scenario_hash", out.reach.tube.provenance.scenario_hash},
                {"verdict", out.verdict ? to_string(*out.verdict) : "NotChecked"},
                {"max_z_tracking_error", out.metrics.z_center_error},
                {"max_z_tube_halfwidth", out.metrics.z_halfwidth},
                {"z_midpoint_bias", out.metrics.z_midpoint_bias},
                {"z_bracket_fraction", out.metrics.z_bracket_fraction},
                {"max_tube_width", widths},
                {"provenance", provenance_json(out.reach.tube.provenance)},
                {"scenario", scenario_to_json(sc)}};
  return out;
}

inline std::string hash_comment(const std::string& hash) { return "# scenario " + hash + "\n"; }

inline std::string svg_with_hash(const std::string& svg, const std::string& hash) {
  const auto pos = svg.find('\n');
  return svg.substr(0, pos + 1) + "<desc>scenario " + hash + "</desc>\n" + svg.substr(pos + 1);
}

inline void write_timing(const std::filesystem::path& dir, double seconds) {
  write_text_file(dir / "timing.json", json{{"wall_clock_s", seconds}}.dump(2) + "\n");
}

inline void write_failed_report(const std::filesystem::path& dir, const std::string& command,
                                const Scenario& sc, const std::string& what) {
  std::filesystem::create_directories(dir);
  json r = {{"schema_version", kSchemaVersion}, {"command", command}, {"status", "failed"},
            {"error", what}, {"scenario_hash", scenario_hash(sc)}, {"scenario", scenario_to_json(sc)}};
  write_text_file(dir / "report.json", r.dump(2) + "\n");
}

/// Writes the verify artifacts of one outcome into `set` under `prefix`.
inline void write_verify_artifacts(ArtifactSet& set, const std::string& prefix, const Scenario& sc,
                                   const VerifyOutcome& v, int plot_dim) {
  const std::string& hash = v.reach.tube.provenance.scenario_hash;
  set.write(prefix + "tube.csv", hash_comment(hash) + tube_csv(v.reach.tube));
  set.write(prefix + "tube.json", tube_json(v.reach.tube).dump() + "\n");
  const std::string dim_name = state_dim_name(plot_dim);
  const std::string title = std::string(sc.l1.enabled ? "geometric + L1" : "geometric") +
                            (sc.tau > 0.0 ? ", delay " + detail::svg_label(sc.tau * 1e3) + " ms" : "");
  set.write(prefix + "tube_" + dim_name + ".svg",
            svg_with_hash(render_svg({make_panel(v.reach.tube, plot_dim, &sc.reference, title)}, dim_name), hash));
  set.write(prefix + "report.json", v.report.dump(2) + "\n");
}

struct CommandResult {
  json report;
  double wall_clock_s = 0.0;
};

namespace detail {

template <class Fn>
CommandResult timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult r;
  r.report = fn();
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

/// Single closed-loop rollout from the initial-set centre with per-dimension
/// overrides; writes trajectory.csv and report.json.
inline CommandResult run_simulate(const Scenario& sc, const std::vector<std::pair<int, double>>& x0_overrides,
                                  const std::filesystem::path& out_dir) {
  StateVector x0 = sc.x0.center();
  for (const auto& [d, v] : x0_overrides) x0(d) = v;
  const std::string hash = scenario_hash(sc);
  try {
    auto r = detail::timed([&] {
      ArtifactSet set(out_dir);
      const Trajectory traj = simulate(sc, x0, sc.seed);
      std::size_t clamped = 0;
      for (const auto& s : traj.samples) clamped += s.thrust_clamped ? 1 : 0;
      json x0j = json::array();
      for (int d = 0; d < kStateDim; ++d) x0j.push_back(x0(d));
      json report = {{"schema_version", kSchemaVersion}, {"command", "simulate"}, {"status", "ok"},
                     {"scenario_hash", hash}, {"x0", x0j}, {"rows", traj.samples.size()},
                     {"thrust_clamped_steps", clamped},
                     {"max_z_tracking_error", max_z_tracking_error(traj, sc.reference)},
                     {"scenario", scenario_to_json(sc)}};
      set.write("trajectory.csv", hash_comment(hash) + trajectory_csv(traj));
      set.write("report.json", report.dump(2) + "\n");
      set.commit();
      return report;
    });
    write_timing(out_dir, r.wall_clock_s);
    return r;
  } catch (const std::exception& e) {
    write_failed_report(out_dir, "simulate", sc, e.what());
    throw;
  }
}

inline CommandResult run_verify(const Scenario& sc, const std::filesystem::path& out_dir, int plot_dim,
                                unsigned threads) {
  try {
    auto r = detail::timed([&] {
      ArtifactSet set(out_dir);
      const VerifyOutcome v = verify_scenario(sc, threads);
      write_verify_artifacts(set, "", sc, v, plot_dim);
      set.commit();
      return v.report;
    });
    write_timing(out_dir, r.wall_clock_s);
    return r;
  } catch (const std::exception& e) {
    write_failed_report(out_dir, "verify", sc, e.what());
    throw;
  }
}

/// Baseline and L1-augmented tubes of the same scenario, side by side.
inline CommandResult run_compare_l1(const Scenario& sc, const std::filesystem::path& out_dir, int plot_dim,
                                    unsigned threads) {
  Scenario base = sc, aug = sc;
  base.l1.enabled = false;
  aug.l1.enabled = true;
  try {
    auto r = detail::timed([&] {
      ArtifactSet set(out_dir);
      const VerifyOutcome vb = verify_scenario(base, threads);
      const VerifyOutcome va = verify_scenario(aug, threads);
      write_verify_artifacts(set, "baseline/", base, vb, plot_dim);
      write_verify_artifacts(set, "l1/", aug, va, plot_dim);
      const std::string dim_name = state_dim_name(plot_dim);
      const std::string hash = scenario_hash(sc);
      set.write("compare_" + dim_name + ".svg",
                svg_with_hash(render_svg({make_panel(vb.reach.tube, plot_dim, &sc.reference, "geometric"),
                                          make_panel(va.reach.tube, plot_dim, &sc.reference, "geometric + L1")},
                                         dim_name),
                              hash));
      json report = {{"schema_version", kSchemaVersion}, {"command", "compare-l1"}, {"status", "ok"},
                     {"scenario_hash", hash},
                     {"baseline", {{"scenario_hash", scenario_hash(base)},
                                   {"max_z_tube_halfwidth", vb.metrics.z_halfwidth},
                                   {"max_z_tracking_error", vb.metrics.z_center_error},
                                   {"z_midpoint_bias", vb.metrics.z_midpoint_bias},
                                   {"verdict", vb.report["verdict"]}}},
                     {"l1", {{"scenario_hash", scenario_hash(aug)},
                             {"max_z_tube_halfwidth", va.metrics.z_halfwidth},
                             {"max_z_tracking_error", va.metrics.z_center_error},
                             {"z_midpoint_bias", va.metrics.z_midpoint_bias},
                             {"verdict", va.report["verdict"]}}},
                     {"halfwidth_ratio", va.metrics.z_halfwidth / vb.metrics.z_halfwidth},
                     {"scenario", scenario_to_json(sc)}};
      set.write("report.json", report.dump(2) + "\n");
      set.commit();
      return report;
    });
    write_timing(out_dir, r.wall_clock_s);
    return r;
  } catch (const std::exception& e) {
    write_failed_report(out_dir, "compare-l1", sc, e.what());
    throw;
  }
}

struct SweepRow {
  double tau;
  TubeMetrics metrics;
  std::string verdict;
};

inline std::vector<SweepRow> delay_sweep(const Scenario& sc, const std::vector<double>& taus, unsigned threads,
                                         std::vector<VerifyOutcome>* outcomes = nullptr) {
  std::vector<SweepRow> rows;
  for (double tau : taus) {
    Scenario s = sc;
    s.tau = tau;
    s.validate();
    VerifyOutcome v = verify_scenario(s, threads);
    rows.push_back({tau, v.metrics, v.report["verdict"].get<std::string>()});
    if (outcomes) outcomes->push_back(std::move(v));
  }
  return rows;
}

inline CommandResult run_delay_sweep(const Scenario& sc, const std::vector<double>& taus,
                                     const std::filesystem::path& out_dir, int plot_dim, unsigned threads) {
  try {
    auto r = detail::timed([&] {
      ArtifactSet set(out_dir);
      std::vector<VerifyOutcome> outcomes;
      const auto rows = delay_sweep(sc, taus, threads, &outcomes);
      const std::string hash = scenario_hash(sc);
      std::string csv = hash_comment(hash) + "tau,max_z_tube_halfwidth,max_z_tracking_error,verdict\n";
      json jrows = json::array();
      std::vector<PlotPanel> panels;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        csv += fmt_double(row.tau) + "," + fmt_double(row.metrics.z_halfwidth) + "," +
               fmt_double(row.metrics.z_center_error) + "," + row.verdict + "\n";
        jrows.push_back({{"tau", row.tau}, {"max_z_tube_halfwidth", row.metrics.z_halfwidth},
                         {"max_z_tracking_error", row.metrics.z_center_error}, {"verdict", row.verdict},
                         {"scenario_hash", outcomes[i].reach.tube.provenance.scenario_hash}});
        panels.push_back(make_panel(outcomes[i].reach.tube, plot_dim, &sc.reference,
                                    "delay " + detail::svg_label(row.tau * 1e3) + " ms"));
        char sub[32];
        std::snprintf(sub, sizeof sub, "tau_%03d_ms/", static_cast<int>(std::lround(row.tau * 1e3)));
        Scenario s = sc;
        s.tau = row.tau;
        write_verify_artifacts(set, sub, s, outcomes[i], plot_dim);
      }
      set.write("sweep.csv", csv);
      set.write("sweep_" + std::string(state_dim_name(plot_dim)) + ".svg",
                svg_with_hash(render_svg(panels, state_dim_name(plot_dim)), hash));
      json report = {{"schema_version", kSchemaVersion}, {"command", "delay-sweep"}, {"status", "ok"},
                     {"scenario_hash", hash}, {"rows", jrows}, {"scenario", scenario_to_json(sc)}};
      set.write("report.json", report.dump(2) + "\n");
      set.commit();
      return report;
    });
    write_timing(out_dir, r.wall_clock_s);
    return r;
  } catch (const std::exception& e) {
    write_failed_report(out_dir, "delay-sweep", sc, e.what());
    throw;
  }
}

}  // namespace l1v
