// l1verify command-line front end
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l1verify/runner.hpp"

namespace {

struct CommonOptions {
  std::string scenario;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<int> samples;
  std::string dim = "pz";
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool verification) {
  cmd->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Sampling seed (overrides verify.seed)");
  if (!verification) return;
  cmd->add_option("--epsilon", o.epsilon, "PAC epsilon (overrides verify.epsilon)");
  cmd->add_option("--delta", o.delta, "PAC delta (overrides verify.delta)");
  cmd->add_option("--samples", o.samples, "Number of simulations (overrides the PAC count)");
  cmd->add_option("--dim", o.dim, "State dimension to plot (px, pz, vz, m, ...)");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
}

l1v::Scenario load(const CommonOptions& o) {
  l1v::Scenario sc = l1v::parse_scenario(o.scenario);
  if (o.seed) sc.seed = *o.seed;
  if (o.epsilon) sc.epsilon = *o.epsilon;
  if (o.delta) sc.delta = *o.delta;
  if (o.samples) sc.samples = *o.samples;
  sc.validate();
  return sc;
}

int plot_dim(const std::string& name) {
  const int d = l1v::state_dim_index(name);
  if (d < 0) throw l1v::Error(l1v::ErrorCode::ValidationError, "unknown --dim '" + name + "'");
  return d;
}

/// "pz=-0.98,m=0.8" -> [(2, -0.98), (18, 0.8)]
std::vector<std::pair<int, double>> parse_x0(const std::string& spec) {
  std::vector<std::pair<int, double>> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw l1v::Error(l1v::ErrorCode::ParseError, "--x0 entry '" + item + "' lacks '='");
    out.push_back({plot_dim(item.substr(0, eq)), std::stod(item.substr(eq + 1))});
  }
  return out;
}

std::vector<double> parse_taus(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

void print_summary(const l1v::CommandResult& r) {
  std::cout << r.report.value("command", "") << ": " << r.report.value("status", "") << " in "
            << r.wall_clock_s << " s";
  if (r.report.contains("verdict")) std::cout << ", verdict " << r.report["verdict"].get<std::string>();
  if (r.report.contains("max_z_tube_halfwidth"))
    std::cout << ", max z half-width " << r.report["max_z_tube_halfwidth"].get<double>() << " m";
  if (r.report.contains("halfwidth_ratio"))
    std::cout << ", L1/baseline half-width ratio " << r.report["halfwidth_ratio"].get<double>();
  std::cout << "\n";
  if (r.report.contains("rows") && r.report["rows"].is_array()) {
    for (const auto& row : r.report["rows"])
      std::cout << "  tau " << row["tau"].get<double>() << " s: max z half-width "
                << row["max_z_tube_halfwidth"].get<double>() << " m\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability-based verification of a quadrotor under geometric and L1 adaptive control"};
  app.require_subcommand(1);

  CommonOptions sim_o, ver_o, cmp_o, sweep_o;
  std::string x0_spec;
  std::string taus_spec = "0,0.03,0.06,0.09,0.12";

  auto* sim = app.add_subcommand("simulate", "Single closed-loop rollout to trajectory.csv");
  add_common(sim, sim_o, false);
  sim->add_option("--x0", x0_spec, "Initial-state overrides on the X0 centre, e.g. pz=-0.98,m=0.8");

  auto* ver = app.add_subcommand("verify", "Reachtube, plot and safety verdict");
  add_common(ver, ver_o, true);

  auto* cmp = app.add_subcommand("compare-l1", "Baseline vs L1-augmented reachtubes side by side");
  add_common(cmp, cmp_o, true);

  auto* sweep = app.add_subcommand("delay-sweep", "Reachtubes over a list of input delays");
  add_common(sweep, sweep_o, true);
  sweep->add_option("--taus", taus_spec, "Comma-separated delays in seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    l1v::CommandResult r;
    if (*sim) {
      r = l1v::run_simulate(load(sim_o), parse_x0(x0_spec), sim_o.out);
    } else if (*ver) {
      r = l1v::run_verify(load(ver_o), ver_o.out, plot_dim(ver_o.dim), ver_o.threads);
    } else if (*cmp) {
      r = l1v::run_compare_l1(load(cmp_o), cmp_o.out, plot_dim(cmp_o.dim), cmp_o.threads);
    } else if (*sweep) {
      r = l1v::run_delay_sweep(load(sweep_o), parse_taus(taus_spec), sweep_o.out, plot_dim(sweep_o.dim),
                               sweep_o.threads);
    }
    print_summary(r);
  } catch (const l1v::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
