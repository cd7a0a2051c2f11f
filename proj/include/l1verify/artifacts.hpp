// l1verify - artifact writers: trajectory / tube CSV, tube JSON, SVG plots
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "l1verify/reach.hpp"
#include "l1verify/scenario.hpp"
#include "l1verify/scenario_io.hpp"

namespace l1v {

/// Shortest-safe round-trip formatting of a double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "t";
  for (int d = 0; d < kStateDim; ++d) s += std::string(",") + state_dim_name(d);
  s += ",f_cmd,Mx_cmd,My_cmd,Mz_cmd,f_applied,Mx_applied,My_applied,Mz_applied,"
       "u_l1_f,u_l1_Mx,u_l1_My,u_l1_Mz\n";
  for (const auto& smp : traj.samples) {
    s += fmt_double(smp.t);
    const StateVector x = smp.x.to_vector();
    for (int d = 0; d < kStateDim; ++d) s += "," + fmt_double(x(d));
    for (const ControlInput* u : {&smp.u_cmd, &smp.u_applied}) {
      s += "," + fmt_double(u->f);
      for (int i = 0; i < 3; ++i) s += "," + fmt_double(u->M(i));
    }
    for (int i = 0; i < 4; ++i) s += "," + fmt_double(smp.u_l1(i));
    s += "\n";
  }
  return s;
}

inline std::string tube_csv(const Reachtube& tube) {
  std::string s = "t";
  const auto n_d = tube.lo.cols();
  for (Eigen::Index d = 0; d < n_d; ++d) {
    const std::string name = n_d == kStateDim ? state_dim_name(static_cast<int>(d)) : "x" + std::to_string(d);
    s += ",lo_" + name + ",hi_" + name;
  }
  s += "\n";
  for (Eigen::Index k = 0; k < tube.size(); ++k) {
    s += fmt_double(tube.time(k));
    for (Eigen::Index d = 0; d < n_d; ++d) s += "," + fmt_double(tube.lo(k, d)) + "," + fmt_double(tube.hi(k, d));
    s += "\n";
  }
  return s;
}

inline json provenance_json(const TubeProvenance& p) {
  return {{"scenario_hash", p.scenario_hash}, {"samples", p.samples}, {"epsilon", p.epsilon},
          {"delta", p.delta}, {"seed", p.seed}};
}

inline json tube_json(const Reachtube& tube) {
  json dims = json::array();
  for (Eigen::Index d = 0; d < tube.lo.cols(); ++d) dims.push_back(state_dim_name(static_cast<int>(d)));
  json lo = json::array(), hi = json::array();
  for (Eigen::Index k = 0; k < tube.size(); ++k) {
    json l = json::array(), h = json::array();
    for (Eigen::Index d = 0; d < tube.lo.cols(); ++d) {
      l.push_back(tube.lo(k, d));
      h.push_back(tube.hi(k, d));
    }
    lo.push_back(std::move(l));
    hi.push_back(std::move(h));
  }
  return {{"provenance", provenance_json(tube.provenance)}, {"dt", tube.dt}, {"steps", tube.size() - 1},
          {"dims", dims}, {"lo", lo}, {"hi", hi}};
}

/// One panel of an SVG plot: tube envelope of one dimension plus an optional
/// reference curve.
struct PlotPanel {
  std::string title;
  std::vector<double> t;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> reference;  // empty: no reference curve
};

inline PlotPanel make_panel(const Reachtube& tube, int dim, const ReferenceSpec* ref, std::string title) {
  PlotPanel p;
  p.title = std::move(title);
  for (Eigen::Index k = 0; k < tube.size(); ++k) {
    p.t.push_back(tube.time(k));
    p.lo.push_back(tube.lo(k, dim));
    p.hi.push_back(tube.hi(k, dim));
    if (ref && dim <= idx::pz) p.reference.push_back(reference(tube.time(k), *ref).p_d(dim));
  }
  return p;
}

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Buckets samples so a panel carries at most ~max_points vertices while
/// keeping each bucket's extreme envelope.
inline PlotPanel decimate(const PlotPanel& p, std::size_t max_points) {
  if (p.t.size() <= max_points) return p;
  const std::size_t stride = (p.t.size() + max_points - 1) / max_points;
  PlotPanel out{p.title, {}, {}, {}, {}};
  for (std::size_t i = 0; i < p.t.size(); i += stride) {
    const std::size_t end = std::min(p.t.size(), i + stride);
    out.t.push_back(p.t[i]);
    out.lo.push_back(*std::min_element(p.lo.begin() + static_cast<std::ptrdiff_t>(i), p.lo.begin() + static_cast<std::ptrdiff_t>(end)));
    out.hi.push_back(*std::max_element(p.hi.begin() + static_cast<std::ptrdiff_t>(i), p.hi.begin() + static_cast<std::ptrdiff_t>(end)));
    if (!p.reference.empty()) out.reference.push_back(p.reference[i]);
  }
  out.t.back() = p.t.back();
  return out;
}

}  // namespace detail

/// Side-by-side panels sharing one vertical scale. Output depends only on the
/// panel data.
inline std::string render_svg(const std::vector<PlotPanel>& panels_in, const std::string& ylabel) {
  using detail::svg_num;
  std::vector<PlotPanel> panels;
  for (const auto& p : panels_in) panels.push_back(detail::decimate(p, 800));

  double y_min = INFINITY, y_max = -INFINITY, t_max = 0.0;
  for (const auto& p : panels) {
    for (double v : p.lo) y_min = std::min(y_min, v);
    for (double v : p.hi) y_max = std::max(y_max, v);
    for (double v : p.reference) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
    if (!p.t.empty()) t_max = std::max(t_max, p.t.back());
  }
  if (!std::isfinite(y_min) || !std::isfinite(y_max)) y_min = y_max = 0.0;
  if (y_max - y_min < 1e-9) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;
  if (t_max <= 0.0) t_max = 1.0;

  const double pw = 420, ph = 300, ml = 70, mr = 20, mt = 40, mb = 50;
  const double width = static_cast<double>(panels.size()) * (ml + pw + mr);
  const double height = mt + ph + mb;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
                  "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
                  svg_num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& p = panels[pi];
    const double x0 = static_cast<double>(pi) * (ml + pw + mr) + ml;
    auto X = [&](double t) { return x0 + pw * t / t_max; };
    // z points down in the vehicle frame; plots keep the numeric axis upward.
    auto Y = [&](double v) { return mt + ph * (y_max - v) / (y_max - y_min); };

    s += "<g>\n<text x=\"" + svg_num(x0 + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(p.title) + "</text>\n";
    s += "<rect x=\"" + svg_num(x0) + "\" y=\"" + svg_num(mt) + "\" width=\"" + svg_num(pw) +
         "\" height=\"" + svg_num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double tv = t_max * i / 5.0, yv = y_min + (y_max - y_min) * i / 5.0;
      s += "<line x1=\"" + svg_num(X(tv)) + "\" y1=\"" + svg_num(mt + ph) + "\" x2=\"" + svg_num(X(tv)) +
           "\" y2=\"" + svg_num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + svg_num(X(tv)) + "\" y=\"" + svg_num(mt + ph + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + detail::svg_label(tv) + "</text>\n";
      s += "<line x1=\"" + svg_num(x0 - 5) + "\" y1=\"" + svg_num(Y(yv)) + "\" x2=\"" + svg_num(x0) +
           "\" y2=\"" + svg_num(Y(yv)) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + svg_num(x0 - 8) + "\" y=\"" + svg_num(Y(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + detail::svg_label(yv) + "</text>\n";
    }
    s += "<text x=\"" + svg_num(x0 + pw / 2) + "\" y=\"" + svg_num(height - 8) +
         "\" text-anchor=\"middle\" font-size=\"12\">t [s]</text>\n";
    s += "<text x=\"" + svg_num(x0 - 55) + "\" y=\"" + svg_num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + svg_num(x0 - 55) + " " +
         svg_num(mt + ph / 2) + ")\">" + detail::xml_escape(ylabel) + "</text>\n";

    std::string poly;
    for (std::size_t i = 0; i < p.t.size(); ++i) poly += svg_num(X(p.t[i])) + "," + svg_num(Y(p.hi[i])) + " ";
    for (std::size_t i = p.t.size(); i-- > 0;) poly += svg_num(X(p.t[i])) + "," + svg_num(Y(p.lo[i])) + " ";
    s += "<polygon points=\"" + poly + "\" fill=\"#7fa7d9\" fill-opacity=\"0.6\" stroke=\"#1f4e8c\" stroke-width=\"1\"/>\n";
    if (!p.reference.empty()) {
      std::string line;
      for (std::size_t i = 0; i < p.t.size(); ++i) line += svg_num(X(p.t[i])) + "," + svg_num(Y(p.reference[i])) + " ";
      s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6,3\"/>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Files written by one command; removed again unless commit() is called.
class ArtifactSet {
 public:
  explicit ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir_.string() + "'");
  }
  ArtifactSet(const ArtifactSet&) = delete;
  ArtifactSet& operator=(const ArtifactSet&) = delete;
  ~ArtifactSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
  }

  std::filesystem::path write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::filesystem::create_directories(path.parent_path());
    written_.push_back(path);
    write_text_file(path, text);
    return path;
  }

  void commit() { committed_ = true; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool committed_ = false;
};

}  // namespace l1v
