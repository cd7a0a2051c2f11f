// l1verify - scenario file schema (JSON, schema_version 1)
//
// Sections: vehicle, gains, reference, uncertainty, delay, l1, verify.
// Omitted keys take the declared defaults; several defaults depend on
// other resolved values (gains, f_max, mass bounds and the L1 thrust
// saturation scale with m0; the initial set follows the reference start).
// Unknown keys are rejected.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "l1verify/error.hpp"
#include "l1verify/scenario.hpp"

namespace l1v {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void reject_unknown(const json& obj, const std::string& section,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, "key '" + section + "': expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) {
      throw Error(ErrorCode::ParseError,
                  "unknown key '" + (section.empty() ? k : section + "." + k) + "'");
    }
  }
}

inline double get_number(const json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw Error(ErrorCode::ParseError, "key '" + path + "." + key + "': expected a number");
  return v.get<double>();
}

inline Vec3 get_vec3(const json& obj, const char* key, const std::string& path, const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) return Vec3::Constant(v.get<double>());
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
    throw Error(ErrorCode::ParseError, "key '" + path + "." + key + "': expected 3 numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline std::pair<double, double> get_interval(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw Error(ErrorCode::ParseError, "key '" + path + "': expected [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline int get_dim(const std::string& name, const std::string& path) {
  const int d = state_dim_index(name);
  if (d < 0) throw Error(ErrorCode::ParseError, "unknown key '" + path + "." + name + "' (not a state dimension)");
  return d;
}

inline const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  return root.contains(key) ? root.at(key) : empty;
}

}  // namespace detail

/// Builds a Scenario from parsed JSON, applying defaults and validating.
inline Scenario scenario_from_json(const json& root) {
  using namespace detail;
  reject_unknown(root, "", {"schema_version", "vehicle", "gains", "reference", "uncertainty", "delay", "l1", "verify"});
  if (root.contains("schema_version")) {
    const json& v = root.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
      throw Error(ErrorCode::ValidationError, "schema_version == 1");
  }
  Scenario sc;

  const json& veh = section(root, "vehicle");
  reject_unknown(veh, "vehicle", {"m0", "J", "g", "f_max"});
  sc.vehicle.m0 = get_number(veh, "m0", "vehicle", sc.vehicle.m0);
  sc.vehicle.g = get_number(veh, "g", "vehicle", sc.vehicle.g);
  sc.vehicle.J = get_vec3(veh, "J", "vehicle", sc.vehicle.J.diagonal()).asDiagonal();
  sc.vehicle.f_max = get_number(veh, "f_max", "vehicle", 4.0 * sc.vehicle.m0 * sc.vehicle.g);

  const json& gains = section(root, "gains");
  reject_unknown(gains, "gains", {"Kp", "Kv", "KR", "KOmega"});
  const Gains g0 = Gains::defaults_for(sc.vehicle.m0);
  sc.gains.Kp = get_vec3(gains, "Kp", "gains", g0.Kp);
  sc.gains.Kv = get_vec3(gains, "Kv", "gains", g0.Kv);
  sc.gains.KR = get_vec3(gains, "KR", "gains", g0.KR);
  sc.gains.KOmega = get_vec3(gains, "KOmega", "gains", g0.KOmega);

  if (root.contains("reference")) {
    const json& ref = root.at("reference");
    if (ref.is_string()) {
      sc.reference.family = reference_family_from_string(ref.get<std::string>());
    } else {
      reject_unknown(ref, "reference", {"family", "p0", "radius", "a", "b", "period", "altitude", "psi"});
      if (ref.contains("family")) {
        if (!ref.at("family").is_string())
          throw Error(ErrorCode::ParseError, "key 'reference.family': expected a string");
        sc.reference.family = reference_family_from_string(ref.at("family").get<std::string>());
      }
      sc.reference.p0 = get_vec3(ref, "p0", "reference", sc.reference.p0);
      sc.reference.radius = get_number(ref, "radius", "reference", sc.reference.radius);
      sc.reference.a = get_number(ref, "a", "reference", sc.reference.a);
      sc.reference.b = get_number(ref, "b", "reference", sc.reference.b);
      sc.reference.period = get_number(ref, "period", "reference", sc.reference.period);
      sc.reference.altitude = get_number(ref, "altitude", "reference", sc.reference.altitude);
      sc.reference.psi = get_number(ref, "psi", "reference", sc.reference.psi);
    }
  }

  const json& unc = section(root, "uncertainty");
  reject_unknown(unc, "uncertainty", {"m_lo", "m_hi", "amplitude", "omega_m", "phase"});
  const MassProfile m0 = MassProfile::defaults_for(sc.vehicle.m0);
  sc.mass.m_lo = get_number(unc, "m_lo", "uncertainty", m0.m_lo);
  sc.mass.m_hi = get_number(unc, "m_hi", "uncertainty", m0.m_hi);
  sc.mass.amplitude = get_number(unc, "amplitude", "uncertainty", m0.amplitude);
  sc.mass.omega_m = get_number(unc, "omega_m", "uncertainty", m0.omega_m);
  sc.mass.phase = get_number(unc, "phase", "uncertainty", m0.phase);

  const json& del = section(root, "delay");
  reject_unknown(del, "delay", {"tau"});
  sc.tau = get_number(del, "tau", "delay", 0.0);

  const json& l1 = section(root, "l1");
  reject_unknown(l1, "l1", {"enabled", "As_v", "As_omega", "omega_c_f", "omega_c_M", "Ts", "sat_f", "sat_M"});
  const L1Params l0 = L1Params::defaults_for(sc.vehicle);
  const json& ver = section(root, "verify");
  reject_unknown(ver, "verify", {"t_f", "dt", "epsilon", "delta", "segments", "seed", "samples", "x0", "unsafe"});
  sc.t_f = get_number(ver, "t_f", "verify", sc.t_f);
  sc.dt = get_number(ver, "dt", "verify", sc.dt);

  if (l1.contains("enabled")) {
    if (!l1.at("enabled").is_boolean()) throw Error(ErrorCode::ParseError, "key 'l1.enabled': expected a boolean");
    sc.l1.enabled = l1.at("enabled").get<bool>();
  }
  sc.l1.As_v = get_vec3(l1, "As_v", "l1", l0.As_v);
  sc.l1.As_omega = get_vec3(l1, "As_omega", "l1", l0.As_omega);
  sc.l1.omega_c_f = get_number(l1, "omega_c_f", "l1", l0.omega_c_f);
  sc.l1.omega_c_M = get_number(l1, "omega_c_M", "l1", l0.omega_c_M);
  sc.l1.Ts = get_number(l1, "Ts", "l1", sc.dt);
  sc.l1.sat_f = get_number(l1, "sat_f", "l1", l0.sat_f);
  sc.l1.sat_M = get_number(l1, "sat_M", "l1", l0.sat_M);

  sc.epsilon = get_number(ver, "epsilon", "verify", sc.epsilon);
  sc.delta = get_number(ver, "delta", "verify", sc.delta);
  if (ver.contains("segments")) {
    if (!ver.at("segments").is_number_integer()) throw Error(ErrorCode::ParseError, "key 'verify.segments': expected an integer");
    sc.segments = ver.at("segments").get<int>();
  }
  if (ver.contains("seed")) {
    if (!ver.at("seed").is_number_unsigned()) throw Error(ErrorCode::ParseError, "key 'verify.seed': expected a non-negative integer");
    sc.seed = ver.at("seed").get<std::uint64_t>();
  }
  if (ver.contains("samples")) {
    if (!ver.at("samples").is_number_integer()) throw Error(ErrorCode::ParseError, "key 'verify.samples': expected an integer");
    sc.samples = ver.at("samples").get<int>();
  }

  // Validate what the initial set is derived from before building it.
  sc.reference.validate();
  sc.mass.validate();
  sc.x0 = Scenario::default_initial_set(sc.reference, sc.mass);
  if (ver.contains("x0")) {
    const json& x0 = ver.at("x0");
    if (!x0.is_object()) throw Error(ErrorCode::ParseError, "key 'verify.x0': expected an object");
    for (const auto& [name, iv] : x0.items()) {
      const int d = get_dim(name, "verify.x0");
      const auto [lo, hi] = get_interval(iv, "verify.x0." + name);
      sc.x0.lo(d) = lo;
      sc.x0.hi(d) = hi;
    }
  }
  if (ver.contains("unsafe")) {
    const json& un = ver.at("unsafe");
    if (!un.is_object()) throw Error(ErrorCode::ParseError, "key 'verify.unsafe': expected an object");
    for (const auto& [name, iv] : un.items()) {
      sc.unsafe.push_back({get_dim(name, "verify.unsafe"), get_interval(iv, "verify.unsafe." + name)});
    }
  }
  sc.validate();
  return sc;
}

/// Fully resolved scenario: every default is written out.
inline json scenario_to_json(const Scenario& sc) {
  using detail::to_json;
  json root;
  root["schema_version"] = kSchemaVersion;
  root["vehicle"] = {{"m0", sc.vehicle.m0}, {"J", to_json(sc.vehicle.J.diagonal())},
                     {"g", sc.vehicle.g}, {"f_max", sc.vehicle.f_max}};
  root["gains"] = {{"Kp", to_json(sc.gains.Kp)}, {"Kv", to_json(sc.gains.Kv)},
                   {"KR", to_json(sc.gains.KR)}, {"KOmega", to_json(sc.gains.KOmega)}};
  root["reference"] = {{"family", to_string(sc.reference.family)}, {"p0", to_json(sc.reference.p0)},
                       {"radius", sc.reference.radius}, {"a", sc.reference.a}, {"b", sc.reference.b},
                       {"period", sc.reference.period}, {"altitude", sc.reference.altitude},
                       {"psi", sc.reference.psi}};
  root["uncertainty"] = {{"m_lo", sc.mass.m_lo}, {"m_hi", sc.mass.m_hi},
                         {"amplitude", sc.mass.amplitude}, {"omega_m", sc.mass.omega_m},
                         {"phase", sc.mass.phase}};
  root["delay"] = {{"tau", sc.tau}};
  root["l1"] = {{"enabled", sc.l1.enabled}, {"As_v", to_json(sc.l1.As_v)},
                {"As_omega", to_json(sc.l1.As_omega)}, {"omega_c_f", sc.l1.omega_c_f},
                {"omega_c_M", sc.l1.omega_c_M}, {"Ts", sc.l1.Ts}, {"sat_f", sc.l1.sat_f},
                {"sat_M", sc.l1.sat_M}};
  json x0 = json::object();
  for (int d = 0; d < kStateDim; ++d) x0[state_dim_name(d)] = json::array({sc.x0.lo(d), sc.x0.hi(d)});
  json unsafe = json::object();
  for (const auto& [d, iv] : sc.unsafe) unsafe[state_dim_name(d)] = json::array({iv.first, iv.second});
  root["verify"] = {{"t_f", sc.t_f}, {"dt", sc.dt}, {"epsilon", sc.epsilon}, {"delta", sc.delta},
                    {"segments", sc.segments}, {"seed", sc.seed}, {"samples", sc.samples},
                    {"x0", x0}, {"unsafe", unsafe}};
  return root;
}

/// Line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return scenario_from_json(root);
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

/// Canonical text of a resolved scenario (sorted keys, round-trip doubles).
inline std::string canonical_scenario_text(const Scenario& sc) { return scenario_to_json(sc).dump(); }

/// FNV-1a 64 of the canonical text, as 16 hex digits.
inline std::string scenario_hash(const Scenario& sc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_scenario_text(sc)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace l1v
