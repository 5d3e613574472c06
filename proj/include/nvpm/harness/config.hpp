#pragma once

// Run configuration: JSON with unit-suffixed keys.
//
//   *_MHz_x2pi, *_kHz_x2pi, *_Hz_x2pi   angular frequency given as f in (2π)×unit
//   *_ms, *_us, *_ns                    time
//   B_T                                 field in tesla
//
// Nucleus indices in files are 1-based.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvpm/control.hpp"
#include "nvpm/dynamics.hpp"
#include "nvpm/errors.hpp"
#include "nvpm/stochastic.hpp"
#include "nvpm/sysmodel.hpp"

namespace nvpm::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace units {
inline constexpr double kHz = kTwoPi;
inline constexpr double kKHz = kTwoPi * 1e3;
inline constexpr double kMHz = kTwoPi * 1e6;
inline constexpr double kGHz = kTwoPi * 1e9;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;
inline constexpr double nm = 1e-9;
}  // namespace units

enum class ScanCenter { Explicit, Nucleus, Cluster };

struct ScanRange {
  int points = 201;
  ScanCenter center = ScanCenter::Explicit;
  double start = 0.0;  // rad/s
  double stop = 0.0;
  std::size_t nucleus = 0;  // 0-based
  double span_fwhm = 4.0;
};

struct NoiseConfig {
  NoiseSpec spec;
  /// Ensemble evaluated on every stride-th point and the point nearest each
  /// predicted resonance.
  int stride = 1;
};

struct OverlayConfig {
  bool analytic = true;
  std::optional<std::size_t> harmonic_nucleus;  // 0-based
};

struct CompareConfig {
  enum class Kind { Family, HHEqualSignal, SingleSpins } kind = Kind::Family;
  std::string field;            // family: "t_f_ms" or "p_percent"
  std::vector<double> values;   // family values
  std::size_t nucleus = 0;      // HH comparison target, 0-based
};

struct ScanConfig {
  std::string name = "scan";
  SystemModel system;
  DriveScheme drive = PhaseModulated{};
  ScanRange scan;
  double t_f = 0.0;
  TimeSnapping snapping = TimeSnapping::NearestPeriod;
  double hh_chunk = 100e-9;
  std::optional<NoiseConfig> noise;
  OverlayConfig overlay;
  std::optional<CompareConfig> compare;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  /// The effective configuration document this was parsed from.
  json source;
};

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  return j.at(key);
}

inline double number(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

inline std::int64_t integer(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::int64_t integer_or(const json& j, const std::string& key, const std::string& path, std::int64_t fallback) {
  return j.contains(key) ? integer(j, key, path) : fallback;
}

inline std::string text_or(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

inline Vec3 vec3(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array() || v.size() != 3) throw ConfigError(path + "." + key, "expected an array of 3 numbers");
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    if (!v[static_cast<std::size_t>(k)].is_number()) throw ConfigError(path + "." + key, "expected numbers");
    out(k) = v[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

inline std::size_t nucleus_index(const json& j, const std::string& key, const std::string& path, std::size_t count) {
  const std::int64_t k = integer(j, key, path);
  if (k < 1 || static_cast<std::size_t>(k) > count)
    throw ConfigError(path + "." + key, "nucleus index out of range (1-based)");
  return static_cast<std::size_t>(k - 1);
}

inline SystemModel parse_system(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  SystemModel s;
  s.nv.b_z = number(j, "B_T", path);
  s.nv.zero_field_splitting = number_or(j, "D_GHz_x2pi", path, 2.87) * units::kGHz;
  s.nv.gamma_e = number_or(j, "gamma_e_GHz_per_T_x2pi", path, -28.024) * units::kGHz;
  if (!(s.nv.b_z >= 0.0)) throw ConfigError(path + ".B_T", "must be >= 0");
  if (!(s.nv.zero_field_splitting > 0.0)) throw ConfigError(path + ".D_GHz_x2pi", "must be > 0");

  const std::string spin = text_or(j, "spin_convention", path, "half");
  if (spin == "half") s.spin = SpinConvention::Half;
  else if (spin == "pauli") s.spin = SpinConvention::Pauli;
  else throw ConfigError(path + ".spin_convention", "expected \"half\" or \"pauli\"");

  const std::string form = text_or(j, "internuclear", path, "secular");
  if (form == "secular") s.internuclear = InternuclearForm::Secular;
  else if (form == "zz") s.internuclear = InternuclearForm::ZZ;
  else throw ConfigError(path + ".internuclear", "expected \"secular\" or \"zz\"");

  const std::string dipole = text_or(j, "dipole_convention", path, "standard");
  DipoleConvention conv = DipoleConvention::Standard;
  if (dipole == "as_printed") conv = DipoleConvention::AsPrinted;
  else if (dipole != "standard") throw ConfigError(path + ".dipole_convention", "expected \"standard\" or \"as_printed\"");

  const json& nuclei = require(j, "nuclei", path);
  if (!nuclei.is_array()) throw ConfigError(path + ".nuclei", "expected an array");
  if (nuclei.size() > 8) throw ConfigError(path + ".nuclei", "at most 8 nuclei are supported");
  for (std::size_t k = 0; k < nuclei.size(); ++k) {
    const std::string np = path + ".nuclei[" + std::to_string(k) + "]";
    const json& n = nuclei[k];
    if (!n.is_object()) throw ConfigError(np, "expected an object");
    Nucleus nuc;
    nuc.gamma = number_or(n, "gamma_MHz_per_T_x2pi", np, 10.705) * units::kMHz;
    const bool has_a = n.contains("A_kHz_x2pi");
    const bool has_r = n.contains("position_nm");
    if (has_r) nuc.position = vec3(n, "position_nm", np) * units::nm;
    if (has_a) {
      nuc.hyperfine = vec3(n, "A_kHz_x2pi", np) * units::kKHz;
    } else if (has_r) {
      if (!(nuc.position->norm() > 0.0)) throw ConfigError(np + ".position_nm", "must be non-zero");
      nuc.hyperfine = hyperfine_from_position(*nuc.position, s.nv.gamma_e, nuc.gamma, conv);
    } else {
      throw ConfigError(np, "needs A_kHz_x2pi or position_nm");
    }
    s.nuclei.push_back(nuc);
  }

  const auto n = static_cast<Eigen::Index>(s.nuclei.size());
  if (j.contains("couplings_Hz_x2pi")) {
    const json& g = j.at("couplings_Hz_x2pi");
    const std::string gp = path + ".couplings_Hz_x2pi";
    if (!g.is_array() || static_cast<Eigen::Index>(g.size()) != n) throw ConfigError(gp, "expected an N x N array");
    s.couplings = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const json& row = g[static_cast<std::size_t>(a)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(gp, "expected an N x N array");
      for (Eigen::Index b = 0; b < n; ++b) {
        if (!row[static_cast<std::size_t>(b)].is_number()) throw ConfigError(gp, "expected numbers");
        s.couplings(a, b) = row[static_cast<std::size_t>(b)].get<double>() * units::kHz;
      }
    }
  } else if (j.value("couplings_from_positions", false)) {
    s.couplings = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a + 1; b < n; ++b) {
        const auto& na = s.nuclei[static_cast<std::size_t>(a)];
        const auto& nb = s.nuclei[static_cast<std::size_t>(b)];
        if (!na.position || !nb.position)
          throw ConfigError(path + ".couplings_from_positions", "every nucleus needs position_nm");
        s.couplings(a, b) = s.couplings(b, a) = internuclear_g(*na.position, *nb.position, na.gamma, conv);
      }
  }
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

inline DriveScheme parse_drive(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string scheme = text_or(j, "scheme", path, "phase");
  DriveScheme d;
  if (scheme == "constant") {
    // Ω̄₀ is the scan coordinate; a fixed value is only needed for energy runs.
    d = ConstantHH{number_or(j, "Omega_MHz_x2pi", path, 0.0) * units::kMHz};
  } else if (scheme == "phase") {
    PhaseModulated p;
    p.omega0 = number(j, "Omega0_MHz_x2pi", path) * units::kMHz;
    p.omega1 = number(j, "Omega1_MHz_x2pi", path) * units::kMHz;
    p.nu = number_or(j, "nu_MHz_x2pi", path, 1.0) * units::kMHz;
    p.t_flip = number_or(j, "t_flip_ns", path, 5.0) * units::ns;
    p.flip_steps = static_cast<int>(integer_or(j, "flip_steps", path, 20));
    d = p;
  } else if (scheme == "amplitude") {
    AmplitudeModulated a;
    a.omega0 = number(j, "Omega0_MHz_x2pi", path) * units::kMHz;
    a.omega1 = number(j, "Omega1_MHz_x2pi", path) * units::kMHz;
    a.nu = number_or(j, "nu_MHz_x2pi", path, 1.0) * units::kMHz;
    a.samples_per_period = static_cast<int>(integer_or(j, "samples_per_period", path, 256));
    d = a;
  } else {
    throw ConfigError(path + ".scheme", "expected \"phase\", \"amplitude\" or \"constant\"");
  }
  try {
    validate(d);
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  }
  return d;
}

}  // namespace detail

/// Parses a run configuration. A `.meta.json` document written by emit is
/// accepted too; its embedded "config" is used.
inline ScanConfig parse_config(const json& doc) {
  const json& j = (doc.is_object() && doc.contains("config") && doc.contains("columns")) ? doc.at("config") : doc;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  const std::string root = "config";
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
    throw ConfigError(root + ".schema_version", "unsupported schema version");

  ScanConfig c;
  c.source = j;
  c.name = detail::text_or(j, "name", root, "scan");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError(root + ".name", "must be a non-empty file stem");
  c.system = detail::parse_system(detail::require(j, "system", root), root + ".system");
  c.drive = detail::parse_drive(detail::require(j, "drive", root), root + ".drive");

  const bool constant = std::holds_alternative<ConstantHH>(c.drive);
  const int t_keys = int(j.contains("t_f_ms")) + int(j.contains("t_f_us")) + int(j.contains("t_f_s"));
  if (t_keys != 1) throw ConfigError(root + ".t_f_ms", "give exactly one of t_f_ms, t_f_us or t_f_s");
  if (j.contains("t_f_ms")) c.t_f = detail::number(j, "t_f_ms", root) * units::ms;
  else if (j.contains("t_f_us")) c.t_f = detail::number(j, "t_f_us", root) * units::us;
  else c.t_f = detail::number(j, "t_f_s", root);
  if (!(c.t_f > 0.0)) throw ConfigError(root + ".t_f_ms", "must be > 0");

  const std::string snap = detail::text_or(j, "snapping", root, "nearest_period");
  if (snap == "nearest_period") c.snapping = TimeSnapping::NearestPeriod;
  else if (snap == "exact") c.snapping = TimeSnapping::Exact;
  else throw ConfigError(root + ".snapping", "expected \"nearest_period\" or \"exact\"");
  c.hh_chunk = detail::number_or(j, "hh_chunk_ns", root, 100.0) * units::ns;
  if (!(c.hh_chunk > 0.0)) throw ConfigError(root + ".hh_chunk_ns", "must be > 0");

  const json& scan = detail::require(j, "scan", root);
  const std::string sp = root + ".scan";
  c.scan.points = static_cast<int>(detail::integer(scan, "points", sp));
  if (c.scan.points < 2) throw ConfigError(sp + ".points", "need at least 2 points");
  const std::string center = detail::text_or(scan, "center", sp, "explicit");
  const std::string unit_key = constant ? "Omega" : "nu";
  if (center == "explicit") {
    c.scan.center = ScanCenter::Explicit;
    if (scan.contains("start_rad_s")) {
      c.scan.start = detail::number(scan, "start_rad_s", sp);
      c.scan.stop = detail::number(scan, "stop_rad_s", sp);
    } else {
      c.scan.start = detail::number(scan, unit_key + "_start_MHz_x2pi", sp) * units::kMHz;
      c.scan.stop = detail::number(scan, unit_key + "_stop_MHz_x2pi", sp) * units::kMHz;
    }
    if (!(c.scan.start > 0.0 && c.scan.stop > c.scan.start))
      throw ConfigError(sp, "range must be positive and increasing");
  } else if (center == "nucleus") {
    c.scan.center = ScanCenter::Nucleus;
    c.scan.nucleus = detail::nucleus_index(scan, "nucleus", sp, c.system.size());
  } else if (center == "cluster") {
    c.scan.center = ScanCenter::Cluster;
    if (c.system.nuclei.empty()) throw ConfigError(sp + ".center", "cluster centring needs nuclei");
  } else {
    throw ConfigError(sp + ".center", "expected \"explicit\", \"nucleus\" or \"cluster\"");
  }
  c.scan.span_fwhm = detail::number_or(scan, "span_fwhm", sp, 4.0);
  if (!(c.scan.span_fwhm > 0.0)) throw ConfigError(sp + ".span_fwhm", "must be > 0");

  if (j.contains("noise") && !j.at("noise").is_null()) {
    const json& n = j.at("noise");
    const std::string np = root + ".noise";
    NoiseConfig nc;
    nc.spec.tau = detail::number(n, "tau_ms", np) * units::ms;
    nc.spec.p = detail::number(n, "p_percent", np) / 100.0;
    nc.spec.runs = static_cast<int>(detail::integer(n, "runs", np));
    nc.stride = static_cast<int>(detail::integer_or(n, "stride", np, 1));
    if (nc.stride < 1) throw ConfigError(np + ".stride", "must be >= 1");
    try {
      nc.spec.validate();
    } catch (const ContractError& e) {
      throw ConfigError(np, e.what());
    }
    c.noise = nc;
  }

  if (j.contains("overlay")) {
    const json& o = j.at("overlay");
    c.overlay.analytic = o.value("analytic", true);
    if (o.contains("harmonic_nucleus"))
      c.overlay.harmonic_nucleus = detail::nucleus_index(o, "harmonic_nucleus", root + ".overlay", c.system.size());
  }

  if (j.contains("compare")) {
    const json& m = j.at("compare");
    const std::string mp = root + ".compare";
    CompareConfig cc;
    const std::string kind = detail::text_or(m, "kind", mp, "");
    if (kind == "family") {
      cc.kind = CompareConfig::Kind::Family;
      cc.field = detail::text_or(m, "field", mp, "");
      if (cc.field != "t_f_ms" && cc.field != "t_f_us" && cc.field != "p_percent")
        throw ConfigError(mp + ".field", "expected \"t_f_ms\", \"t_f_us\" or \"p_percent\"");
      const json& v = detail::require(m, "values", mp);
      if (!v.is_array() || v.empty()) throw ConfigError(mp + ".values", "expected a non-empty array");
      for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(mp + ".values", "expected numbers");
        cc.values.push_back(x.get<double>());
      }
      if (cc.field == "p_percent" && !c.noise) throw ConfigError(mp + ".field", "a p_percent family needs a noise block");
    } else if (kind == "hh_equal_signal") {
      cc.kind = CompareConfig::Kind::HHEqualSignal;
      if (constant) throw ConfigError(mp + ".kind", "needs a modulated drive");
      cc.nucleus = detail::nucleus_index(m, "nucleus", mp, c.system.size());
    } else if (kind == "single_spins") {
      cc.kind = CompareConfig::Kind::SingleSpins;
    } else {
      throw ConfigError(mp + ".kind", "expected \"family\", \"hh_equal_signal\" or \"single_spins\"");
    }
    c.compare = cc;
  }

  const std::int64_t seed = detail::integer_or(j, "seed", root, 0);
  c.seed = static_cast<std::uint64_t>(seed);
  if (c.noise) c.noise->spec.master_seed = c.seed;
  const std::int64_t workers = detail::integer_or(j, "workers", root, 0);
  if (workers < 0) throw ConfigError(root + ".workers", "must be >= 0");
  c.workers = static_cast<unsigned>(workers);
  return c;
}

/// Replaces whichever final-time key `j` carries by an exact t_f_s.
inline void set_final_time_seconds(json& j, double t_f) {
  j.erase("t_f_ms");
  j.erase("t_f_us");
  j["t_f_s"] = t_f;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline ScanConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

}  // namespace nvpm::harness
