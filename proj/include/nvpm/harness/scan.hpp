#pragma once

// Scan orchestration: one spectrum per configuration, comparisons built from
// several spectra. Work units (scan points, noise realizations) go to a bounded
// worker pool and are gathered in index order.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nvpm/analytic.hpp"
#include "nvpm/dynamics.hpp"
#include "nvpm/harness/config.hpp"
#include "nvpm/parallel.hpp"
#include "nvpm/power.hpp"
#include "nvpm/stochastic.hpp"

namespace nvpm::harness {

struct Diagnostics {
  double max_unitarity_residual = 0.0;
  double max_trace_error = 0.0;
  double max_renormalization = 0.0;
  long long renormalizations = 0;
  double min_signal = 1.0;
  double max_signal = -1.0;
  bool cache_degraded = false;

  void absorb(const PropagationResult& r) {
    max_unitarity_residual = std::max(max_unitarity_residual, r.unitarity_residual);
    max_trace_error = std::max(max_trace_error, r.trace_error);
    max_renormalization = std::max(max_renormalization, r.max_correction);
    renormalizations += r.renormalizations;
    min_signal = std::min(min_signal, r.signal);
    max_signal = std::max(max_signal, r.signal);
    cache_degraded = cache_degraded || r.cache_degraded;
  }
};

struct Spectrum {
  ScanConfig config;
  std::string label;  // empty for a plain scan
  bool constant_drive = false;
  double start = 0.0;
  double stop = 0.0;
  std::vector<double> x;  // ν, or Ω̄₀ for the constant drive (rad/s)
  std::vector<double> ideal;
  std::vector<double> analytic;
  std::vector<double> detuned;
  std::vector<double> harmonic;
  std::vector<double> t_actual;
  std::vector<double> noisy_mean;
  std::vector<double> noisy_stderr;
  std::vector<int> noisy_runs;
  EffectivePrediction prediction;
  std::optional<EnergyComparison> energy;
  std::optional<EnergyReport> energy_constant;
  Diagnostics diagnostics;

  bool noisy() const { return !noisy_mean.empty(); }
  std::string axis_column() const { return constant_drive ? "rabi_rad_s" : "nu_rad_s"; }
  std::string file_stem() const { return config.name; }
};

/// Drive at scan coordinate x.
inline DriveScheme drive_at(const DriveScheme& base, double x) {
  return std::visit(
      [&](auto s) -> DriveScheme {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantHH>) s.rabi = x;
        else s.nu = x;
        return s;
      },
      base);
}

/// Resolves the scan range, returning [start, stop].
inline std::pair<double, double> resolve_range(const ScanConfig& c, const EffectivePrediction& pred) {
  if (c.scan.center == ScanCenter::Explicit) return {c.scan.start, c.scan.stop};
  auto width = [&](const NucleusPrediction& p) {
    // Weak-coupling limit of the two-level width when the nucleus does not couple.
    return p.fwhm_two_level > 0.0 ? p.fwhm_two_level : 5.566 / c.t_f;
  };
  double lo = 0.0;
  double hi = 0.0;
  double w = 0.0;
  if (c.scan.center == ScanCenter::Nucleus) {
    const auto& p = pred.nuclei.at(c.scan.nucleus);
    lo = hi = p.resonance;
    w = width(p);
  } else {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& p : pred.nuclei) {
      lo = std::min(lo, p.resonance);
      hi = std::max(hi, p.resonance);
      w = std::max(w, width(p));
    }
  }
  const double start = lo - c.scan.span_fwhm * w;
  const double stop = hi + c.scan.span_fwhm * w;
  if (!(start > 0.0)) throw ConfigError("config.scan", "resolved scan range reaches non-positive frequencies");
  return {start, stop};
}

inline SimulationTask make_task(const ScanConfig& c, double x) {
  SimulationTask t;
  t.system = c.system;
  t.drive = drive_at(c.drive, x);
  t.t_f = c.t_f;
  t.snapping = c.snapping;
  t.hh_chunk = c.hh_chunk;
  return t;
}

/// Indices carrying a noise ensemble: every stride-th point plus the point
/// nearest each predicted resonance inside the range.
inline std::vector<std::size_t> noisy_points(const Spectrum& s, int stride) {
  std::vector<char> mark(s.x.size(), 0);
  for (std::size_t i = 0; i < s.x.size(); i += static_cast<std::size_t>(stride)) mark[i] = 1;
  for (const auto& p : s.prediction.nuclei) {
    if (p.resonance < s.start || p.resonance > s.stop) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.x.size(); ++i)
      if (std::abs(s.x[i] - p.resonance) < std::abs(s.x[best] - p.resonance)) best = i;
    mark[best] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mark.size(); ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

inline Spectrum run_scan(const ScanConfig& c, const std::string& label = "") {
  Spectrum s;
  s.config = c;
  s.label = label;
  s.constant_drive = std::holds_alternative<ConstantHH>(c.drive);
  s.prediction = predict(c.system, c.drive, c.t_f);
  std::tie(s.start, s.stop) = resolve_range(c, s.prediction);

  const auto n = static_cast<std::size_t>(c.scan.points);
  s.x.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.x[i] = i + 1 == n ? s.stop : s.start + (s.stop - s.start) * static_cast<double>(i) / static_cast<double>(n - 1);

  std::vector<PropagationResult> results(n);
  parallel_for(n, c.workers, [&](std::size_t i) {
    try {
      results[i] = propagate_periodic_cached(make_task(c, s.x[i]));
    } catch (const InvariantViolation& e) {
      throw InvariantViolation("scan point " + std::to_string(i) + ": " + e.what());
    }
  });
  s.ideal.resize(n);
  s.t_actual.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.ideal[i] = results[i].signal;
    s.t_actual[i] = results[i].actual_t_f;
    s.diagnostics.absorb(results[i]);
  }

  if (c.overlay.analytic) {
    s.analytic.resize(n);
    s.detuned.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const OverlayPoint o = analytic_overlay(c.system, drive_at(c.drive, s.x[i]), s.t_actual[i]);
      s.analytic[i] = o.two_level;
      s.detuned[i] = o.detuned;
    }
  }
  if (c.overlay.harmonic_nucleus) {
    s.harmonic.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      s.harmonic[i] = harmonic_overlay(c.system, *c.overlay.harmonic_nucleus, drive_at(c.drive, s.x[i]), s.t_actual[i]);
  }

  if (c.noise) {
    const NoiseSpec& spec = c.noise->spec;
    s.noisy_mean.assign(n, std::numeric_limits<double>::quiet_NaN());
    s.noisy_stderr.assign(n, std::numeric_limits<double>::quiet_NaN());
    s.noisy_runs.assign(n, 0);
    const std::vector<std::size_t> points = noisy_points(s, c.noise->stride);
    const auto runs = static_cast<std::size_t>(spec.runs);
    if (spec.p == 0.0) {
      for (std::size_t i : points) {
        s.noisy_mean[i] = s.ideal[i];
        s.noisy_stderr[i] = 0.0;
        s.noisy_runs[i] = spec.runs;
      }
    } else {
      std::vector<SimulationTask> tasks;
      std::vector<Schedule> schedules;
      for (std::size_t i : points) {
        tasks.push_back(make_task(c, s.x[i]));
        schedules.push_back(make_schedule(tasks.back()));
      }
      std::vector<double> values(points.size() * runs);
      std::vector<PropagationResult> noisy(values.size());
      parallel_for(values.size(), c.workers, [&](std::size_t u) {
        const std::size_t p = u / runs;
        const std::size_t r = u % runs;
        try {
          noisy[u] = realization_signal(tasks[p], schedules[p], spec, points[p], r);
        } catch (const InvariantViolation& e) {
          throw InvariantViolation("scan point " + std::to_string(points[p]) + ", realization " + std::to_string(r) +
                                   ": " + e.what());
        }
        values[u] = noisy[u].signal;
      });
      for (const auto& r : noisy) s.diagnostics.absorb(r);
      for (std::size_t p = 0; p < points.size(); ++p) {
        const EnsembleResult e = reduce_ensemble(std::span<const double>(values).subspan(p * runs, runs));
        s.noisy_mean[points[p]] = e.mean;
        s.noisy_stderr[points[p]] = e.standard_error;
        s.noisy_runs[points[p]] = e.runs;
      }
    }
  }

  // energy bookkeeping at the primary resonance of the target nucleus
  const std::size_t target = c.scan.center == ScanCenter::Nucleus ? c.scan.nucleus : 0;
  if (!s.prediction.nuclei.empty()) {
    const auto& p = s.prediction.nuclei[target];
    if (s.constant_drive) {
      s.energy_constant = sequence_energy(ConstantHH{p.resonance}, c.t_f, c.system.nv.carrier());
    } else if (p.resonance > 0.0) {
      s.energy = compare_energy(drive_at(c.drive, p.resonance), c.t_f, c.system.nv.carrier());
    }
  }
  return s;
}

/// Geometry of one dip in a sampled spectrum, measured against the unperturbed
/// level 1. Positions are in scan coordinates.
struct DipMeasurement {
  bool found = false;
  std::size_t index = 0;
  double position = 0.0;  // parabolic vertex through the three lowest neighbours
  double minimum = 1.0;
  double depth = 0.0;
  double fwhm = 0.0;      // half-depth crossings, linear interpolation
  double curvature = 0.0; // second derivative from a quadratic least-squares fit
};

/// Measures the deepest local minimum of y within [lo, hi].
inline DipMeasurement measure_dip(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
  DipMeasurement m;
  const std::size_t n = x.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    if (!(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
    if (!m.found || y[i] < y[m.index]) {
      m.found = true;
      m.index = i;
    }
  }
  if (!m.found) return m;
  const std::size_t i = m.index;
  const double h = x[i + 1] - x[i];
  const double d1 = (y[i + 1] - y[i - 1]) / (2.0 * h);
  const double d2 = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
  const double shift = d2 > 0.0 ? std::clamp(-d1 / d2, -h, h) : 0.0;
  m.position = x[i] + shift;
  m.minimum = y[i] + d1 * shift + 0.5 * d2 * shift * shift;
  m.depth = 1.0 - m.minimum;
  const double half = 1.0 - 0.5 * m.depth;
  std::size_t l = i;
  while (l > 0 && y[l] < half) --l;
  std::size_t r = i;
  while (r + 1 < n && y[r] < half) ++r;
  if (y[l] >= half && y[r] >= half && l < i && r > i) {
    const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
    const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
    m.fwhm = xr - xl;
  }
  // quadratic least squares over the points above the 3/4-depth level
  const double level = 1.0 - 0.25 * m.depth;
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t k = l; k <= r; ++k) {
    if (y[k] > level) continue;
    const double u = x[k] - m.position;
    s0 += 1;
    s1 += u;
    s2 += u * u;
    s3 += u * u * u;
    s4 += u * u * u * u;
    t0 += y[k];
    t1 += u * y[k];
    t2 += u * u * y[k];
  }
  if (s0 >= 3) {
    Eigen::Matrix3d a;
    a << s0, s1, s2, s1, s2, s3, s2, s3, s4;
    const Eigen::Vector3d coef = a.ldlt().solve(Eigen::Vector3d(t0, t1, t2));
    m.curvature = 2.0 * coef(2);
  }
  return m;
}

struct CompareResult {
  std::string name;
  std::string kind;
  std::vector<Spectrum> spectra;
  json summary;
  json source;  // parent configuration
};

inline std::string family_label(const std::string& field, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%g", field.c_str(), value);
  std::string out(buf);
  std::replace(out.begin(), out.end(), '.', 'p');
  return out;
}

/// Configuration document of one comparison member: the parent without its
/// compare block, renamed to `<parent>_<label>`.
inline json member_source(const ScanConfig& c, const std::string& label) {
  json j = c.source;
  j.erase("compare");
  j["name"] = c.name + "_" + label;
  return j;
}

inline json dip_json(const DipMeasurement& d) {
  return {{"found", d.found}, {"position_rad_s", d.position}, {"minimum", d.minimum}, {"depth", d.depth},
          {"fwhm_rad_s", d.fwhm}, {"curvature", d.curvature}};
}

/// Local maxima with ⟨σx⟩ ≥ 1 − tol lying more than one predicted width away
/// from every resonance.
inline std::vector<double> decoupling_points(const Spectrum& s, double tol) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < s.x.size(); ++i) {
    if (!(s.ideal[i] >= s.ideal[i - 1] && s.ideal[i] >= s.ideal[i + 1] && s.ideal[i] >= 1.0 - tol)) continue;
    bool clear = true;
    for (const auto& p : s.prediction.nuclei)
      if (std::abs(s.x[i] - p.resonance) < std::max(p.fwhm_two_level, 5.566 / s.config.t_f)) clear = false;
    if (clear) out.push_back(s.x[i]);
  }
  return out;
}

inline CompareResult run_compare(const ScanConfig& c) {
  if (!c.compare) throw ConfigError("config.compare", "missing compare block");
  CompareResult out;
  out.name = c.name;
  out.source = c.source;
  const CompareConfig& cc = *c.compare;
  if (cc.kind == CompareConfig::Kind::Family) {
    out.kind = "family";
    json members = json::array();
    for (double v : cc.values) {
      const std::string label = family_label(cc.field, v);
      json j = member_source(c, label);
      if (cc.field == "p_percent") {
        j["noise"]["p_percent"] = v;
      } else {
        j.erase("t_f_ms");
        j.erase("t_f_us");
        j.erase("t_f_s");
        j[cc.field] = v;
      }
      out.spectra.push_back(run_scan(parse_config(j), label));
      members.push_back({{"label", label}, {"value", v}, {"stem", out.spectra.back().file_stem()}});
    }
    out.summary = {{"field", cc.field}, {"members", members}};
  } else if (cc.kind == CompareConfig::Kind::HHEqualSignal) {
    out.kind = "hh_equal_signal";
    json jm = member_source(c, "modulated");
    jm["scan"]["center"] = "nucleus";
    jm["scan"]["nucleus"] = cc.nucleus + 1;
    const ScanConfig m = parse_config(jm);
    Spectrum mod = run_scan(m, "modulated");
    const auto& p = mod.prediction.nuclei.at(cc.nucleus);
    // equal signal: J₁ times the snapped modulated duration at resonance
    const double t_mod = make_schedule(make_task(m, p.resonance)).actual_t_f;
    const double t_hh = hh_time_for_equal_signal(t_mod, p.j1);
    json jh = member_source(c, "hh");
    jh["scan"] = jm["scan"];
    jh["drive"] = {{"scheme", "constant"}};
    jh.erase("noise");
    set_final_time_seconds(jh, t_hh);
    Spectrum hh = run_scan(parse_config(jh), "hh");
    const auto& q = hh.prediction.nuclei.at(cc.nucleus);
    const DipMeasurement dm = measure_dip(mod.x, mod.ideal, p.resonance - p.fwhm_two_level, p.resonance + p.fwhm_two_level);
    const DipMeasurement dh = measure_dip(hh.x, hh.ideal, q.resonance - q.fwhm_two_level, q.resonance + q.fwhm_two_level);
    const double a1 = std::holds_alternative<PhaseModulated>(c.drive) ? kSquareWaveA1 : 1.0;
    const double omega1 = std::visit(
        [](const auto& s) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ConstantHH>) return 0.0;
          else return s.omega1;
        },
        c.drive);
    out.summary = {{"nucleus", cc.nucleus + 1},
                   {"t_f_modulated_s", t_mod},
                   {"t_f_hh_s", t_hh},
                   {"j1", p.j1},
                   {"dip_modulated", dip_json(dm)},
                   {"dip_hh", dip_json(dh)},
                   {"fwhm_ratio_numerical", dm.fwhm > 0.0 ? dh.fwhm / dm.fwhm : 0.0},
                   {"fwhm_ratio_formula", fwhm_ratio(a1, omega1, p.resonance)},
                   {"fwhm_formula_modulated_rad_s", p.fwhm_formula},
                   {"fwhm_formula_hh_rad_s", fwhm_hh(q.a_perp_x, t_hh)}};
    out.spectra.push_back(std::move(mod));
    out.spectra.push_back(std::move(hh));
  } else {
    out.kind = "single_spins";
    json jc = member_source(c, "cluster");
    if (c.scan.center != ScanCenter::Explicit) {
      // freeze the cluster range so every single-spin spectrum shares the grid
      const auto range = resolve_range(c, predict(c.system, c.drive, c.t_f));
      jc["scan"] = {{"points", c.scan.points}, {"start_rad_s", range.first}, {"stop_rad_s", range.second}};
    }
    Spectrum cluster = run_scan(parse_config(jc), "cluster");
    const std::vector<double> decoupled = decoupling_points(cluster, 1e-3);
    out.spectra.push_back(std::move(cluster));
    json singles = json::array();
    for (std::size_t k = 0; k < c.system.size(); ++k) {
      const std::string label = "nucleus" + std::to_string(k + 1);
      json js = jc;
      js["name"] = c.name + "_" + label;
      js["system"]["nuclei"] = json::array({c.source["system"]["nuclei"][k]});
      js["system"].erase("couplings_Hz_x2pi");
      js["system"].erase("couplings_from_positions");
      js.erase("noise");
      if (js.contains("overlay")) js["overlay"].erase("harmonic_nucleus");
      out.spectra.push_back(run_scan(parse_config(js), label));
      singles.push_back(out.spectra.back().file_stem());
    }
    out.summary = {{"singles", singles}, {"decoupling_points_rad_s", decoupled}, {"decoupling_tolerance", 1e-3}};
  }
  return out;
}

}  // namespace nvpm::harness
