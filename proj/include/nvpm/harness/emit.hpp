#pragma once

// Output files, schema version 1:
//   <stem>.csv        one row per scan point, header row of column names
//   <stem>.meta.json  configuration, data columns, predictions, diagnostics
//   <name>.compare.json  summary of a comparison and its member stems
// Every file is written to a temporary sibling and renamed into place.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nvpm/harness/config.hpp"
#include "nvpm/harness/scan.hpp"
#include "nvpm/version.hpp"

namespace nvpm::harness {

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what) {}
};

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), "cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Column {
  std::string name;
  std::vector<double> values;
};

inline std::vector<Column> csv_columns(const Spectrum& s) {
  std::vector<Column> cols;
  cols.push_back({s.axis_column(), s.x});
  cols.push_back({"signal_ideal", s.ideal});
  if (!s.analytic.empty()) cols.push_back({"signal_analytic", s.analytic});
  if (!s.harmonic.empty()) cols.push_back({"signal_harmonic", s.harmonic});
  if (s.noisy()) {
    cols.push_back({"mean", s.noisy_mean});
    cols.push_back({"stderr", s.noisy_stderr});
    std::vector<double> runs(s.noisy_runs.begin(), s.noisy_runs.end());
    cols.push_back({"runs", runs});
  }
  return cols;
}

inline std::string to_csv(const Spectrum& s) {
  const auto cols = csv_columns(s);
  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c].name;
  out += '\n';
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out += ',';
      out += cols[c].name == "runs" ? std::to_string(s.noisy_runs[i]) : format_double(cols[c].values[i]);
    }
    out += '\n';
  }
  return out;
}

inline json number_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isnan(x) ? json(nullptr) : json(x));
  return a;
}

inline json energy_report_json(const EnergyReport& r) {
  return {{"peak_flux", r.peak_flux},       {"avg_flux", r.avg_flux},     {"total_energy", r.total_energy},
          {"per_cycle_energy", r.per_cycle_energy}, {"cross_term", r.cross_term}, {"duration_s", r.duration}};
}

inline json prediction_json(const EffectivePrediction& p) {
  json nuclei = json::array();
  for (const auto& n : p.nuclei) {
    json branches = json::array();
    for (const auto& b : n.branches)
      branches.push_back({{"m", b.m}, {"n", b.n}, {"nu_res_rad_s", b.nu_res}, {"coupling_rad_s", b.coupling},
                          {"bessel_arg", b.bessel_arg}});
    nuclei.push_back({{"nucleus", n.index + 1},
                      {"omega_n_rad_s", n.omega_n},
                      {"a_perp_x_rad_s", n.a_perp_x},
                      {"no_coupling", n.no_coupling},
                      {"resonance_rad_s", n.resonance},
                      {"bessel_arg", n.bessel_arg},
                      {"j1", n.j1},
                      {"coupling_rad_s", n.coupling},
                      {"depth_marker", n.signal_on_resonance},
                      {"fwhm_formula_rad_s", n.fwhm_formula},
                      {"fwhm_two_level_rad_s", n.fwhm_two_level},
                      {"branches", branches}});
  }
  return {{"scheme", p.scheme}, {"t_f_s", p.t_f}, {"nuclei", nuclei}};
}

inline json meta_json(const Spectrum& s) {
  json data = json::object();
  for (const auto& c : csv_columns(s)) data[c.name] = number_array(c.values);
  if (s.noisy()) data["runs"] = s.noisy_runs;
  json extra = json::object();
  extra["t_f_actual_s"] = number_array(s.t_actual);
  if (!s.detuned.empty()) extra["signal_detuned_closed_form"] = number_array(s.detuned);

  json columns = json::array();
  for (const auto& c : csv_columns(s)) columns.push_back(c.name);

  json energy = nullptr;
  if (s.energy) {
    energy = {{"modulated", energy_report_json(s.energy->modulated)},
              {"hh", energy_report_json(s.energy->hh)},
              {"t_modulated_s", s.energy->t_modulated},
              {"t_hh_s", s.energy->t_hh},
              {"ratio_integrated", s.energy->ratio_integrated},
              {"ratio_formula", s.energy->ratio_formula.ratio},
              {"ratio_small_argument", s.energy->ratio_formula.small_argument},
              {"no_coupling", s.energy->ratio_formula.no_coupling}};
  } else if (s.energy_constant) {
    energy = {{"constant", energy_report_json(*s.energy_constant)}};
  }

  const auto& d = s.diagnostics;
  json meta = {
      {"schema_version", kSchemaVersion},
      {"kind", "spectrum"},
      {"name", s.file_stem()},
      {"label", s.label},
      {"code_version", kVersion},
      {"config", s.config.source},
      {"axis", s.constant_drive ? "rabi" : "nu"},
      {"range_rad_s", {s.start, s.stop}},
      {"t_f_requested_s", s.config.t_f},
      {"columns", columns},
      {"data", data},
      {"extra", extra},
      {"predictions", prediction_json(s.prediction)},
      {"energy", energy},
      {"diagnostics",
       {{"max_unitarity_residual", d.max_unitarity_residual},
        {"max_trace_error", d.max_trace_error},
        {"max_renormalization_correction", d.max_renormalization},
        {"renormalizations", d.renormalizations},
        {"min_signal", d.min_signal},
        {"max_signal", d.max_signal},
        {"cache_degraded", d.cache_degraded}}},
  };
  if (s.noisy()) {
    const auto& n = s.config.noise->spec;
    meta["noise"] = {{"tau_s", n.tau}, {"p", n.p}, {"runs", n.runs}, {"stride", s.config.noise->stride},
                     {"master_seed", n.master_seed}};
    meta["rng"] = {{"identity", kRngIdentity}, {"master_seed", n.master_seed}};
  } else {
    meta["rng"] = nullptr;
  }
  // Parameters changed by a comparison are recorded next to the parent config.
  if (!s.label.empty()) {
    meta["member"] = {{"t_f_s", s.config.t_f}, {"scheme", scheme_name(s.config.drive)},
                      {"nuclei", s.config.system.size()}};
    if (s.config.noise) meta["member"]["p"] = s.config.noise->spec.p;
  }
  return meta;
}

struct WrittenFiles {
  std::vector<std::filesystem::path> paths;
};

inline void emit(const Spectrum& s, const std::filesystem::path& out_dir, WrittenFiles* written = nullptr) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), "cannot create directory: " + ec.message());
  const auto csv = out_dir / (s.file_stem() + ".csv");
  const auto meta = out_dir / (s.file_stem() + ".meta.json");
  write_atomic(csv, to_csv(s));
  write_atomic(meta, meta_json(s).dump(2) + "\n");
  if (written) {
    written->paths.push_back(csv);
    written->paths.push_back(meta);
  }
}

inline void emit(const CompareResult& r, const std::filesystem::path& out_dir, WrittenFiles* written = nullptr) {
  for (const auto& s : r.spectra) emit(s, out_dir, written);
  json members = json::array();
  for (const auto& s : r.spectra) members.push_back(s.file_stem());
  json doc = {{"schema_version", kSchemaVersion},
              {"kind", "compare"},
              {"compare_kind", r.kind},
              {"name", r.name},
              {"code_version", kVersion},
              {"config", r.source},
              {"members", members},
              {"summary", r.summary}};
  const auto path = out_dir / (r.name + ".compare.json");
  write_atomic(path, doc.dump(2) + "\n");
  if (written) written->paths.push_back(path);
}

}  // namespace nvpm::harness
