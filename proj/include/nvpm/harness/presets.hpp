#pragma once

// Built-in figure presets. Each is an ordinary configuration document; the
// checked-in files under configs/ are generated from these.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvpm/harness/config.hpp"

namespace nvpm::harness {

namespace preset_parts {

inline json nucleus(double ax, double ay, double az) { return {{"A_kHz_x2pi", {ax, ay, az}}}; }

inline json single_nucleus_system() {
  return {{"B_T", 1.0}, {"nuclei", json::array({nucleus(-6.71, 11.62, -17.09)})}};
}

inline json cluster_system() {
  return {{"B_T", 1.0},
          {"nuclei", json::array({nucleus(-6.71, 11.62, -17.09), nucleus(-8.21, 23.70, -34.30),
                                  nucleus(6.76, 19.53, -8.02)})},
          {"couplings_Hz_x2pi", {{0.0, -472.0, 14.95}, {-472.0, 0.0, 50.10}, {14.95, 50.10, 0.0}}}};
}

inline json phase_drive(double omega1) {
  return {{"scheme", "phase"}, {"Omega0_MHz_x2pi", 1.0}, {"Omega1_MHz_x2pi", omega1}, {"t_flip_ns", 5.0},
          {"flip_steps", 20}};
}

inline json amplitude_drive(double omega1) {
  return {{"scheme", "amplitude"}, {"Omega0_MHz_x2pi", 1.0}, {"Omega1_MHz_x2pi", omega1}, {"samples_per_period", 256}};
}

inline json noise(double p_percent, int stride) {
  return {{"tau_ms", 0.5}, {"p_percent", p_percent}, {"runs", 50}, {"stride", stride}};
}

inline json base(const std::string& name, json system, json drive, json scan, double t_f_ms) {
  return {{"schema_version", kSchemaVersion},
          {"name", name},
          {"system", std::move(system)},
          {"drive", std::move(drive)},
          {"scan", std::move(scan)},
          {"t_f_ms", t_f_ms},
          {"snapping", "nearest_period"},
          {"overlay", {{"analytic", true}}},
          {"seed", 20240601}};
}

inline json around_nucleus(int points, int nucleus) {
  return {{"points", points}, {"center", "nucleus"}, {"nucleus", nucleus}, {"span_fwhm", 4.0}};
}

inline json around_cluster(int points) { return {{"points", points}, {"center", "cluster"}, {"span_fwhm", 4.0}}; }

}  // namespace preset_parts

struct PresetInfo {
  std::string name;
  std::string description;
};

inline const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> list = {
      {"fig1b", "single 13C, phase modulation, t_f = 0.205 and 0.308 ms"},
      {"fig2a", "three-spin cluster, Omega1 = 1 MHz, t_f = 0.205 ms, OU noise p = 0.5%"},
      {"fig2b", "three-spin cluster, Omega1 = 0.5 MHz, t_f = 0.411 ms, OU noise p = 0.5%"},
      {"figS1a", "three-spin cluster, amplitude modulation, Omega1 = 1 MHz, t_f = 0.205 ms"},
      {"figS1b", "three-spin cluster, amplitude modulation, Omega1 = 0.5 MHz, t_f = 0.411 ms"},
      {"figS2", "single 13C, phase modulation against constant drive at equal signal, harmonic overlays"},
      {"figS3a", "cluster nucleus 2, phase modulation, OU noise p = 0.5, 1, 2%"},
      {"figS3b", "cluster nucleus 2, constant drive for 13.452 us, OU noise p = 0.5, 5, 10%"},
      {"figS4a", "cluster against single-spin spectra, Omega1 = 1 MHz, t_f = 0.205 ms"},
      {"figS4b", "cluster against single-spin spectra, Omega1 = 0.5 MHz, t_f = 0.411 ms"},
  };
  return list;
}

/// Configuration document of a preset. `full_ensemble` raises noise
/// ensembles to 200 realizations.
inline json preset_config(const std::string& name, bool full_ensemble = false) {
  using namespace preset_parts;
  json j;
  if (name == "fig1b") {
    j = base(name, single_nucleus_system(), phase_drive(1.0), around_nucleus(201, 1), 0.205);
    j["compare"] = {{"kind", "family"}, {"field", "t_f_ms"}, {"values", {0.205, 0.308}}};
  } else if (name == "fig2a") {
    j = base(name, cluster_system(), phase_drive(1.0), around_cluster(201), 0.205);
    j["noise"] = noise(0.5, 10);
  } else if (name == "fig2b") {
    j = base(name, cluster_system(), phase_drive(0.5), around_cluster(201), 0.411);
    j["noise"] = noise(0.5, 10);
  } else if (name == "figS1a") {
    j = base(name, cluster_system(), amplitude_drive(1.0), around_cluster(201), 0.205);
    j["noise"] = noise(0.5, 30);
  } else if (name == "figS1b") {
    j = base(name, cluster_system(), amplitude_drive(0.5), around_cluster(201), 0.411);
    j["noise"] = noise(0.5, 30);
  } else if (name == "figS2") {
    j = base(name, single_nucleus_system(), phase_drive(1.0), around_nucleus(201, 1), 0.205);
    j["overlay"]["harmonic_nucleus"] = 1;
    j["compare"] = {{"kind", "hh_equal_signal"}, {"nucleus", 1}};
  } else if (name == "figS3a") {
    j = base(name, cluster_system(), phase_drive(1.0), around_nucleus(201, 2), 0.205);
    j["noise"] = noise(0.5, 10);
    j["compare"] = {{"kind", "family"}, {"field", "p_percent"}, {"values", {0.5, 1.0, 2.0}}};
  } else if (name == "figS3b") {
    j = base(name, cluster_system(), json{{"scheme", "constant"}}, around_nucleus(201, 2), 0.0);
    j.erase("t_f_ms");
    j["t_f_us"] = 13.452;
    j["noise"] = noise(0.5, 10);
    j["compare"] = {{"kind", "family"}, {"field", "p_percent"}, {"values", {0.5, 5.0, 10.0}}};
  } else if (name == "figS4a") {
    j = base(name, cluster_system(), phase_drive(1.0), around_cluster(201), 0.205);
    j["compare"] = {{"kind", "single_spins"}};
  } else if (name == "figS4b") {
    j = base(name, cluster_system(), phase_drive(0.5), around_cluster(201), 0.411);
    j["compare"] = {{"kind", "single_spins"}};
  } else {
    throw ConfigError("preset", "unknown preset \"" + name + "\"");
  }
  if (full_ensemble && j.contains("noise")) j["noise"]["runs"] = 200;
  return j;
}

}  // namespace nvpm::harness
