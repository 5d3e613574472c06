// nvpm: command-line front end for scans, comparisons, presets and energy
// bookkeeping.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 numerical-invariant violation.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "nvpm/errors.hpp"
#include "nvpm/harness/config.hpp"
#include "nvpm/harness/emit.hpp"
#include "nvpm/harness/presets.hpp"
#include "nvpm/harness/scan.hpp"
#include "nvpm/log.hpp"
#include "nvpm/power.hpp"
#include "nvpm/version.hpp"

namespace {

using nvpm::harness::json;

struct Overrides {
  std::optional<int> workers;
  std::optional<long long> seed;
  std::optional<int> points;
  std::optional<int> runs;
  std::optional<double> p_percent;
  std::optional<double> t_f_ms;
  std::optional<std::string> name;
  bool no_noise = false;
  bool full_ensemble = false;
  bool exact_time = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Master seed for noise ensembles");
  cmd->add_option("--points", o.points, "Number of scan points")->check(CLI::Range(2, 1000000));
  cmd->add_option("--runs", o.runs, "Noise realizations per point")->check(CLI::PositiveNumber);
  cmd->add_option("--p-percent", o.p_percent, "Noise strength p in percent");
  cmd->add_option("--t-f-ms", o.t_f_ms, "Final time in ms");
  cmd->add_option("--name", o.name, "Output file stem");
  cmd->add_flag("--no-noise", o.no_noise, "Drop the noise ensemble");
  cmd->add_flag("--full-ensemble", o.full_ensemble, "200 noise realizations per point");
  cmd->add_flag("--exact-time", o.exact_time, "Run the exact final time instead of whole periods");
}

json apply_overrides(json j, const Overrides& o) {
  if (o.workers) j["workers"] = *o.workers;
  if (o.seed) j["seed"] = *o.seed;
  if (o.points) j["scan"]["points"] = *o.points;
  if (o.t_f_ms) {
    j.erase("t_f_us");
    j.erase("t_f_s");
    j["t_f_ms"] = *o.t_f_ms;
  }
  if (o.name) j["name"] = *o.name;
  if (o.exact_time) j["snapping"] = "exact";
  if (o.no_noise) {
    j.erase("noise");
    if (j.contains("compare") && j["compare"].value("field", "") == "p_percent") j.erase("compare");
  }
  if (j.contains("noise")) {
    if (o.full_ensemble) j["noise"]["runs"] = 200;
    if (o.runs) j["noise"]["runs"] = *o.runs;
    if (o.p_percent) j["noise"]["p_percent"] = *o.p_percent;
  } else if (o.runs || o.p_percent) {
    throw nvpm::ConfigError("noise", "--runs/--p-percent given but the configuration has no noise block");
  }
  return j;
}

void report(const nvpm::harness::WrittenFiles& w) {
  for (const auto& p : w.paths) std::cout << p.string() << '\n';
}

int run_document(const json& doc, const std::string& out_dir, bool force_compare) {
  const auto cfg = nvpm::harness::parse_config(doc);
  nvpm::harness::WrittenFiles written;
  if (cfg.compare) {
    nvpm::harness::emit(nvpm::harness::run_compare(cfg), out_dir, &written);
  } else {
    if (force_compare) throw nvpm::ConfigError("config.compare", "the compare verb needs a compare block");
    nvpm::harness::emit(nvpm::harness::run_scan(cfg), out_dir, &written);
  }
  report(written);
  return 0;
}

json energy_document(const nvpm::harness::ScanConfig& cfg, std::size_t nucleus) {
  using namespace nvpm;
  if (std::holds_alternative<ConstantHH>(cfg.drive))
    throw ConfigError("config.drive.scheme", "energy comparison needs a modulated drive");
  if (nucleus >= cfg.system.size()) throw ConfigError("--nucleus", "out of range");
  const auto pred = predict(cfg.system, cfg.drive, cfg.t_f);
  const auto& p = pred.nuclei.at(nucleus);
  const DriveScheme drive = harness::drive_at(cfg.drive, p.resonance);
  const auto r = compare_energy(drive, cfg.t_f, cfg.system.nv.carrier());
  return {{"schema_version", harness::kSchemaVersion},
          {"kind", "energy"},
          {"name", cfg.name},
          {"code_version", kVersion},
          {"nucleus", nucleus + 1},
          {"nu_rad_s", p.resonance},
          {"modulated", harness::energy_report_json(r.modulated)},
          {"hh", harness::energy_report_json(r.hh)},
          {"t_modulated_s", r.t_modulated},
          {"t_hh_s", r.t_hh},
          {"ratio_integrated", r.ratio_integrated},
          {"ratio_formula", r.ratio_formula.ratio},
          {"ratio_small_argument", r.ratio_formula.small_argument},
          {"no_coupling", r.ratio_formula.no_coupling}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-modulated NV sensing simulator"};
  app.set_version_flag("--version", std::string(nvpm::kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Progress and diagnostic messages");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  std::string config_path;
  std::string out_dir = "out";
  Overrides ov;

  auto* scan = app.add_subcommand("scan", "Run one spectrum (or the comparison a config describes)");
  scan->add_option("-c,--config", config_path, "Configuration file (.json or .meta.json)")->required();
  scan->add_option("-o,--out-dir", out_dir, "Output directory");
  add_overrides(scan, ov);

  auto* compare = app.add_subcommand("compare", "Run the comparison described by a config's compare block");
  compare->add_option("-c,--config", config_path, "Configuration file")->required();
  compare->add_option("-o,--out-dir", out_dir, "Output directory");
  add_overrides(compare, ov);

  std::string preset_name;
  std::string write_config;
  auto* preset = app.add_subcommand("preset", "Run a built-in figure preset");
  preset->add_option("preset", preset_name, "Preset name (see list-presets)")->required();
  preset->add_option("-o,--out-dir", out_dir, "Output directory");
  preset->add_option("--write-config", write_config, "Write the preset configuration to this file and exit");
  add_overrides(preset, ov);

  std::size_t nucleus = 1;
  auto* energy = app.add_subcommand("energy", "Energy of the modulated drive against constant driving at equal signal");
  energy->add_option("-c,--config", config_path, "Configuration file")->required();
  energy->add_option("--nucleus", nucleus, "Target nucleus (1-based)")->check(CLI::PositiveNumber);
  energy->add_option("-o,--out-dir", out_dir, "Write <name>.energy.json here as well");

  auto* list = app.add_subcommand("list-presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);
  nvpm::log::set_level(quiet ? nvpm::log::Level::Quiet : verbose ? nvpm::log::Level::Debug : nvpm::log::Level::Warn);

  try {
    if (*list) {
      for (const auto& p : nvpm::harness::preset_list()) std::printf("%-8s %s\n", p.name.c_str(), p.description.c_str());
      return 0;
    }
    if (*preset) {
      json doc = apply_overrides(nvpm::harness::preset_config(preset_name, ov.full_ensemble), ov);
      if (!write_config.empty()) {
        nvpm::harness::parse_config(doc);
        nvpm::harness::write_atomic(write_config, doc.dump(2) + "\n");
        return 0;
      }
      return run_document(doc, out_dir, false);
    }
    if (*scan || *compare) {
      return run_document(apply_overrides(nvpm::harness::read_json_file(config_path), ov), out_dir, compare->parsed());
    }
    if (*energy) {
      const auto cfg = nvpm::harness::load_config(config_path);
      const json doc = energy_document(cfg, nucleus - 1);
      if (energy->count("--out-dir")) {
        std::filesystem::create_directories(out_dir);
        nvpm::harness::write_atomic(std::filesystem::path(out_dir) / (cfg.name + ".energy.json"), doc.dump(2) + "\n");
      }
      std::cout << doc.dump(2) << '\n';
      return 0;
    }
  } catch (const nvpm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nvpm::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
