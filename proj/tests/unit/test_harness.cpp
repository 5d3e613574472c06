#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvpm/harness/config.hpp"
#include "nvpm/harness/emit.hpp"
#include "nvpm/harness/presets.hpp"
#include "nvpm/harness/scan.hpp"

using namespace nvpm;
using namespace nvpm::harness;
namespace fs = std::filesystem;

namespace {

json small_config() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "unit",
    "system": {"B_T": 1.0, "nuclei": [{"A_kHz_x2pi": [-6.71, 11.62, -17.09]}]},
    "drive": {"scheme": "phase", "Omega0_MHz_x2pi": 1.0, "Omega1_MHz_x2pi": 1.0},
    "scan": {"points": 7, "center": "nucleus", "nucleus": 1, "span_fwhm": 2.0},
    "t_f_ms": 0.01,
    "seed": 3
  })");
}

json noisy_config() {
  json j = small_config();
  j["noise"] = {{"tau_ms", 0.5}, {"p_percent", 1.0}, {"runs", 3}, {"stride", 3}};
  return j;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nvpm_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string error_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST(Config, ParsesUnitsAndDefaults) {
  const ScanConfig c = parse_config(small_config());
  EXPECT_EQ(c.name, "unit");
  EXPECT_DOUBLE_EQ(c.t_f, 0.01e-3);
  const auto& d = std::get<PhaseModulated>(c.drive);
  EXPECT_DOUBLE_EQ(d.omega0, units::kMHz);
  EXPECT_DOUBLE_EQ(d.t_flip, 5e-9);
  EXPECT_EQ(d.flip_steps, 20);
  EXPECT_DOUBLE_EQ(c.system.nuclei[0].hyperfine.z(), -17.09 * units::kKHz);
  EXPECT_EQ(c.scan.nucleus, 0u);
  EXPECT_FALSE(c.noise);
  EXPECT_EQ(c.snapping, TimeSnapping::NearestPeriod);
}

TEST(Config, ErrorsNameTheOffendingField) {
  json j = small_config();
  j.erase("system");
  EXPECT_EQ(error_field(j), "config.system");

  j = small_config();
  j["t_f_us"] = 10.0;
  EXPECT_EQ(error_field(j), "config.t_f_ms");

  j = small_config();
  j["scan"]["points"] = 1;
  EXPECT_EQ(error_field(j), "config.scan.points");

  j = small_config();
  j["drive"]["scheme"] = "chirp";
  EXPECT_EQ(error_field(j).rfind("config.drive", 0), 0u);

  j = noisy_config();
  j["noise"]["p_percent"] = 40.0;
  EXPECT_EQ(error_field(j), "config.noise");

  j = small_config();
  j["scan"] = {{"points", 5}, {"center", "explicit"}, {"nu_start_MHz_x2pi", 10.0}, {"nu_stop_MHz_x2pi", 9.0}};
  EXPECT_EQ(error_field(j), "config.scan");

  j = small_config();
  j["scan"]["nucleus"] = 4;
  EXPECT_EQ(error_field(j), "config.scan.nucleus");

  j = small_config();
  j["schema_version"] = 2;
  EXPECT_EQ(error_field(j), "config.schema_version");

  j = small_config();
  j["compare"] = {{"kind", "family"}, {"field", "p_percent"}, {"values", {1.0}}};
  EXPECT_EQ(error_field(j), "config.compare.field");

  j = small_config();
  j["name"] = "a/b";
  EXPECT_EQ(error_field(j), "config.name");

  EXPECT_THROW(read_json_file("/nonexistent/config.json"), ConfigError);
  EXPECT_THROW(preset_config("fig9"), ConfigError);
}

TEST(Presets, CheckedInConfigsMatchBuiltIns) {
  for (const auto& p : preset_list()) {
    const fs::path file = fs::path(NVPM_SOURCE_DIR) / "configs" / (p.name + ".json");
    ASSERT_TRUE(fs::exists(file)) << file;
    EXPECT_EQ(read_json_file(file.string()), preset_config(p.name)) << p.name;
    EXPECT_NO_THROW(parse_config(preset_config(p.name, true))) << p.name;
  }
  EXPECT_EQ(preset_config("fig2a", true)["noise"]["runs"], 200);
  EXPECT_EQ(preset_config("fig2a")["noise"]["runs"], 50);
}

TEST(Emit, ColumnsOfPlainAndNoisySpectra) {
  const Spectrum plain = run_scan(parse_config(small_config()));
  EXPECT_EQ(to_csv(plain).substr(0, to_csv(plain).find('\n')), "nu_rad_s,signal_ideal,signal_analytic");
  const Spectrum noisy = run_scan(parse_config(noisy_config()));
  const std::string csv = to_csv(noisy);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "nu_rad_s,signal_ideal,signal_analytic,mean,stderr,runs");
  int with_runs = 0;
  for (std::size_t i = 0; i < noisy.x.size(); ++i) {
    if (noisy.noisy_runs[i] == 0) {
      EXPECT_TRUE(std::isnan(noisy.noisy_mean[i]));
    } else {
      ++with_runs;
      EXPECT_EQ(noisy.noisy_runs[i], 3);
    }
  }
  EXPECT_GE(with_runs, 3);  // stride points plus the resonance
}

TEST(Emit, CsvAndJsonAgreeExactly) {
  const Spectrum s = run_scan(parse_config(noisy_config()));
  const fs::path dir = scratch_dir("agree");
  emit(s, dir);
  const json meta = read_json_file((dir / "unit.meta.json").string());
  std::istringstream csv(read_file(dir / "unit.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<std::string> names;
  {
    std::stringstream hs(line);
    std::string name;
    while (std::getline(hs, name, ',')) names.push_back(name);
  }
  EXPECT_EQ(meta["columns"].get<std::vector<std::string>>(), names);
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    std::stringstream rs(line);
    std::string cell;
    for (std::size_t c = 0; std::getline(rs, cell, ','); ++c) {
      const json& v = meta["data"][names[c]][row];
      if (cell == "nan") {
        EXPECT_TRUE(v.is_null());
      } else {
        EXPECT_EQ(std::strtod(cell.c_str(), nullptr), v.get<double>()) << names[c] << " row " << row;
      }
    }
    ++row;
  }
  EXPECT_EQ(row, s.x.size());
  EXPECT_EQ(meta["schema_version"], kSchemaVersion);
  EXPECT_TRUE(meta["rng"].is_object());
}

TEST(Emit, MetadataReproducesCsvBitIdentically) {
  const fs::path dir = scratch_dir("roundtrip");
  emit(run_scan(parse_config(noisy_config())), dir);
  const json meta = read_json_file((dir / "unit.meta.json").string());
  const Spectrum again = run_scan(parse_config(meta));
  EXPECT_EQ(to_csv(again), read_file(dir / "unit.csv"));
}

TEST(Scan, OutputIndependentOfWorkerCount) {
  json j = noisy_config();
  j["workers"] = 1;
  const std::string one = to_csv(run_scan(parse_config(j)));
  j["workers"] = 3;
  EXPECT_EQ(to_csv(run_scan(parse_config(j))), one);
}

TEST(Emit, IoErrorsCarryPath) {
  try {
    write_atomic("/nonexistent_dir_nvpm/x.csv", "a");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_nvpm/x.csv"), std::string::npos);
  }
}

TEST(Dip, MeasuresSyntheticLine) {
  // 1 − 0.4/(1 + ((x − 3)/0.5)²): FWHM 1, depth 0.4, minimum at 3
  std::vector<double> x, y;
  for (int i = 0; i <= 600; ++i) {
    x.push_back(i * 0.01);
    const double u = (x.back() - 3.0) / 0.5;
    y.push_back(1.0 - 0.4 / (1.0 + u * u));
  }
  const DipMeasurement d = measure_dip(x, y, 2.0, 4.0);
  ASSERT_TRUE(d.found);
  EXPECT_NEAR(d.position, 3.0, 1e-6);
  EXPECT_NEAR(d.depth, 0.4, 1e-6);
  EXPECT_NEAR(d.fwhm, 1.0, 1e-3);
  EXPECT_NEAR(d.curvature, 0.4 / 0.25, 0.2);
  EXPECT_FALSE(measure_dip(x, y, 4.5, 5.0).found);
}

TEST(Compare, FamilyMembersCarryTheirOwnConfig) {
  json j = small_config();
  j["compare"] = {{"kind", "family"}, {"field", "t_f_ms"}, {"values", {0.01, 0.02}}};
  const CompareResult r = run_compare(parse_config(j));
  ASSERT_EQ(r.spectra.size(), 2u);
  EXPECT_EQ(r.spectra[1].file_stem(), "unit_t_f_ms_0p02");
  EXPECT_DOUBLE_EQ(r.spectra[1].config.t_f, 0.02e-3);
  EXPECT_EQ(to_csv(run_scan(parse_config(r.spectra[1].config.source))), to_csv(r.spectra[1]));
  EXPECT_FALSE(r.spectra[1].config.source.contains("compare"));
}

TEST(Compare, EqualSignalConstantDrive) {
  json j = small_config();
  j["scan"]["points"] = 41;
  j["t_f_ms"] = 0.05;
  j["compare"] = {{"kind", "hh_equal_signal"}, {"nucleus", 1}};
  const CompareResult r = run_compare(parse_config(j));
  ASSERT_EQ(r.spectra.size(), 2u);
  EXPECT_TRUE(r.spectra[1].constant_drive);
  const double t_mod = r.summary["t_f_modulated_s"];
  const double t_hh = r.summary["t_f_hh_s"];
  EXPECT_NEAR(t_hh, r.spectra[0].prediction.nuclei[0].j1 * t_mod, 1e-18);
  // equal depth on resonance
  const double d_mod = r.summary["dip_modulated"]["minimum"];
  const double d_hh = r.summary["dip_hh"]["minimum"];
  EXPECT_NEAR(d_mod, d_hh, 2e-3);
}

TEST(Compare, SingleSpinsShareTheClusterGrid) {
  json j = small_config();
  j["system"] = preset_config("fig2a")["system"];
  j["scan"] = {{"points", 21}, {"center", "cluster"}};
  j["compare"] = {{"kind", "single_spins"}};
  const CompareResult r = run_compare(parse_config(j));
  ASSERT_EQ(r.spectra.size(), 4u);
  for (const auto& s : r.spectra) EXPECT_EQ(s.x, r.spectra[0].x);
  EXPECT_EQ(r.spectra[3].config.system.size(), 1u);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const std::string cli = NVPM_CLI;
  EXPECT_EQ(std::system((cli + " list-presets > /dev/null").c_str()), 0);
  json bad = small_config();
  bad["scan"]["points"] = 0;
  std::ofstream(dir / "bad.json") << bad.dump();
  const int rc = std::system((cli + " -q scan -c " + (dir / "bad.json").string() + " -o " + dir.string() + " 2>/dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), 2);
  std::ofstream(dir / "good.json") << small_config().dump();
  EXPECT_EQ(std::system((cli + " scan -c " + (dir / "good.json").string() + " -o " + dir.string() + " > /dev/null").c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "unit.csv"));
}
