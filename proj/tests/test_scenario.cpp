// End-to-end scenario tests: clean-link sanity, determinism, config
// parsing/validation, suite orchestration, and output-file layout.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "shqpsk/scenario.hpp"

namespace fs = std::filesystem;
using namespace shqpsk;

namespace {

// A small, fast scenario with the same texture as the bundled presets.
ScenarioConfig small_config(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.n_symbols = 12000;
  cfg.seed = 11;
  cfg.sop_seed = 7;
  cfg.laser.power_dbm = 13.4;
  cfg.laser.linewidth_hz = 100e3;
  cfg.driver.gain_v_per_v = 1.75;
  cfg.driver.f3db_hz = 4.5e9;
  cfg.receiver.thermal_noise_a_rthz = 2.5e-9;
  cfg.equalizer.enabled = false;
  return cfg;
}

// Scratch directory unique to this test binary run.
fs::path scratch_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "shqpsk_scenario_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CleanLink, NoiselessBackToBackHasZeroErrors) {
  ScenarioConfig cfg = small_config("clean");
  cfg.laser.linewidth_hz = 0.0;
  cfg.driver.f3db_hz = 1e15;  // effectively unlimited driver bandwidth
  cfg.receiver.thermal_noise_a_rthz = 0.0;

  ScenarioProbes probes;
  const ScenarioResult res = run_scenario(cfg, &probes);

  EXPECT_EQ(res.ber, 0.0);
  EXPECT_GT(res.report["metrics"]["ber"]["bits_compared"].get<std::uint64_t>(), 10000u);
  EXPECT_LT(res.evm_percent, 10.0);
  EXPECT_GT(probes.pol_extinction_db, 10.0);
  EXPECT_EQ(probes.det_i.samples.size(), cfg.n_symbols * 10);
  EXPECT_EQ(probes.det_q.samples.size(), cfg.n_symbols * 10);
}

TEST(CleanLink, PhaseNoiseAloneCausesNoErrors) {
  // The self-homodyne receiver beats the signal against a carrier that took
  // the same laser: its phase noise cancels in the product, so even a huge
  // linewidth costs nothing when no other noise is present.
  ScenarioConfig cfg = small_config("pn");
  cfg.laser.linewidth_hz = 10e6;
  cfg.driver.f3db_hz = 1e15;
  cfg.receiver.thermal_noise_a_rthz = 0.0;

  const ScenarioResult res = run_scenario(cfg);
  EXPECT_EQ(res.ber, 0.0);
  EXPECT_LT(res.evm_percent, 10.0);
}

TEST(Scenario, ReportIsByteIdenticalAcrossRuns) {
  ScenarioConfig cfg = small_config("det");
  cfg.fiber.length_km = 20.0;
  cfg.equalizer.enabled = true;

  const ScenarioResult a = run_scenario(cfg);
  const ScenarioResult b = run_scenario(cfg);

  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  ASSERT_EQ(a.constellation.size(), b.constellation.size());
  for (std::size_t k = 0; k < a.constellation.size(); k += 97) {
    EXPECT_EQ(a.constellation[k].real(), b.constellation[k].real());
    EXPECT_EQ(a.constellation[k].imag(), b.constellation[k].imag());
  }
  ASSERT_EQ(a.tap_trajectory.size(), b.tap_trajectory.size());
  for (std::size_t s = 0; s < a.tap_trajectory.size(); ++s)
    for (int k = 0; k < a.n_taps; ++k)
      EXPECT_EQ(a.tap_trajectory[s].h_xx[static_cast<std::size_t>(k)],
                b.tap_trajectory[s].h_xx[static_cast<std::size_t>(k)]);
}

TEST(Scenario, MasterSeedChangesEveryStageStream) {
  ScenarioConfig cfg = small_config("seeded");
  ScenarioConfig other = cfg;
  other.seed = 12;

  const ScenarioResult a = run_scenario(cfg);
  const ScenarioResult b = run_scenario(other);

  EXPECT_NE(a.report["stage_seeds"].dump(), b.report["stage_seeds"].dump());
  EXPECT_NE(a.report["metrics"].dump(), b.report["metrics"].dump());
}

TEST(Scenario, EqualizerImprovesImpairedBackToBack) {
  ScenarioConfig off = small_config("pair-off");
  off.n_symbols = 30000;
  ScenarioConfig on = off;
  on.name = "pair-on";
  on.equalizer.enabled = true;

  const ScenarioResult res_off = run_scenario(off);
  const ScenarioResult res_on = run_scenario(on);

  // Same seeds, same channel; only the equalizer differs. The band-limited
  // driver ISI is exactly what the FIR removes.
  EXPECT_LT(res_on.evm_percent, res_off.evm_percent);
  EXPECT_LE(res_on.ber, res_off.ber);
  EXPECT_FALSE(res_on.report["metrics"]["cma_cost_final"].is_null());
  EXPECT_TRUE(res_off.report["metrics"]["cma_cost_final"].is_null());
}

TEST(Scenario, EchoRoundTripReproducesReport) {
  ScenarioConfig cfg = small_config("echo");
  cfg.fiber.length_km = 20.0;
  cfg.equalizer.enabled = true;

  const ScenarioResult direct = run_scenario(cfg);
  const ScenarioConfig reparsed = parse_scenario(serialize_scenario(cfg));
  const ScenarioResult via_json = run_scenario(reparsed);

  EXPECT_EQ(direct.report.dump(2), via_json.report.dump(2));
  EXPECT_EQ(direct.report["config"].dump(), serialize_scenario(cfg).dump());
}

TEST(Config, MinimalJsonGetsDefaults) {
  ordered_json j;
  j["name"] = "tiny";
  const ScenarioConfig cfg = parse_scenario(j);

  EXPECT_EQ(cfg.n_symbols, 200000u);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.prbs_order, 7);
  EXPECT_EQ(cfg.samples_per_symbol, 10);
  EXPECT_DOUBLE_EQ(cfg.symbol_rate_baud, 10e9);
  EXPECT_TRUE(cfg.equalizer.enabled);
  // The fiber always operates at the laser wavelength.
  EXPECT_DOUBLE_EQ(cfg.fiber.wavelength_nm, cfg.laser.wavelength_nm);
}

TEST(Config, UnknownKeysAreRejected) {
  ordered_json j;
  j["name"] = "typo";
  j["n_symbolz"] = 100000;
  EXPECT_THROW(parse_scenario(j), ConfigError);

  ordered_json nested;
  nested["name"] = "typo2";
  nested["receiver"]["dark_current"] = 1e-9;
  EXPECT_THROW(parse_scenario(nested), ConfigError);
}

TEST(Config, SchemaVersionMismatchIsRejected) {
  ordered_json j;
  j["name"] = "v2";
  j["schema_version"] = 2;
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(Config, WrongTypeIsRejected) {
  ordered_json j;
  j["name"] = "types";
  j["n_symbols"] = "many";
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(Config, BadValuesAreRejected) {
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.name = "bad/name";
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.name = "..";
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.name.clear();
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.n_symbols = 5000;  // too short for a BER measurement
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.equalizer.enabled = true;
    cfg.equalizer.cfg.n_taps = 0;
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.equalizer.enabled = true;
    cfg.equalizer.cfg.tap_spacing_s = 1.5e-11;  // not a whole sample at 100 GS/s
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
  {
    ScenarioConfig cfg = small_config("ok");
    cfg.metrics.warmup_fraction = 0.95;
    EXPECT_THROW(validate_scenario(cfg), ConfigError);
  }
}

TEST(Config, FileLoaderReportsPathAndParseErrors) {
  EXPECT_THROW(load_scenario_file("/nonexistent/nowhere.json"), ConfigError);

  const fs::path dir = scratch_dir("badjson");
  const fs::path p = dir / "broken.json";
  std::ofstream(p) << "{ not json";
  try {
    load_scenario_file(p.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
}

TEST(Presets, SixPresetsAndPairSymmetry) {
  const std::vector<std::string> names = preset_names();
  ASSERT_EQ(names.size(), 6u);
  for (const std::string& n : names) {
    const ScenarioConfig cfg = make_preset(n);
    EXPECT_EQ(cfg.name, n);
    EXPECT_EQ(cfg.n_symbols, 200000u);
  }
  EXPECT_THROW(make_preset("metro100km"), ConfigError);

  // The eq on/off pair at each length sees the identical channel.
  for (const std::string& base : {std::string("b2b"), std::string("l20km"), std::string("l80km")}) {
    const ScenarioConfig off = make_preset(base);
    const ScenarioConfig on = make_preset(base + "-eq");
    EXPECT_FALSE(off.equalizer.enabled);
    EXPECT_TRUE(on.equalizer.enabled);
    EXPECT_EQ(off.seed, on.seed);
    EXPECT_EQ(off.sop_seed, on.sop_seed);
    EXPECT_EQ(off.fiber.length_km, on.fiber.length_km);
    EXPECT_EQ(off.edfa.enabled, on.edfa.enabled);
  }
  EXPECT_TRUE(make_preset("l80km").edfa.enabled);
  EXPECT_FALSE(make_preset("l20km").edfa.enabled);
}

TEST(Outputs, ScenarioDirectoryLayout) {
  ScenarioConfig cfg = small_config("layout");
  cfg.equalizer.enabled = true;
  const ScenarioResult res = run_scenario(cfg);

  const fs::path out = scratch_dir("layout");
  write_scenario_outputs(res, out);

  const fs::path dir = out / "layout";
  ASSERT_TRUE(fs::exists(dir / "report.json"));
  ASSERT_TRUE(fs::exists(dir / "constellation.csv"));
  ASSERT_TRUE(fs::exists(dir / "taps.csv"));

  const ordered_json report = ordered_json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["scenario"], "layout");
  EXPECT_EQ(report["tool"]["name"], kToolName);
  EXPECT_GT(report["metrics"]["pol_extinction_db"].get<double>(), 10.0);
  EXPECT_GT(report["metrics"]["volts_per_unit"].get<double>(), 0.0);
  const int rot = report["metrics"]["ber"]["alignment"]["rotation_deg"].get<int>();
  EXPECT_TRUE(rot == 0 || rot == 90 || rot == 180 || rot == 270);

  const std::string cons = slurp(dir / "constellation.csv");
  EXPECT_EQ(cons.rfind("# scenario=layout scale=", 0), 0u);
  EXPECT_NE(cons.find("index,re,im"), std::string::npos);

  const std::string taps = slurp(dir / "taps.csv");
  EXPECT_EQ(taps.rfind("# scenario=layout", 0), 0u);
  EXPECT_NE(taps.find("sample_index,tap_name,re,im"), std::string::npos);
  EXPECT_NE(taps.find("h_xx_0"), std::string::npos);
  EXPECT_NE(taps.find("h_yy_1"), std::string::npos);
}

TEST(Outputs, EqualizerOffTapsFileIsHeaderOnly) {
  const ScenarioConfig cfg = small_config("noeq");
  const ScenarioResult res = run_scenario(cfg);
  ASSERT_TRUE(res.report["metrics"]["tap_summary"].is_null());

  const fs::path out = scratch_dir("noeq");
  write_scenario_outputs(res, out);
  const std::string taps = slurp(out / "noeq" / "taps.csv");
  EXPECT_EQ(taps, "# scenario=noeq\nsample_index,tap_name,re,im\n");
}

TEST(Suite, RunsAllRowsAndWritesSummary) {
  ScenarioConfig a = small_config("suite-a");
  ScenarioConfig b = small_config("suite-b");
  b.seed = 99;

  const fs::path out = scratch_dir("suite");
  const SuiteOutcome outcome = run_suite({a, b}, 2, out);

  ASSERT_EQ(outcome.rows.size(), 2u);
  EXPECT_TRUE(outcome.all_ok);
  EXPECT_EQ(outcome.rows[0].name, "suite-a");
  EXPECT_EQ(outcome.rows[1].name, "suite-b");
  EXPECT_TRUE(fs::exists(out / "suite-a" / "report.json"));
  EXPECT_TRUE(fs::exists(out / "suite-b" / "report.json"));

  const std::string csv = slurp(out / "summary.csv");
  EXPECT_EQ(csv.rfind("name,fiber_length_km,equalizer,ber,evm_percent\n", 0), 0u);
  const std::size_t pos_a = csv.find("\nsuite-a,");
  const std::size_t pos_b = csv.find("\nsuite-b,");
  ASSERT_NE(pos_a, std::string::npos);
  ASSERT_NE(pos_b, std::string::npos);
  EXPECT_LT(pos_a, pos_b);
}

TEST(Suite, FailingScenarioIsIsolated) {
  ScenarioConfig good = small_config("good");
  ScenarioConfig bad = small_config("bad");
  // A 1 kHz driver obliterates the eye: the decision stage cannot find any
  // alignment against the reference, and the scenario fails cleanly.
  bad.driver.f3db_hz = 1e3;

  const fs::path out = scratch_dir("suite-fail");
  const SuiteOutcome outcome = run_suite({bad, good}, 1, out);

  ASSERT_EQ(outcome.rows.size(), 2u);
  EXPECT_FALSE(outcome.all_ok);
  EXPECT_FALSE(outcome.rows[0].ok);
  EXPECT_FALSE(outcome.rows[0].error.empty());
  EXPECT_TRUE(outcome.rows[1].ok);

  const std::string csv = slurp(out / "summary.csv");
  EXPECT_EQ(csv.find("bad,"), std::string::npos);
  EXPECT_NE(csv.find("good,"), std::string::npos);
}

TEST(Suite, RejectsBadArguments) {
  const fs::path out = scratch_dir("suite-args");
  EXPECT_THROW(run_suite({}, 1, out), ConfigError);

  ScenarioConfig a = small_config("dup");
  EXPECT_THROW(run_suite({a, a}, 1, out), ConfigError);
  EXPECT_THROW(run_suite({a}, 0, out), ConfigError);
}

TEST(Suite, JobCountDoesNotChangeResults) {
  ScenarioConfig a = small_config("par-a");
  ScenarioConfig b = small_config("par-b");
  b.seed = 99;
  ScenarioConfig c = small_config("par-c");
  c.fiber.length_km = 20.0;

  const fs::path out1 = scratch_dir("jobs1");
  const fs::path out3 = scratch_dir("jobs3");
  run_suite({a, b, c}, 1, out1);
  run_suite({a, b, c}, 3, out3);

  for (const char* name : {"par-a", "par-b", "par-c"}) {
    EXPECT_EQ(slurp(out1 / name / "report.json"), slurp(out3 / name / "report.json")) << name;
    EXPECT_EQ(slurp(out1 / name / "constellation.csv"), slurp(out3 / name / "constellation.csv"))
        << name;
  }
  EXPECT_EQ(slurp(out1 / "summary.csv"), slurp(out3 / "summary.csv"));
}
