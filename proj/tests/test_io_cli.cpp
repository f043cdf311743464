#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "odmr/errors.hpp"
#include "odmr/io.hpp"

using namespace odmr;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

struct RunResult {
  int exit_code;
  std::string out;
};

// Runs the CLI with a shell redirect; stdout captured, stderr passed through.
RunResult run_cli(const std::string& args) {
  const std::string out_file = "cli_stdout.tmp";
  const std::string cmd = std::string(ODMR_BIN) + " " + args + " > " + out_file;
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.out = slurp(out_file);
  std::remove(out_file.c_str());
  return r;
}

}  // namespace

TEST_CASE("format_double round-trips and prefers short forms") {
  CHECK(format_double(2700.0) == "2700");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  for (double v : {1.0 / 3.0, 2870.000000001, 1e-300, -0.1237856493027835}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("spectrum CSV round-trip is bit exact") {
  SyntheticSpectrum s;
  s.grid = {2700.0, 3040.0, 32};
  for (std::size_t i = 0; i < 32; ++i)
    s.values.push_back(1.0 - 0.01 / (1.0 + static_cast<double>(i)));

  const std::string path = "roundtrip_test.csv";
  write_spectrum_csv(path, s);
  const auto back = read_spectrum_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.values.size() == 32);
  CHECK(back.grid.start_mhz == s.grid.start_mhz);
  CHECK(back.grid.stop_mhz == s.grid.stop_mhz);
  for (std::size_t i = 0; i < 32; ++i) CHECK(back.values[i] == s.values[i]);
}

TEST_CASE("csv reader rejects malformed input with line numbers") {
  const std::string path = "bad_test.csv";

  spit(path, "wrong,header\n1,2\n");
  CHECK_THROWS_WITH_AS(read_spectrum_csv(path),
                       doctest::Contains("line 1"), csv_format_error);

  spit(path, "frequency_mhz,signal\n2870,1.0,extra\n");
  CHECK_THROWS_WITH_AS(read_spectrum_csv(path),
                       doctest::Contains("line 2"), csv_format_error);

  spit(path, "frequency_mhz,signal\n2870,1.0\nnope,1.0\n");
  CHECK_THROWS_WITH_AS(read_spectrum_csv(path),
                       doctest::Contains("line 3"), csv_format_error);

  spit(path, "frequency_mhz,signal\n2870,1.0\n");
  CHECK_THROWS_AS(read_spectrum_csv(path), csv_format_error);

  spit(path, "frequency_mhz,signal\n2800,1\n2810,1\n2850,1\n");
  CHECK_THROWS_WITH_AS(read_spectrum_csv(path),
                       doctest::Contains("uniformly"), csv_format_error);

  std::remove(path.c_str());
  CHECK_THROWS_AS(read_spectrum_csv("does_not_exist_test.csv"), io_error);
}

TEST_CASE("heat-map CSV layout") {
  DipCountMap map;
  map.theta_axis = {0.0, 180.0, 90.0, {0.0, 90.0, 180.0}};
  map.phi_axis = {0.0, 360.0, 180.0, {0.0, 180.0, 360.0}};
  map.counts = {2, 2, 2, 4, 8, 4, 2, 2, 2};

  const std::string path = "heatmap_test.csv";
  write_heatmap_csv(path, map);
  const std::string text = slurp(path);
  std::remove(path.c_str());

  std::istringstream lines(text);
  std::string l0, l1, l2, l3;
  std::getline(lines, l0);
  std::getline(lines, l1);
  std::getline(lines, l2);
  std::getline(lines, l3);
  CHECK(l0 == "theta_deg\\phi_deg,0,180,360");
  CHECK(l1 == "0,2,2,2");
  CHECK(l2 == "90,4,8,4");
  CHECK(l3 == "180,2,2,2");
}

TEST_CASE("svg rendering contains a cell per run and a legend") {
  DipCountMap map;
  map.theta_axis = {0.0, 180.0, 90.0, {0.0, 90.0, 180.0}};
  map.phi_axis = {0.0, 360.0, 180.0, {0.0, 180.0, 360.0}};
  map.counts = {2, 2, 2, 4, 8, 4, 2, 2, 2};
  const std::string svg = heatmap_svg(map);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("8 dips") != std::string::npos);
  CHECK(svg.find("1 dip<") != std::string::npos);
}

TEST_CASE("atomic writes leave no partial file behind") {
  CHECK_THROWS_AS(write_text_atomic("no_such_dir_test/x.txt", "hi"), io_error);
  std::ifstream probe("no_such_dir_test/x.txt.tmp");
  CHECK(!probe.good());
}

TEST_CASE("cli: simulate is deterministic and exit codes hold") {
  const auto r1 = run_cli(
      "simulate --bmag 3 --theta 0 --phi 0 --noise-sigma 0.001 --seed 7 "
      "--out-spectrum sim_a.csv --out-transitions sim_a.json");
  REQUIRE(r1.exit_code == 0);
  const auto r2 = run_cli(
      "simulate --bmag 3 --theta 0 --phi 0 --noise-sigma 0.001 --seed 7 "
      "--out-spectrum sim_b.csv --out-transitions sim_b.json");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp("sim_a.csv") == slurp("sim_b.csv"));
  // The transitions document echoes its companion CSV path; outside that
  // field the two runs must agree exactly.
  auto da = json::parse(slurp("sim_a.json"));
  auto db = json::parse(slurp("sim_b.json"));
  da.at("result").erase("spectrum_csv");
  db.at("result").erase("spectrum_csv");
  CHECK(da == db);

  const auto doc = json::parse(slurp("sim_a.json"));
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("config").at("seed") == 7);
  CHECK(doc.at("result").at("case").at("label") == "2");
  for (const auto& pair : doc.at("result").at("first_order")) {
    CHECK(pair.at("f_minus_mhz").get<double>() == doctest::Approx(2821.5).epsilon(1e-4));
    CHECK(pair.at("f_plus_mhz").get<double>() == doctest::Approx(2918.5).epsilon(1e-4));
  }

  std::remove("sim_a.csv");
  std::remove("sim_b.csv");
  std::remove("sim_a.json");
  std::remove("sim_b.json");
}

TEST_CASE("cli: usage errors exit with 2") {
  CHECK(run_cli("simulate --bx 1 --by 1").exit_code == 2);       // incomplete
  CHECK(run_cli("simulate --bx 1 --by 1 --bz 1 --bmag 3 --theta 0 --phi 0")
            .exit_code == 2);                                    // both forms
  CHECK(run_cli("classify --projections 1 1 1 1").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("fit").exit_code == 2);                          // missing input
}

TEST_CASE("cli: io errors exit with 3") {
  CHECK(run_cli("fit missing_spectrum_test.csv").exit_code == 3);
  spit("garbled_test.csv", "frequency_mhz,signal\n1,2,3\n");
  CHECK(run_cli("fit garbled_test.csv").exit_code == 3);
  std::remove("garbled_test.csv");
  CHECK(run_cli("simulate --bx 0 --by 0 --bz 3 "
                "--out-spectrum no_such_dir_test/s.csv")
            .exit_code == 3);
}

TEST_CASE("cli: computation errors exit with 4 and carry a typed payload") {
  SyntheticSpectrum flat;
  flat.grid = {2700.0, 3040.0, 256};
  flat.values.assign(256, 1.0);
  write_spectrum_csv("flat_test.csv", flat);

  const auto r = run_cli("fit flat_test.csv");
  CHECK(r.exit_code == 4);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("error").at("type") == "no_peaks_found");
  std::remove("flat_test.csv");

  const auto ru = run_cli("invert --dips 2870 2890");
  CHECK(ru.exit_code == 4);
  CHECK(json::parse(ru.out).at("error").at("type") == "unpairable_dips");
}

TEST_CASE("cli: classify cases from the command line") {
  auto r = run_cli("classify --bx 1 --by 1 --bz 2");
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out).at("result").at("case").at("label") == "5");

  r = run_cli("classify --bx 1 --by 1 --bz 0");
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out).at("result").at("case").at("label") == "3");

  r = run_cli("classify --projections 1 -1 0.5 -0.5");
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out).at("result").at("projections").at("b_kappa_mt") == 1.0);
}

TEST_CASE("cli: invert --dips bypasses fitting") {
  const auto r = run_cli("invert --dips 2870");
  REQUIRE(r.exit_code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("result").at("candidate_count") == 1);
  CHECK(doc.at("result").at("candidates")[0].at("field").at("magnitude_mt") == 0.0);
}

TEST_CASE("cli: simulate then fit round-trip") {
  auto r = run_cli(
      "simulate --bmag 3 --theta 0 --phi 0 --out-spectrum rt_test.csv "
      "--out-transitions rt_test.json");
  REQUIRE(r.exit_code == 0);

  r = run_cli("fit rt_test.csv --n-peaks 2");
  REQUIRE(r.exit_code == 0);
  const auto two = json::parse(r.out);
  const auto& peaks = two.at("result").at("fit").at("peaks");
  REQUIRE(peaks.size() == 2);
  const double c0 = peaks[0].at("center_mhz").get<double>();
  const double c1 = peaks[1].at("center_mhz").get<double>();
  CHECK(c0 < 2870.0);
  CHECK(c1 > 2870.0);
  CHECK(c0 == doctest::Approx(2821.5).epsilon(1e-4));
  CHECK(c1 == doctest::Approx(2918.5).epsilon(1e-4));

  // Forcing a single peak must fit worse than the two-peak model.
  r = run_cli("fit rt_test.csv --n-peaks 1");
  REQUIRE(r.exit_code == 0);
  const auto one = json::parse(r.out);
  CHECK(one.at("result").at("fit").at("converged") == true);
  CHECK(one.at("result").at("fit").at("residual_rms").get<double>() >
        two.at("result").at("fit").at("residual_rms").get<double>());

  std::remove("rt_test.csv");
  std::remove("rt_test.json");
}

TEST_CASE("cli: config file feeds defaults, flags override") {
  spit("cfg_test.json",
       "{\"noise_sigma\": 0.002, \"seed\": 11, \"grid_points\": 512}");
  auto r = run_cli(
      "--config cfg_test.json simulate --bx 0 --by 0 --bz 3 --seed 12 "
      "--out-spectrum cfgsim_test.csv --out-transitions cfgsim_test.json");
  REQUIRE(r.exit_code == 0);
  const auto doc = json::parse(slurp("cfgsim_test.json"));
  CHECK(doc.at("config").at("noise_sigma") == 0.002);
  CHECK(doc.at("config").at("seed") == 12);
  CHECK(doc.at("config").at("grid_points") == 512);

  // The echoed config reproduces the run when fed back verbatim.
  spit("cfg_echo_test.json", doc.at("config").dump());
  auto r2 = run_cli(
      "--config cfg_echo_test.json simulate --bx 0 --by 0 --bz 3 "
      "--out-spectrum cfgsim2_test.csv --out-transitions cfgsim2_test.json");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp("cfgsim_test.csv") == slurp("cfgsim2_test.csv"));

  for (const char* f : {"cfg_test.json", "cfg_echo_test.json", "cfgsim_test.csv",
                        "cfgsim_test.json", "cfgsim2_test.csv", "cfgsim2_test.json"})
    std::remove(f);
}

TEST_CASE("cli: heatmap outputs and symmetry") {
  auto r = run_cli("heatmap --bmag 3 --step 30 --out-csv hm_test.csv "
                   "--out-meta hm_meta_test.json --svg hm_test.svg");
  REQUIRE(r.exit_code == 0);
  const auto meta = json::parse(slurp("hm_meta_test.json"));
  CHECK(meta.at("result").at("theta_points") == 7);
  CHECK(meta.at("result").at("phi_points") == 13);
  CHECK(meta.at("result").at("min_count") >= 2);

  const std::string csv = slurp("hm_test.csv");
  std::istringstream lines(csv);
  std::string header, first_row;
  std::getline(lines, header);
  std::getline(lines, first_row);
  CHECK(first_row == "0,2,2,2,2,2,2,2,2,2,2,2,2,2");
  CHECK(slurp("hm_test.svg").find("<svg") == 0);

  for (const char* f : {"hm_test.csv", "hm_meta_test.json", "hm_test.svg"})
    std::remove(f);
}
