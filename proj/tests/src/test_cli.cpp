// End-to-end checks of the command-line driver: exit codes, report schemas,
// config-file layering, and determinism of emitted artifacts.  The binary
// under test is injected by the build as ICLFLOW_CLI_PATH.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("iclflow_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("stdout_" + std::to_string(counter));
  const fs::path err = scratch_dir() / ("stderr_" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(ICLFLOW_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  if (status >= 0 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

json parse(const RunResult& r) {
  CAPTURE(r.out);
  CAPTURE(r.err);
  return json::parse(r.out);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("version flag reports the package version and exits cleanly") {
  const RunResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("gradient validation passes against the pairing oracle") {
  const RunResult r =
      run_cli("validate-gradients --d 2 --N 2 --states 10 --seed 3");
  REQUIRE(r.exit_code == 0);
  const json j = parse(r);
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("pairing_oracle").at("checked").get<bool>());
  CHECK(j.at("pairing_oracle").at("worst_rel_error").get<double>() < 1e-12);
  CHECK(j.at("config").at("d").get<int>() == 2);
  CHECK(j.at("version").get<std::string>() == "0.1.0");
}

TEST_CASE("an injected fault fails validation and is localized to its term") {
  const RunResult r = run_cli(
      "validate-gradients --d 2 --N 2 --states 8 --seed 3 "
      "--inject-fault dz.t07 --fault-scale 1.001");
  REQUIRE(r.exit_code == 1);
  const json j = parse(r);
  CHECK_FALSE(j.at("pass").get<bool>());
  const json& loc = j.at("pairing_oracle").at("fault_localization");
  CHECK(loc.at("line").get<std::string>() == "dz.t07");
  CHECK(loc.at("localized").get<bool>());
  CHECK(loc.at("relative_scale").get<double>() ==
        doctest::Approx(0.001 / 1.001).epsilon(1e-6));
}

TEST_CASE("monte carlo fallback engages when the pairing oracle is skipped") {
  const RunResult r =
      run_cli("validate-gradients --d 3 --N 5 --states 6 --seed 11");
  REQUIRE(r.exit_code == 0);
  const json j = parse(r);
  CHECK_FALSE(j.at("pairing_oracle").at("checked").get<bool>());
  CHECK(j.at("pairing_oracle").at("status").get<std::string>() == "skipped");
  REQUIRE(j.contains("warnings"));
  bool found = false;
  for (const auto& w : j.at("warnings"))
    if (w.get<std::string>() == "wick: skipped") found = true;
  CHECK(found);
  CHECK(j.at("monte_carlo").at("checked").get<bool>());
  CHECK(j.at("monte_carlo").at("batch").get<long>() == 10000);
  CHECK(j.at("pass").get<bool>());
}

TEST_CASE("a zero-length horizon is a usage error") {
  const RunResult r = run_cli("simulate --system d1 --init zero --t-end 0");
  CHECK(r.exit_code == 64);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("unknown subcommands and unknown options are usage errors") {
  CHECK(run_cli("frobnicate").exit_code == 64);
  CHECK(run_cli("simulate --no-such-flag 1").exit_code == 64);
}

TEST_CASE("a diverging trajectory exits with the blow-up code") {
  const RunResult r = run_cli(
      "simulate --system d1 --N 1 --init random:4 --method rk4-fixed "
      "--dt 1e6 --t-end 1e7");
  REQUIRE(r.exit_code == 2);
  const json j = parse(r);
  CHECK(j.at("result").at("terminal").get<std::string>() == "non_finite");
  CHECK(j.at("result").at("last_time").is_number());
}

TEST_CASE("critical point inventories match the documented counts") {
  SUBCASE("simplified flow, positive leaf level: exactly the two speed points") {
    const RunResult r =
        run_cli("critical-points --system simplified --d 2 --N 2 --kappa 1");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    REQUIRE(j.at("points").size() == 2);
    CHECK(j.at("points").at(0).at("label").get<std::string>() == "A+");
    CHECK(j.at("points").at(1).at("label").get<std::string>() == "A-");
    for (const auto& pt : j.at("points"))
      CHECK(pt.at("residual_inf").get<double>() <= 1e-10);
  }
  SUBCASE("scalar flow at zero leaf level: nine points ending at the origin") {
    const RunResult r = run_cli("d1 critical-points --N 2 --kappa 0");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    REQUIRE(j.at("points").size() == 9);
    CHECK(j.at("points").back().at("label").get<std::string>() == "O");
    CHECK(j.at("points").back().at("kind").get<std::string>() == "O");
  }
  SUBCASE("scalar flow away from zero: eight points with tight residuals") {
    const RunResult r = run_cli("d1 critical-points --N 1 --kappa 1");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    REQUIRE(j.at("points").size() == 8);
    for (const auto& pt : j.at("points")) {
      CHECK(pt.at("residual_inf").get<double>() <= 1e-10);
      CHECK(std::abs(pt.at("kappa").get<double>() - 1.0) <= 1e-10);
    }
    // The four speed-type points sit at the global minimum -1/(2a).
    const double alpha = 3.0;  // (N + 2) / N at N = 1
    int minima = 0;
    for (const auto& pt : j.at("points"))
      if (pt.at("kind").get<std::string>() == "A") {
        ++minima;
        CHECK(pt.at("loss").get<double>() ==
              doctest::Approx(-0.5 / alpha).epsilon(1e-12));
      }
    CHECK(minima == 4);
  }
}

TEST_CASE("kappa sweep emits the pinned csv column layout") {
  const RunResult r = run_cli(
      "sweep-kappa --system simplified --d 2 --N 2 --kappa-min -1 "
      "--kappa-max 1 --steps 5 --format csv");
  REQUIRE(r.exit_code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "kappa,a,V11,V22,eig_min,eig_max,zero_mult");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string& row = rows[i];
    CHECK(std::count(row.begin(), row.end(), ',') == 6);
  }
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
  const fs::path f1 = scratch_dir() / "rerun_1.json";
  const fs::path f2 = scratch_dir() / "rerun_2.json";
  const std::string args =
      "simulate --system simplified --d 2 --N 2 --init random --seed 7 "
      "--t-end 5 --out ";
  REQUIRE(run_cli(args + f1.string()).exit_code == 0);
  REQUIRE(run_cli(args + f2.string()).exit_code == 0);
  const std::string a = slurp(f1);
  const std::string b = slurp(f2);
  REQUIRE_FALSE(a.empty());
  CHECK(a == b);
}

TEST_CASE("config files fill unset options and explicit flags win") {
  const fs::path cfg = write_file("defaults.json", R"({"kappa": 1.0, "N": 1})");
  SUBCASE("values are taken from the file") {
    const RunResult r = run_cli("d1 critical-points --config " + cfg.string());
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    CHECK(j.at("config").at("kappa").get<double>() == 1.0);
    CHECK(j.at("config").at("N").get<int>() == 1);
    CHECK(j.at("points").size() == 8);
  }
  SUBCASE("a flag on the command line overrides the file") {
    const RunResult r =
        run_cli("d1 critical-points --config " + cfg.string() + " --kappa 0");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    CHECK(j.at("config").at("kappa").get<double>() == 0.0);
    CHECK(j.at("points").size() == 9);
  }
  SUBCASE("keys that match no option are rejected") {
    const fs::path bad = write_file("bad.json", R"({"kappa": 1.0, "nope": 2})");
    CHECK(run_cli("d1 critical-points --config " + bad.string()).exit_code ==
          64);
  }
}

TEST_CASE("state files seed the simulation") {
  SUBCASE("scalar system state file") {
    const fs::path st =
        write_file("d1_state.json",
                   R"({"U": 0.1, "z": 0.2, "Z": 0.3, "v": 0.4})");
    const RunResult r = run_cli("simulate --system d1 --N 2 --init " +
                                st.string() + " --t-end 1");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    // -U^2 + z^2 - Z^2 + v^2 at the requested start.
    const double kappa0 = -0.01 + 0.04 - 0.09 + 0.16;
    CHECK(j.at("snapshots").at(0).at("kappa").get<double>() ==
          doctest::Approx(kappa0).epsilon(1e-12));
    CHECK(j.at("result").at("kappa_drift").get<double>() < 1e-8);
  }
  SUBCASE("matrix system state file") {
    const fs::path st = write_file(
        "simp_state.json", R"({"U": [[0.1, 0.0], [0.0, 0.2]], "v": 0.3})");
    const RunResult r = run_cli("simulate --system simplified --d 2 --N 2 "
                                "--init " +
                                st.string() + " --t-end 1");
    REQUIRE(r.exit_code == 0);
    const json j = parse(r);
    const double kappa0 = 0.09 - (0.01 + 0.04);
    CHECK(j.at("snapshots").at(0).at("kappa").get<double>() ==
          doctest::Approx(kappa0).epsilon(1e-12));
  }
  SUBCASE("a state file with the wrong shape is a usage error") {
    const fs::path st =
        write_file("short_state.json", R"({"U": [[0.1]], "v": 0.3})");
    CHECK(run_cli("simulate --system simplified --d 2 --N 2 --init " +
                  st.string() + " --t-end 1")
              .exit_code == 64);
  }
}

TEST_CASE("csv trajectories expose the time series columns") {
  const RunResult r = run_cli(
      "simulate --system d1 --N 1 --init random:2 --t-end 1 --format csv "
      "--save-states");
  REQUIRE(r.exit_code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == "t,loss,kappa,grad_inf_norm,x0,x1,x2,x3");
  CHECK(rows[1].rfind("0,", 0) == 0);  // the trajectory starts at t = 0
}

TEST_CASE("basin probe tallies account for every sample") {
  const RunResult r = run_cli(
      "basin-probe --system d1 --N 1 --samples 6 --seed 3 --t-end 200");
  REQUIRE(r.exit_code == 0);
  const json j = parse(r);
  const json& res = j.at("result");
  long hits = 0;
  for (const auto& [label, count] : res.at("attractor_hits").items()) {
    (void)label;
    hits += count.get<long>();
  }
  CHECK(hits + res.at("unclassified").get<long>() == 6);
  CHECK(res.at("max_loss_increase").get<double>() <= 1e-10);
}

TEST_CASE("phase portraits cover the requested grid") {
  const RunResult r =
      run_cli("d1 portrait --N 1 --grid 3 --range 1.5 --format csv");
  REQUIRE(r.exit_code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == "x,y,kappa,label,terminal,t_final,loss_final");
}
