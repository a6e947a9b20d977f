#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spinsim/plot.hpp"
#include "spinsim/report.hpp"

using namespace spinsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_lines(const std::string& text, int n) {
  std::size_t pos = 0;
  for (int i = 0; i < n && pos != std::string::npos; ++i) pos = text.find('\n', pos + (i ? 1 : 0));
  return text.substr(0, pos + 1);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spinsim_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPINSIM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kConfigs = SPINSIM_SOURCE_DIR "/configs/";

}  // namespace

TEST_CASE("telemetry header and first record are pinned") {
  SystemModel m = load_config(kConfigs + "reference.json");
  m.sim.t_end = 0.5;
  std::ostringstream csv;
  write_telemetry_csv(csv, run_mission(m).telemetry);
  CHECK(first_lines(csv.str(), 2) == slurp(SPINSIM_SOURCE_DIR "/tests/golden/reference_head.csv"));
}

TEST_CASE("events file lists reached events in order") {
  MissionEvents ev;
  ev.t[0] = 0.0;
  ev.t[1] = 12.5;
  std::ostringstream out;
  write_events_csv(out, ev);
  CHECK(out.str() == "event,name,t_s\nt0,synch_starts,0\nt1,capture_starts,12.5\n");
}

TEST_CASE("summary of a detumbling-only run") {
  const SystemModel m = reference_model();
  RunOptions opt;
  opt.phase_only = Phase::C;
  const MissionResult r = run_mission(m, opt);
  const std::string text = emit_summary(m, r);
  CHECK(text.find("status: success") != std::string::npos);
  CHECK(text.find("constraint violations: 0") != std::string::npos);
  CHECK(text.find("transfer ratio") != std::string::npos);
  CHECK(r.stats.constraint_violations == 0);
  CHECK(r.stats.sigma_max <= m.limits.tau_r_max + 1e-12);
}

TEST_CASE("svg rendering") {
  MissionEvents ev;
  ev.t[0] = 0.0;
  ev.t[1] = 1.0;
  const std::string svg = render_svg("a < b", {0.0, 1.0, 2.0}, {{"y", {{"s", {1.0, 2.0, 0.5}}}}}, ev);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("command line") {
  SUBCASE("reference run with plots") {
    const fs::path out = scratch("reference");
    CHECK(run_cli("run --config " + kConfigs + "reference.json --plot --out " + out.string()) == 0);
    for (const auto& name : plot_file_names()) CHECK(fs::file_size(out / name) > 1000);
    CHECK(fs::exists(out / "telemetry.csv"));
    CHECK(fs::exists(out / "events.csv"));
    CHECK(slurp(out / "summary.txt").find("status: success") != std::string::npos);
    fs::remove_all(out);
  }

  SUBCASE("invalid configuration writes nothing") {
    const fs::path out = scratch("bad");
    CHECK(run_cli("run --config " + kConfigs + "bad.json --out " + out.string()) == 1);
    CHECK_FALSE(fs::exists(out));
  }

  SUBCASE("unknown flag") { CHECK(run_cli("run --config " + kConfigs + "reference.json --bogus") == 64); }

  SUBCASE("phase C in isolation") {
    const fs::path out = scratch("phase_c");
    CHECK(run_cli("run --config " + kConfigs + "reference.json --phase C --out " + out.string()) == 0);
    const std::string events = slurp(out / "events.csv");
    CHECK(events.find("detumbling_completes") != std::string::npos);
    fs::remove_all(out);
  }

  SUBCASE("mission that cannot finish in time") {
    const fs::path out = scratch("short");
    CHECK(run_cli("run --config " + kConfigs + "reference.json --duration 5 --out " + out.string()) == 2);
    fs::remove_all(out);
  }

  SUBCASE("torque-limit sweep: halving the wheel limit roughly doubles detumbling") {
    const fs::path out = scratch("sweep");
    fs::create_directories(out);
    {
      std::ofstream f(out / "sweep.json");
      f << R"([{"name": "full", "overrides": {}},
               {"name": "half", "overrides": {"limits.tau_r_max_Nm": 0.05}}])";
    }
    CHECK(run_cli("run --config " + kConfigs + "reference.json --phase C --sweep " + (out / "sweep.json").string() +
                  " --out " + out.string()) == 0);
    const auto detumble_time = [&](const char* name) {
      std::istringstream in(slurp(out / name / "events.csv"));
      std::string line;
      double t3 = 0, t4 = 0;
      while (std::getline(in, line)) {
        const double t = std::atof(line.substr(line.rfind(',') + 1).c_str());
        if (line.rfind("t3,", 0) == 0) t3 = t;
        if (line.rfind("t4,", 0) == 0) t4 = t;
      }
      return t4 - t3;
    };
    const double ratio = detumble_time("half") / detumble_time("full");
    MESSAGE("detumbling duration ratio " << ratio);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
    fs::remove_all(out);
  }

  SUBCASE("sweep with one invalid case writes nothing") {
    const fs::path out = scratch("sweep_bad");
    fs::create_directories(out);
    {
      std::ofstream f(out / "sweep.json");
      f << R"([{"name": "ok", "overrides": {}}, {"name": "broken", "overrides": {"target.mass_kg": -1}}])";
    }
    CHECK(run_cli("run --config " + kConfigs + "reference.json --sweep " + (out / "sweep.json").string() +
                  " --out " + out.string()) == 1);
    CHECK_FALSE(fs::exists(out / "ok"));
    fs::remove_all(out);
  }
}
