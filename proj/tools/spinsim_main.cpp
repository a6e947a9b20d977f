// spinsim: run the capture-and-detumble mission from a JSON configuration.

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinsim/error.hpp"
#include "spinsim/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitMission = 2;
constexpr int kExitUsage = 64;

struct Options {
  std::string config;
  std::string out;
  std::optional<double> dt;
  std::optional<double> duration;
  bool plot = false;
  std::string phase;
  bool appendix_literal = false;
  std::string sweep;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw spinsim::ValidationError(path, "cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Set a dotted path such as "limits.tau_r_max_Nm" or "links.2.mass_kg".
void apply_override(nlohmann::json& doc, const std::string& path, const nlohmann::json& value) {
  nlohmann::json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string& k = keys[i];
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(k);
      } catch (const std::exception&) {
        throw spinsim::ValidationError(path, "expected an array index at '" + k + "'");
      }
      if (idx >= node->size()) throw spinsim::ValidationError(path, "index out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) throw spinsim::ValidationError(path, "cannot descend into '" + k + "'");
      node = &(*node)[k];
    }
  }
  *node = value;
}

spinsim::SystemModel build_model(const std::string& text, const Options& opt) {
  spinsim::SystemModel model = spinsim::parse_config(text);
  if (opt.dt) model.sim.dt = *opt.dt;
  if (opt.duration) model.sim.t_end = *opt.duration;
  if (opt.appendix_literal) model.sim.appendix_literal = true;
  spinsim::validate(model);
  return model;
}

std::optional<spinsim::Phase> parse_phase(const std::string& p) {
  if (p.empty()) return std::nullopt;
  if (p == "A") return spinsim::Phase::A;
  if (p == "B") return spinsim::Phase::B;
  return spinsim::Phase::C;
}

int run_one(const spinsim::SystemModel& model, const Options& opt, const std::filesystem::path& dir,
            std::ostream& log) {
  spinsim::RunOptions run;
  run.phase_only = parse_phase(opt.phase);
  const spinsim::MissionResult result = spinsim::run_mission(model, run);
  spinsim::write_outputs(dir, model, result, opt.plot);

  log << dir.string() << ": " << (result.success ? "success" : "FAILURE");
  if (!result.failure.empty()) log << " (" << result.failure << ")";
  log << ", t = " << spinsim::format_double(result.final_state.t) << " s";
  const double ratio = spinsim::transfer_ratio(result);
  if (result.final_state.phase == spinsim::Phase::Done && ratio == ratio) {
    log << ", transfer ratio " << ratio;
  }
  log << '\n';
  return result.success ? kExitOk : kExitMission;
}

int run_sweep(const Options& opt, const std::filesystem::path& out) {
  const std::string base_text = read_file(opt.config);
  nlohmann::json base = nlohmann::json::parse(base_text, nullptr, false);
  nlohmann::json cases = nlohmann::json::parse(read_file(opt.sweep), nullptr, false);
  if (base.is_discarded()) throw spinsim::ValidationError(opt.config, "malformed JSON");
  if (cases.is_discarded() || !cases.is_array()) {
    throw spinsim::ValidationError(opt.sweep, "expected a JSON array of {name, overrides}");
  }

  // Validate every case before any output is written.
  std::vector<std::pair<std::string, spinsim::SystemModel>> runs;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const std::string field = "sweep[" + std::to_string(i) + "]";
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
      throw spinsim::ValidationError(field + ".name", "missing case name");
    }
    const std::string name = c["name"].get<std::string>();
    if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
      throw spinsim::ValidationError(field + ".name", "must be a plain directory name");
    }
    nlohmann::json doc = base;
    if (c.contains("overrides")) {
      if (!c["overrides"].is_object()) throw spinsim::ValidationError(field + ".overrides", "expected an object");
      for (const auto& [path, value] : c["overrides"].items()) apply_override(doc, path, value);
    }
    try {
      runs.emplace_back(name, build_model(doc.dump(), opt));
    } catch (const spinsim::ValidationError& e) {
      throw spinsim::ValidationError(field + " (" + name + ") " + e.field(), e.what());
    }
  }

  std::vector<std::future<std::pair<int, std::string>>> jobs;
  for (const auto& [name, model] : runs) {
    jobs.push_back(std::async(std::launch::async, [&, dir = out / name]() {
      std::ostringstream log;
      int code = kExitMission;
      try {
        code = run_one(model, opt, dir, log);
      } catch (const std::exception& e) {
        log << dir.string() << ": error: " << e.what() << '\n';
      }
      return std::make_pair(code, log.str());
    }));
  }
  int worst = kExitOk;
  for (auto& j : jobs) {
    const auto [code, text] = j.get();
    std::cout << text;
    worst = std::max(worst, code);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spinning-target capture and detumbling mission simulator"};
  app.require_subcommand(1);
  Options opt;
  CLI::App* run = app.add_subcommand("run", "Run a mission and write telemetry, events and a summary");
  run->add_option("--config", opt.config, "Mission configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", opt.out, "Output directory (default: $SPINSIM_OUT or ./spinsim_out)");
  run->add_option("--dt", opt.dt, "Integration step override, s")->check(CLI::PositiveNumber);
  run->add_option("--duration", opt.duration, "Simulated duration override, s")->check(CLI::PositiveNumber);
  run->add_flag("--plot", opt.plot, "Also write the five SVG figures");
  run->add_option("--phase", opt.phase, "Run one phase in isolation")->check(CLI::IsMember({"A", "B", "C"}));
  run->add_flag("--appendix-literal", opt.appendix_literal, "Bound the wheel-torque quadratic with the end-effector limit instead of the wheel limit");
  run->add_option("--sweep", opt.sweep, "JSON array of {name, overrides} cases run concurrently")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  std::filesystem::path out = opt.out;
  if (out.empty()) {
    const char* env = std::getenv("SPINSIM_OUT");
    out = env && *env ? env : "spinsim_out";
  }

  try {
    if (!opt.sweep.empty()) return run_sweep(opt, out);
    const spinsim::SystemModel model = build_model(read_file(opt.config), opt);
    return run_one(model, opt, out, std::cout);
  } catch (const spinsim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const spinsim::Error& e) {
    std::cerr << "mission failure: " << e.what() << '\n';
    return kExitMission;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMission;
  }
}
