#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fairalloc/fairalloc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairalloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBreach = 2;
constexpr int kExitPropertyFailure = 3;

struct Options {
  std::string command;
  std::string scenario;
  std::string out;  // run defaults to ./out; verify writes a report only when given
  std::int64_t stride = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

/// Resolves a builtin name or a file into a scenario document with the
/// command-line seed and overrides applied.
json resolve_document(const Options& opt) {
  json doc;
  if (opt.scenario == "paper-fig5") {
    doc = io::scenario_to_json(build_identical_four());
  } else if (opt.scenario == "paper-fig6") {
    auto sc = build_random(30, opt.seed.value_or(1));
    sc.name = "paper-fig6";
    doc = io::scenario_to_json(sc);
  } else {
    std::ifstream in(opt.scenario);
    if (!in) throw io::ScenarioError("", "cannot open scenario file '" + opt.scenario + "'");
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw io::ScenarioError("", std::string("malformed JSON: ") + e.what());
    }
  }
  if (opt.seed) doc[json::json_pointer("/engine/seed")] = *opt.seed;
  for (const auto& o : opt.overrides) io::apply_override(doc, o);
  return doc;
}

/// Hard model and config checks shared by every command. Returns false and
/// prints the problems when the scenario is unusable.
bool report_validation(const Scenario& sc, bool verbose) {
  bool ok = true;
  const auto cfg_rep = validate_config(sc.cfg, sc.specs.size(), sc.specs);
  for (const auto& f : cfg_rep.findings) {
    const bool err = f.severity == Severity::error;
    ok = ok && !err;
    if (err || verbose)
      std::cout << (err ? "error" : "warning") << " [engine/" << f.code << "] " << f.message << '\n';
  }
  for (std::size_t i = 0; i < sc.specs.size(); ++i) {
    const auto& t = sc.specs[i];
    const auto rep = validate_assumptions(*t.utility, demand_domain(t.demand));
    ok = ok && rep.ok();
    if (!rep.ok() || verbose)
      std::cout << (rep.ok() ? "ok   " : "error") << " [tasks/" << i << "/model] " << rep.describe() << '\n';
  }
  return ok;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
}

int cmd_run(const Options& opt, const Scenario& sc) {
  if (!report_validation(sc, false)) return kExitConfig;
  const std::string dir = opt.out.empty() ? "out" : opt.out;
  fs::create_directories(dir);
  const auto out = run_scenario(sc, opt.stride);

  {
    std::ofstream trace(fs::path(dir) / "trace.csv", std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace.csv in " + dir);
    io::write_trace_csv(trace, out.records, sc.specs.size());
  }
  json summary = io::result_to_json(out.result);
  summary["scenario"] = sc.name;
  write_file(fs::path(dir) / "summary.json", summary.dump(2) + "\n");

  // The resolved document reruns the same scenario bit for bit.
  json manifest = io::scenario_to_json(sc);
  manifest["run"] = {{"source", opt.scenario}, {"stride", opt.stride}, {"out", dir},
                     {"formats", {"csv", "json"}}};
  write_file(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");

  if (out.status.breach) {
    std::cerr << "feasibility breach: " << out.status.breach->what() << '\n';
    return kExitBreach;
  }
  std::cout << "completed " << out.status.steps_completed << " steps, " << out.records.size()
            << " trace rows in " << dir << '\n';
  return kExitOk;
}

int cmd_verify(const Options& opt, const Scenario& sc) {
  if (!report_validation(sc, false)) return kExitConfig;
  const auto rep = verify_scenario(sc);
  std::cout << std::left << std::setw(20) << "property" << std::setw(6) << "pass" << "detail\n";
  for (const auto& i : rep.items)
    std::cout << std::left << std::setw(20) << i.name << std::setw(6) << (i.pass ? "PASS" : "FAIL") << i.detail
              << '\n';
  std::cout << (rep.all_pass() ? "all properties pass" : "some properties FAIL") << '\n';
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_file(fs::path(opt.out) / "verify.json", verify_to_json(rep).dump(2) + "\n");
  }
  if (rep.breach) return kExitBreach;
  return rep.all_pass() ? kExitOk : kExitPropertyFailure;
}

int cmd_validate(const Scenario& sc) {
  const bool ok = report_validation(sc, true);
  const auto b = oracle::bounds(sc.specs, sc.cfg);
  std::cout << "n=" << b.n << " lambda_min=" << b.lambda_min << " c_max=" << b.c_max
            << " alpha*=" << b.alpha_star << " beta*=" << b.beta_star << " safe_epsilon=" << b.safe_epsilon
            << " kappa=" << b.theorem1_kappa << '\n';
  std::cout << (ok ? "valid" : "INVALID") << '\n';
  return ok ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-driven fair resource allocation simulator"};
  Options opt;
  std::uint64_t seed = 0;
  app.add_option("command", opt.command, "run | verify | validate")
      ->required()
      ->check(CLI::IsMember({"run", "verify", "validate"}));
  app.add_option("scenario", opt.scenario, "scenario JSON file or builtin (paper-fig5, paper-fig6)")->required();
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--stride", opt.stride, "keep every N-th step in the trace")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "engine seed (also the generator seed for paper-fig6)");
  app.add_option("--set", opt.overrides, "override key=value; bare keys address engine fields")
      ->allow_extra_args(false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) opt.seed = seed;

  try {
    const json doc = resolve_document(opt);
    const Scenario sc = io::scenario_from_json(doc);
    if (opt.command == "run") return cmd_run(opt, sc);
    if (opt.command == "verify") return cmd_verify(opt, sc);
    return cmd_validate(sc);
  } catch (const FeasibilityBreach& e) {
    std::cerr << "feasibility breach: " << e.what() << '\n';
    return kExitBreach;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
