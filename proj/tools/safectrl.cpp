// Command-line front end for the safety-controller workbench: generates the
// controller design space, checks it, synthesises and extracts a controller,
// and validates it in the discrete-event work cell.

#include <sys/stat.h>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "safectrl/mtl.hpp"
#include "safectrl/pipeline.hpp"

using namespace safectrl;

namespace {

void ensure_dir(const std::string& path) {
  ::mkdir(path.c_str(), 0755);  // ignore EEXIST
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

McOptions mc_options(const ProjectConfig& cfg) {
  McOptions o;
  o.epsilon = cfg.epsilon;
  return o;
}

std::string out_path(const ProjectConfig& cfg, const std::string& name) {
  std::string dir = cfg.resolve(cfg.out_dir);
  ensure_dir(dir);
  return dir + "/" + name;
}

int cmd_generate(const ProjectConfig& cfg) {
  GeneratedModel mdp = build_mdp(cfg);
  GeneratedModel pd = build_pdtmc(cfg);
  GeneratedModel base = build_baseline(cfg);
  write_file(out_path(cfg, "design_space.pgcl"), mdp.text);
  write_file(out_path(cfg, "design_space_pdtmc.pgcl"), pd.text);
  write_file(out_path(cfg, "baseline.pgcl"), base.text);
  std::printf("design space: %d commands, %d reward items\n", mdp.command_count,
              mdp.reward_item_count);
  std::printf("written: design_space.pgcl design_space_pdtmc.pgcl baseline.pgcl\n");
  return 0;
}

int cmd_check(const ProjectConfig& cfg) {
  GeneratedModel mdp = build_mdp(cfg);
  ExplicitModel x =
      instantiate(mdp, default_point(mdp, nullptr, cfg.extract_params), cfg.state_cap);
  std::printf("model: %zu states\n", x.num_states());
  auto res = run_properties(x, read_file(cfg.resolve(cfg.properties_file)), mc_options(cfg));
  bool all_ok = true;
  for (const auto& r : res) {
    std::string verdict =
        r.result.is_boolean ? (r.result.truth ? "true" : "false") : fmt17(r.result.value);
    std::string tag;
    if (r.expected.has_value()) tag = r.ok ? "  [as expected]" : "  [MISMATCH]";
    all_ok = all_ok && r.ok;
    std::printf("%-50s : %s%s\n", r.source.c_str(), verdict.c_str(), tag.c_str());
  }
  return all_ok ? 0 : 1;
}

int cmd_synth(const ProjectConfig& cfg) {
  GeneratedModel pd = build_pdtmc(cfg);
  SynthesisQuery q = parse_query(read_file(cfg.resolve(cfg.query_file)));
  auto front = synth_pdtmc(pd, q, mc_options(cfg));
  std::ostringstream csv;
  csv.precision(17);
  csv << "risk,nuisance,productivity";
  std::vector<std::string> pnames;
  for (const auto& [n, _] : front.front().params) {
    csv << "," << n;
    pnames.push_back(n);
  }
  csv << "\n";
  for (const auto& sp : front) {
    csv << sp.objectives[2] << "," << sp.objectives[1] << "," << sp.objectives[0];
    for (const auto& n : pnames) csv << "," << sp.params.at(n).str();
    csv << "\n";
  }
  write_file(out_path(cfg, "front.csv"), csv.str());
  std::printf("pareto front: %zu points -> front.csv\n", front.size());
  for (const auto& sp : front) {
    std::printf("  prod=%-10.5g nuis=%-10.5g risk=%-10.5g", sp.objectives[0], sp.objectives[1],
                sp.objectives[2]);
    for (const auto& [n, v] : sp.params) std::printf(" %s=%s", n.c_str(), v.str().c_str());
    if (sp.zero_denominator) std::printf("  (raw productivity: zero denominator)");
    std::printf("\n");
  }
  return 0;
}

int cmd_extract(const ProjectConfig& cfg) {
  GeneratedModel pd = build_pdtmc(cfg);
  auto point = default_point(pd, nullptr, cfg.extract_params);
  ExplicitModel chain = instantiate(pd, point, cfg.state_cap);
  ControllerTable tbl = extract_controller(chain, pd);
  if (tbl.rules.empty()) std::printf("warning: empty controller table\n");
  write_file(out_path(cfg, "controller.tbl"), print_controller(tbl));
  std::printf("controller: %zu rules over %zu monitored / %zu controlled variables\n",
              tbl.rules.size(), tbl.monitored.size(), tbl.controlled.size());
  std::printf("point:");
  for (const auto& [n, v] : point) std::printf(" %s=%s", n.c_str(), v.str().c_str());
  std::printf("\nwritten: controller.tbl\n");
  return 0;
}

int cmd_simulate(const ProjectConfig& cfg, const std::string& scenario_override) {
  std::string spath =
      scenario_override.empty() ? cfg.resolve(cfg.scenario_file) : scenario_override;
  ScenarioFile sf = parse_scenario(read_file(spath));
  ControllerTable tbl = parse_controller(read_file(out_path(cfg, "controller.tbl")));
  Scenario s = sf.base;
  s.table = &tbl;
  TimedTrace t = run_scenario(s);
  write_file(out_path(cfg, "trace.txt"), print_trace(t));
  std::printf("trace: %zu records -> trace.txt\n", t.records.size());
  return 0;
}

int cmd_validate(const ProjectConfig& cfg) {
  GeneratedModel pd = build_pdtmc(cfg);
  GeneratedModel base = build_baseline(cfg);
  auto point = default_point(pd, nullptr, cfg.extract_params);
  ExplicitModel chain = instantiate(pd, point, cfg.state_cap);
  ControllerTable tbl = extract_controller(chain, pd);
  write_file(out_path(cfg, "controller.tbl"), print_controller(tbl));
  ValidationSummary s = run_validation(cfg, pd, base, tbl, mc_options(cfg));
  std::string report = format_validation_report(s);
  write_file(out_path(cfg, "validation_report.txt"), report);
  std::printf("%s", report.c_str());
  bool ok = s.mtl_fail == 0 && s.mishap_free && s.coverage.full &&
            s.controlled.mean > s.uncontrolled.mean;
  return ok ? 0 : 1;
}

int cmd_report(const ProjectConfig& cfg) {
  GeneratedModel pd = build_pdtmc(cfg);
  GeneratedModel base = build_baseline(cfg);
  McOptions opts = mc_options(cfg);
  auto rows = utility_table(pd, base, cfg.utility_horizon, cfg.state_cap, opts);
  std::ostringstream csv, human;
  csv.precision(17);
  human.precision(6);
  csv << "config,productivity,risk,all_stop,baseline\n";
  human << "configuration | productivity | risk\n";
  for (const auto& r : rows) {
    csv << '"' << r.config << "\"," << r.productivity << "," << r.risk << ","
        << (r.all_stop ? 1 : 0) << "," << (r.baseline ? 1 : 0) << "\n";
    human << r.config << " | " << r.productivity << " | " << r.risk
          << (r.all_stop ? "  (all stop)" : "") << (r.baseline ? "  (no controller)" : "")
          << "\n";
  }

  ExplicitModel controlled =
      instantiate(pd, default_point(pd, nullptr, cfg.extract_params), cfg.state_cap);
  ExplicitModel un = instantiate(base, default_point(base, nullptr, {}), cfg.state_cap);
  Triple tc = accident_freedom_summary(controlled, opts);
  Triple tb = accident_freedom_summary(un, opts);
  human << "\naccident freedom min/mean/max\n";
  human << "  with controller:    " << tc.min << " / " << tc.mean << " / " << tc.max << "\n";
  human << "  without controller: " << tb.min << " / " << tb.mean << " / " << tb.max << "\n";

  write_file(out_path(cfg, "utility.csv"), csv.str());
  write_file(out_path(cfg, "report.txt"), human.str());
  std::printf("%s", human.str().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safety-controller workbench"};
  app.require_subcommand(1);

  std::string config_path = "project.cfg";
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::size_t budget = 0;
  std::string out_dir, scenario_override;

  app.add_option("--config", config_path, "project configuration file")->required();
  app.add_option("--seed", seed, "override the global seed");
  app.add_option("--epsilon", epsilon, "override the value-iteration tolerance");
  app.add_option("--budget", budget, "override the search budget");
  app.add_option("--out", out_dir, "override the output directory");

  auto* generate = app.add_subcommand("generate", "emit the controller design space");
  auto* check = app.add_subcommand("check", "check the bundled properties");
  auto* synth = app.add_subcommand("synth", "search the pDTMC design space");
  auto* extract = app.add_subcommand("extract", "extract the executable controller");
  auto* simulate = app.add_subcommand("simulate", "run one scenario");
  simulate->add_option("--scenario", scenario_override, "scenario file");
  auto* validate = app.add_subcommand("validate", "run the validation campaign");
  bool translate_only = false;
  validate->add_flag("--translate", translate_only,
                     "print the trace properties derived from the checked ones and exit");
  auto* report = app.add_subcommand("report", "utility and safety summary");

  CLI11_PARSE(app, argc, argv);

  try {
    ProjectConfig cfg = load_project(config_path);
    if (seed) cfg.seed = seed;
    if (epsilon > 0) cfg.epsilon = epsilon;
    if (budget) cfg.budget = budget;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (generate->parsed()) return cmd_generate(cfg);
    if (check->parsed()) return cmd_check(cfg);
    if (synth->parsed()) return cmd_synth(cfg);
    if (extract->parsed()) return cmd_extract(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg, scenario_override);
    if (validate->parsed()) {
      if (translate_only) {
        for (const auto& p : campaign_properties(cfg)) std::printf("%s\n", p.c_str());
        return 0;
      }
      return cmd_validate(cfg);
    }
    if (report->parsed()) return cmd_report(cfg);
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return 1;
  } catch (const ModelError& e) {
    std::cerr << "error: model: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
