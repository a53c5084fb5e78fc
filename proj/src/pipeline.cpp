#include "safectrl/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "safectrl/mtl.hpp"

namespace safectrl {

std::string ProjectConfig::resolve(const std::string& rel) const {
  if (rel.empty() || rel[0] == '/') return rel;
  return dir.empty() ? rel : dir + "/" + rel;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write file: " + path);
  out << content;
}

ProjectConfig load_project(const std::string& path) {
  ProjectConfig cfg;
  auto slash = path.find_last_of('/');
  cfg.dir = slash == std::string::npos ? std::string(".") : path.substr(0, slash);
  std::istringstream is(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto cpos = line.find("//");
    if (cpos != std::string::npos) line = line.substr(0, cpos);
    std::istringstream ls(line);
    std::string key, eq;
    if (!(ls >> key)) continue;
    ls >> eq;
    auto rest = [&]() {
      std::string r;
      std::getline(ls, r);
      while (!r.empty() && std::isspace(static_cast<unsigned char>(r.front()))) r.erase(r.begin());
      while (!r.empty() && std::isspace(static_cast<unsigned char>(r.back()))) r.pop_back();
      return r;
    };
    if (key == "risk")
      cfg.risk_file = rest();
    else if (key == "skeleton")
      cfg.skeleton_file = rest();
    else if (key == "properties")
      cfg.properties_file = rest();
    else if (key == "query")
      cfg.query_file = rest();
    else if (key == "scenario")
      cfg.scenario_file = rest();
    else if (key == "misuse_scenario")
      cfg.misuse_file = rest();
    else if (key == "mtl_properties")
      cfg.mtl_file = rest();
    else if (key == "out")
      cfg.out_dir = rest();
    else if (key == "seed")
      ls >> cfg.seed;
    else if (key == "epsilon")
      ls >> cfg.epsilon;
    else if (key == "budget")
      ls >> cfg.budget;
    else if (key == "state_cap")
      ls >> cfg.state_cap;
    else if (key == "utility_horizon")
      ls >> cfg.utility_horizon;
    else if (key == "detect_window_ms")
      ls >> cfg.detect_window_ms;
    else if (key == "actors")
      ls >> cfg.gen.actor_count;
    else if (key == "activity_vars") {
      cfg.gen.activity_vars.clear();
      std::string v;
      while (ls >> v) cfg.gen.activity_vars.push_back(v);
    } else if (key == "extract") {
      std::string kv;
      std::string r = rest();
      std::istringstream rs(r);
      while (std::getline(rs, kv, ',')) {
        auto p = kv.find('=');
        if (p == std::string::npos) continue;
        std::string name = kv.substr(0, p);
        std::string val = kv.substr(p + 1);
        name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
        if (val.find('.') != std::string::npos)
          cfg.extract_params[name] = Value::real(std::stod(val));
        else
          cfg.extract_params[name] = Value::integer(std::stoll(val));
      }
    } else {
      throw ParseError("unknown project key: " + key, lineno, 1);
    }
  }
  if (cfg.risk_file.empty() || cfg.skeleton_file.empty())
    throw ModelError("project config needs at least risk and skeleton files");
  return cfg;
}

RiskModel load_risk(const ProjectConfig& cfg) {
  return parse_risk_model(read_file(cfg.resolve(cfg.risk_file)));
}

GeneratedModel build_mdp(const ProjectConfig& cfg) {
  RiskModel rm = load_risk(cfg);
  return generate(read_file(cfg.resolve(cfg.skeleton_file)), rm, cfg.gen);
}

GeneratedModel build_pdtmc(const ProjectConfig& cfg) {
  RiskModel rm = load_risk(cfg);
  GeneratedModel g = pdtmc_transform(read_file(cfg.resolve(cfg.skeleton_file)), rm, cfg.gen);
  g.model.priority_labels = controller_priority(g);
  return g;
}

GeneratedModel build_baseline(const ProjectConfig& cfg) {
  RiskModel rm = load_risk(cfg);
  GenerationConfig gen = cfg.gen;
  gen.emit_controller = false;
  GeneratedModel g = pdtmc_transform(read_file(cfg.resolve(cfg.skeleton_file)), rm, gen);
  return g;
}

std::map<std::string, Value> default_point(const GeneratedModel& g, const SynthesisQuery* q,
                                           const std::map<std::string, Value>& pinned) {
  std::map<std::string, Value> point;
  for (const auto& [name, type] : g.model.decls.parameters) {
    auto it = pinned.find(name);
    if (it != pinned.end()) {
      point[name] = it->second;
      continue;
    }
    auto dit = g.dp_domains.find(name);
    if (dit != g.dp_domains.end()) {
      point[name] = dit->second.front();
      continue;
    }
    bool found = false;
    if (q) {
      for (const auto& d : q->domains) {
        if (d.name != name) continue;
        if (d.numeric)
          point[name] = Value::real(d.lo);
        else
          point[name] = d.values.front();
        found = true;
        break;
      }
    }
    if (!found) {
      if (type == Value::Type::Real)
        point[name] = Value::real(1.0);
      else
        point[name] = Value::integer(0);
    }
  }
  return point;
}

ExplicitModel instantiate(const GeneratedModel& g, const std::map<std::string, Value>& point,
                          std::size_t state_cap) {
  ExpandOptions opts;
  opts.state_cap = state_cap;
  return expand(g.model, point, opts);
}

std::vector<PropResult> run_properties(const ExplicitModel& x, const std::string& props_text,
                                       const McOptions& opts) {
  std::vector<PropResult> out;
  for (const auto& q : parse_properties(props_text, x)) {
    PropResult r;
    r.source = q.source;
    r.expected = q.expected;
    r.result = check_query(x, q, opts);
    if (q.expected.has_value())
      r.ok = r.result.is_boolean && r.result.truth == *q.expected;
    out.push_back(std::move(r));
  }
  return out;
}

Triple accident_freedom_summary(const ExplicitModel& x, const McOptions& opts) {
  const Expr* cause = x.find_label("cause");
  const Expr* mishap = x.find_label("mishap");
  const Expr* safe = x.find_label("safe");
  if (!cause || !mishap || !safe)
    throw ModelError("model lacks the cause/mishap/safe labels");
  return accident_freedom(x, *cause, *mishap, *safe, opts);
}

std::vector<UtilityRow> utility_table(const GeneratedModel& pdtmc, const GeneratedModel& baseline,
                                      long horizon, std::size_t state_cap, const McOptions& opts) {
  std::vector<UtilityRow> rows;

  auto evaluate = [&](const ExplicitModel& x) {
    int pr = x.reward_index("prod");
    if (pr < 0) throw ModelError("model lacks the prod reward");
    std::vector<double> prod = expected_reward(x, pr, RewardObj::CumulativeBounded, horizon,
                                               nullptr, OptMode::Exact, opts);
    double risk = 0.0;
    for (const auto& name : x.reward_names) {
      if (name.rfind("risk_", 0) != 0) continue;
      int rk = x.reward_index(name);
      std::vector<double> v = expected_reward(x, rk, RewardObj::CumulativeBounded, horizon,
                                              nullptr, OptMode::Exact, opts);
      risk += v[x.initial];
    }
    return std::make_pair(prod[x.initial], risk);
  };

  // Every combination of mitigation options; resumptions stay at their first
  // option, numeric parameters at their defaults.
  std::vector<std::string> dp_names;
  for (const auto& [name, dom] : pdtmc.dp_domains)
    if (name.rfind("dp", 0) == 0 && name.size() > 3 && name.substr(name.size() - 3) == "mit")
      dp_names.push_back(name);
  std::sort(dp_names.begin(), dp_names.end());

  std::function<void(std::size_t, std::map<std::string, Value>&, std::string, bool)> rec =
      [&](std::size_t k, std::map<std::string, Value>& point, std::string label, bool all_stop) {
        if (k == dp_names.size()) {
          std::map<std::string, Value> full = default_point(pdtmc, nullptr, point);
          ExplicitModel x = instantiate(pdtmc, full, state_cap);
          auto [prod, risk] = evaluate(x);
          UtilityRow row;
          row.config = label.empty() ? "default" : label;
          row.productivity = prod;
          row.risk = risk;
          row.all_stop = all_stop;
          rows.push_back(row);
          return;
        }
        const auto& dom = pdtmc.dp_domains.at(dp_names[k]);
        // Option names for readability: find the factor and its option list.
        std::string fid = dp_names[k].substr(2, dp_names[k].size() - 5);
        const RiskFactor* f = pdtmc.risk.find_factor(fid);
        for (std::size_t i = 0; i < dom.size(); ++i) {
          point[dp_names[k]] = dom[i];
          std::string oname = f && i < f->mitigated_by.size() ? f->mitigated_by[i]
                                                              : std::to_string(i);
          const MitigationOption* o = f ? pdtmc.risk.find_mode(oname) : nullptr;
          bool stops = o && o->target_safmod && *o->target_safmod == "stopped";
          rec(k + 1, point, label.empty() ? fid + ":" + oname : label + " " + fid + ":" + oname,
              all_stop && stops);
          point.erase(dp_names[k]);
        }
      };
  std::map<std::string, Value> point;
  rec(0, point, "", true);

  {
    std::map<std::string, Value> full = default_point(baseline, nullptr, {});
    ExplicitModel x = instantiate(baseline, full, state_cap);
    auto [prod, risk] = evaluate(x);
    UtilityRow row;
    row.config = "no-controller";
    row.productivity = prod;
    row.risk = risk;
    row.baseline = true;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::vector<std::string> validation_properties(const ProjectConfig& cfg) {
  if (!cfg.mtl_file.empty()) {
    std::vector<std::string> props;
    std::istringstream is(read_file(cfg.resolve(cfg.mtl_file)));
    std::string line;
    while (std::getline(is, line)) {
      auto cpos = line.find("//");
      if (cpos != std::string::npos) line = line.substr(0, cpos);
      bool blank = true;
      for (char ch : line)
        if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
      if (!blank) props.push_back(line);
    }
    return props;
  }
  std::vector<std::string> props;
  struct F {
    const char* id;
    const char* zeta;
  };
  const F fs[] = {{"HRW", "zeta_HRW=1"}, {"HS", "zeta_HS=1"}, {"HC", "zeta_HC=1"}};
  for (const auto& f : fs) {
    TranslateNames n;
    n.detector = f.zeta;
    n.inactive = std::string(f.id) + "p=0";
    n.active = std::string(f.id) + "p=1";
    n.mitigated = std::string(f.id) + "p=4";
    n.final_pred = "final=1";
    n.mishap = "mishap=1";
    props.push_back(translate_detection_pattern(n, cfg.detect_window_ms));
    props.push_back(translate_liveness_pattern(n));
  }
  return props;
}

}  // namespace

ValidationSummary run_validation(const ProjectConfig& cfg, const GeneratedModel& pdtmc,
                                 const GeneratedModel& baseline, const ControllerTable& table,
                                 const McOptions& opts) {
  ValidationSummary sum;

  // Model-side comparison of freedom from accidents.
  SynthesisQuery* noq = nullptr;
  std::map<std::string, Value> point = default_point(pdtmc, noq, cfg.extract_params);
  ExplicitModel controlled = instantiate(pdtmc, point, cfg.state_cap);
  ExplicitModel un = instantiate(baseline, default_point(baseline, noq, {}), cfg.state_cap);
  sum.controlled = accident_freedom_summary(controlled, opts);
  sum.uncontrolled = accident_freedom_summary(un, opts);

  ScenarioFile sf = parse_scenario(read_file(cfg.resolve(cfg.scenario_file)));
  int n = sf.campaign_n > 0 ? sf.campaign_n : 1;
  auto vectors = gen_test_vectors(n, sf.total_s, sf.slot_max, sf.base.seed);

  std::vector<std::string> props = validation_properties(cfg);
  std::vector<TimedTrace> traces;
  for (int k = 0; k < n; ++k) {
    Scenario s = sf.base;
    s.table = &table;
    s.waits_s = vectors[std::size_t(k)];
    s.seed = sf.base.seed + std::uint64_t(k) + 1;
    TimedTrace t = run_scenario(s);
    ++sum.traces;
    int mv = t.decls.var_index("mishap");
    for (const auto& r : t.records)
      if (r.snap.v[std::size_t(mv)] == 1) sum.mishap_free = false;
    for (const auto& ptxt : props) {
      Mtl f = parse_mtl(ptxt, t.decls);
      MtlVerdict v = check_trace(t, f);
      if (v.pass) {
        ++sum.mtl_pass;
      } else {
        ++sum.mtl_fail;
        sum.failures.push_back("trace " + std::to_string(k) + " violates " + ptxt + " at index " +
                               std::to_string(v.violation_index));
      }
    }
    traces.push_back(std::move(t));
  }
  sum.coverage = situation_coverage(traces);

  if (!cfg.misuse_file.empty()) {
    ScenarioFile mu = parse_scenario(read_file(cfg.resolve(cfg.misuse_file)));
    int mun = mu.campaign_n > 0 ? mu.campaign_n : 1;
    auto mvs = gen_test_vectors(mun, mu.total_s, mu.slot_max, mu.base.seed);
    for (int k = 0; k < mun; ++k) {
      Scenario s = mu.base;
      s.table = &table;
      s.waits_s = mvs[std::size_t(k)];
      s.seed = mu.base.seed + std::uint64_t(k) + 1;
      TimedTrace t = run_scenario(s);
      for (const auto& f : unhandled_causes(t))
        if (std::find(sum.misuse_unhandled.begin(), sum.misuse_unhandled.end(), f) ==
            sum.misuse_unhandled.end())
          sum.misuse_unhandled.push_back(f);
    }
  }
  return sum;
}

std::vector<std::string> campaign_properties(const ProjectConfig& cfg) {
  return validation_properties(cfg);
}

std::string format_validation_report(const ValidationSummary& s) {
  std::ostringstream os;
  os.precision(6);
  os << "traces: " << s.traces << "\n";
  os << "mtl: " << s.mtl_pass << " pass, " << s.mtl_fail << " fail\n";
  os << "mishap-free campaign: " << (s.mishap_free ? "yes" : "no") << "\n";
  os << "situation coverage: " << s.coverage.covered << "/" << s.coverage.total << "\n";
  os << "phase coverage: " << s.coverage.phase_covered << "/" << s.coverage.phase_total << "\n";
  os << "full coverage: " << (s.coverage.full ? "yes" : "no") << "\n";
  os << "accident freedom (min/mean/max), with controller:    " << s.controlled.min << " / "
     << s.controlled.mean << " / " << s.controlled.max << "\n";
  os << "accident freedom (min/mean/max), without controller: " << s.uncontrolled.min << " / "
     << s.uncontrolled.mean << " / " << s.uncontrolled.max << "\n";
  if (!s.misuse_unhandled.empty()) {
    os << "misuse: unhandled occurred causes:";
    for (const auto& f : s.misuse_unhandled) os << " " << f;
    os << "\n";
  }
  for (const auto& f : s.failures) os << "FAIL " << f << "\n";
  for (const auto& [cell, hit] : s.coverage.cells)
    if (!hit) os << "uncovered: " << cell << "\n";
  for (const auto& [cell, hit] : s.coverage.phase_cells)
    if (!hit) os << "uncovered phase: " << cell << "\n";
  return os.str();
}

}  // namespace safectrl
