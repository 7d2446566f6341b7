// Copyright 2026 the hmskm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hmskm/experiments.hpp"
#include "hmskm/model_io.hpp"
#include "hmskm/policy.hpp"
#include "hmskm/simulate.hpp"

namespace {

using namespace hmskm;

std::string fnum(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

// Loads a recorded path and attaches the bundle's initial population.
EventPath load_path(const ModelBundle& b, const std::string& file,
                    std::optional<double> horizon) {
  EventPath ep = read_event_path_file(file, horizon);
  ep.x0 = b.init.x;
  ep.validate(b.system);
  return ep;
}

Eigen::VectorXd point_mass(int regimes, int m) {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(regimes);
  pi(m) = 1.0;
  return pi;
}

SISModel as_sis_model(const ModelBundle& b) {
  return SISModel{b.system, b.regimes, b.init, b.prior, b.horizon};
}

// ---- simulate -------------------------------------------------------------

struct SimulateOpts {
  std::string model;
  std::string out;
  std::string trajectory;
  std::optional<double> horizon;
  std::uint64_t seed = 1;
  bool no_regime = false;
};

int cmd_simulate(const SimulateOpts& o) {
  ModelBundle b = load_model_file(o.model);
  const double horizon = o.horizon.value_or(b.horizon);
  Rng rng(o.seed);
  const EventPath path = simulate_path(b.system, b.system.params, b.regimes,
                                       b.init, horizon, rng, !o.no_regime);
  write_event_path_file(o.out, path);
  if (!o.trajectory.empty()) {
    std::ofstream tr = open_out(o.trajectory);
    tr << "time";
    for (int s = 0; s < b.system.species; ++s) tr << ",x" << s + 1;
    tr << ",regime\n";
    StateVec x = path.x0;
    int m = path.m0;
    auto put = [&](double t) {
      tr << fnum(t);
      for (auto v : x) tr << ',' << v;
      tr << ',' << m + 1 << '\n';
    };
    put(path.t0);
    std::size_t ie = 0, is = 0;
    const std::size_t ne = path.events.size();
    const std::size_t ns = path.regime_path ? path.regime_path->size() : 0;
    while (ie < ne || is < ns) {
      if (is < ns && (ie == ne ||
                      (*path.regime_path)[is].time <= path.events[ie].time)) {
        m = (*path.regime_path)[is].regime;
        put((*path.regime_path)[is].time);
        ++is;
      } else {
        const StateVec& d = b.system.delta[path.events[ie].reaction];
        for (std::size_t s = 0; s < d.size(); ++s) x[s] += d[s];
        put(path.events[ie].time);
        ++ie;
      }
    }
  }
  const std::size_t switches = path.regime_path ? path.regime_path->size() : 0;
  std::cout << "simulated " << path.events.size() << " reaction events and "
            << switches << " regime switches over [" << fnum(path.t0) << ", "
            << fnum(path.t_end) << "] -> " << o.out << "\n";
  return 0;
}

// ---- filter-exact ---------------------------------------------------------

struct FilterExactOpts {
  std::string model;
  std::string path;
  std::string out;
  std::optional<double> horizon;
  double grid = 1.0;
};

int cmd_filter_exact(const FilterExactOpts& o) {
  ModelBundle b = load_model_file(o.model);
  const EventPath ep = load_path(b, o.path, o.horizon);
  std::vector<double> queries;
  for (double t = ep.t0; t <= ep.t_end + 1e-9; t += o.grid)
    queries.push_back(t);
  const auto pts =
      run_exact_filter(b.system, b.system.params, b.regimes, ep,
                       point_mass(b.system.regimes, ep.m0), queries);
  std::ofstream out = open_out(o.out);
  out << "time,at_event";
  for (int i = 0; i < b.system.regimes; ++i) out << ",pi" << i + 1;
  out << '\n';
  for (const auto& pt : pts) {
    out << fnum(pt.t) << ',' << (pt.at_event ? 1 : 0);
    for (int i = 0; i < b.system.regimes; ++i) out << ',' << fnum(pt.pi(i));
    out << '\n';
  }
  std::cout << "filtered " << ep.events.size() << " events; wrote "
            << pts.size() << " posterior points -> " << o.out << "\n";
  return 0;
}

// ---- filter-pl ------------------------------------------------------------

struct FilterPlOpts {
  std::string model;
  std::string path;
  std::string out;
  std::string regime_out;
  std::optional<double> horizon;
  std::string algorithm = "pl";
  int particles = 1000;
  std::string scheme = "residual";
  std::string trigger = "every-event";
  double ess_fraction = 0.5;
  double lw_h = 0.97;
  double capture_every = 7.0;
  std::uint64_t seed = 1;
};

SmcAlgorithm parse_algorithm(const std::string& s) {
  if (s == "pl") return SmcAlgorithm::pl;
  if (s == "storvik") return SmcAlgorithm::storvik;
  if (s == "liu-west") return SmcAlgorithm::liu_west;
  throw CLI::ValidationError("--algorithm must be pl, storvik, or liu-west");
}

ResampleScheme parse_scheme(const std::string& s) {
  if (s == "multinomial") return ResampleScheme::multinomial;
  if (s == "residual") return ResampleScheme::residual;
  if (s == "stratified") return ResampleScheme::stratified;
  throw CLI::ValidationError(
      "--scheme must be multinomial, residual, or stratified");
}

int cmd_filter_pl(const FilterPlOpts& o) {
  ModelBundle b = load_model_file(o.model);
  const EventPath ep = load_path(b, o.path, o.horizon);

  SmcConfig sc;
  sc.particles = o.particles;
  sc.scheme = parse_scheme(o.scheme);
  if (o.trigger == "ess")
    sc.trigger = ResampleTrigger::ess_threshold;
  else if (o.trigger != "every-event")
    throw CLI::ValidationError("--trigger must be every-event or ess");
  sc.ess_fraction = o.ess_fraction;
  sc.seed = o.seed;

  auto filter =
      make_filter(parse_algorithm(o.algorithm), b.system, b.prior, b.status,
                  point_mass(b.system.regimes, ep.m0), sc, o.lw_h);

  std::vector<double> grid;
  for (double t = ep.t0 + o.capture_every; t < ep.t_end;
       t += o.capture_every)
    grid.push_back(t);
  grid.push_back(ep.t_end);

  std::ofstream out = open_out(o.out);
  out << "time,param,mean,median,q025,q975\n";
  std::ofstream reg;
  if (!o.regime_out.empty()) {
    reg = open_out(o.regime_out);
    reg << "time";
    for (int i = 0; i < b.system.regimes; ++i) reg << ",pi" << i + 1;
    reg << '\n';
  }
  drive_filter(*filter, b.system, b.regimes, ep, grid,
               [&](double t, const FilterBase& fb) {
                 for (int p = 0; p < b.system.param_count(); ++p) {
                   const MixtureSummary s = fb.param_summary(p);
                   out << fnum(t) << ',' << b.system.param_name[p] << ','
                       << fnum(s.mean) << ',' << fnum(s.median) << ','
                       << fnum(s.q025) << ',' << fnum(s.q975) << '\n';
                 }
                 if (reg.is_open()) {
                   const Eigen::VectorXd pi = fb.regime_posterior();
                   reg << fnum(t);
                   for (int i = 0; i < b.system.regimes; ++i)
                     reg << ',' << fnum(pi(i));
                   reg << '\n';
                 }
               });
  for (int p = 0; p < b.system.param_count(); ++p) {
    const MixtureSummary s = filter->param_summary(p);
    std::cout << b.system.param_name[p] << ": mean " << fnum(s.mean)
              << ", 95% interval [" << fnum(s.q025) << ", " << fnum(s.q975)
              << "]\n";
  }
  return 0;
}

// ---- compare-smc ----------------------------------------------------------

struct CompareOpts {
  std::string model;
  std::string path;
  std::optional<double> horizon;
  std::string outdir = ".";
  int particles = 2000;
  int runs = 30;
  int benchmark_factor = 10;
  double t1 = 120.0;
  double t2 = 270.0;
  double lw_h = 0.97;
  std::uint64_t seed = 8;
  std::uint64_t path_seed = 8;
};

int cmd_compare(const CompareOpts& o) {
  ModelBundle b = load_model_file(o.model);
  const SISModel model = as_sis_model(b);
  EventPath ep;
  if (!o.path.empty()) {
    ep = load_path(b, o.path, o.horizon);
  } else {
    Rng rng = Rng::stream(o.path_seed, 1);
    ep = simulate_path(b.system, b.system.params, b.regimes, b.init,
                       b.horizon, rng, true);
  }
  SmcComparisonConfig cc;
  cc.particles = o.particles;
  cc.runs = o.runs;
  cc.benchmark_factor = o.benchmark_factor;
  cc.t1 = o.t1;
  cc.t2 = o.t2;
  cc.lw_h = o.lw_h;
  cc.seed = o.seed;
  const SmcComparisonResult res = run_smc_comparison(model, ep, cc);

  std::filesystem::create_directories(o.outdir);
  std::ofstream out =
      open_out((std::filesystem::path(o.outdir) / "comparison.csv").string());
  out << "algorithm,coverage_t1,coverage_t2,pi2_err_t1,pi2_err_t2\n";
  const AlgoMetrics* rows[3] = {&res.pl, &res.storvik, &res.lw};
  const char* names[3] = {"particle-learning", "storvik", "liu-west"};
  for (int a = 0; a < 3; ++a) {
    out << names[a] << ',' << fnum(rows[a]->coverage_t1) << ','
        << fnum(rows[a]->coverage_t2) << ',' << fnum(rows[a]->pi2_err_t1)
        << ',' << fnum(rows[a]->pi2_err_t2) << '\n';
    std::cout << names[a] << ": coverage " << fnum(rows[a]->coverage_t1)
              << " / " << fnum(rows[a]->coverage_t2) << ", pi2 error "
              << fnum(rows[a]->pi2_err_t1) << " / "
              << fnum(rows[a]->pi2_err_t2) << "\n";
  }
  return 0;
}

// ---- policy-eval ----------------------------------------------------------

struct PolicyOpts {
  int scenarios = 100;
  int particles = 1500;
  std::uint64_t seed = 1;
  std::string out = "policy_costs.csv";
  std::string single_rule;
  std::string trajectory_out;
};

const PolicyRule* find_rule(const std::vector<PolicyRule>& rules,
                            const std::string& label) {
  for (const auto& r : rules)
    if (r.label() == label) return &r;
  return nullptr;
}

int cmd_policy(const PolicyOpts& o) {
  const std::vector<PolicyRule> rules = standard_policy_rules();
  if (!o.single_rule.empty()) {
    const PolicyRule* rule = find_rule(rules, o.single_rule);
    if (!rule) {
      std::string known;
      for (const auto& r : rules) known += " " + r.label();
      throw std::runtime_error("unknown rule '" + o.single_rule +
                               "'; available:" + known);
    }
    ControlledRunConfig rc;
    rc.filter.particles = o.particles;
    Rng scen = Rng::stream(o.seed, 0);
    rc.sis.theta1 = scen.gamma(1700.0, 7300.0);
    rc.sim_seed = scen.next_u64();
    rc.filter_seed = scen.next_u64();
    const ControlledRun run = controlled_simulate(*rule, rc);
    if (!o.trajectory_out.empty()) {
      std::ofstream tr = open_out(o.trajectory_out);
      tr << "time,infecteds,regime,policy,pi2hat\n";
      for (const auto& pt : run.trajectory.pts)
        tr << fnum(pt.t) << ',' << fnum(pt.I) << ',' << pt.m + 1 << ','
           << pt.phi << ',' << fnum(pt.pi2hat) << '\n';
    }
    const ScenarioSummary& s = run.summary;
    std::cout << rule->label() << ": ave infecteds " << fnum(s.ave_infecteds)
              << ", policy active " << fnum(100 * s.policy_freq)
              << "% of days, c1 " << fnum(s.c1) << ", c2 " << fnum(s.c2)
              << "\n";
    return 0;
  }

  PolicyEvalConfig pc;
  pc.run.filter.particles = o.particles;
  pc.scenarios = o.scenarios;
  pc.master_seed = o.seed;
  const std::vector<RuleCosts> costs = monte_carlo_costs(rules, pc);
  std::ofstream out = open_out(o.out);
  out << "rule,ave_infecteds,policy_freq,days_above_cap,startups,c1,c2,"
         "se_ave_infecteds,se_policy_freq,se_days_above_cap,se_startups,"
         "se_c1,se_c2\n";
  for (const auto& rc : costs) {
    const ScenarioSummary& m = rc.mean;
    const ScenarioSummary& s = rc.std_error;
    out << rc.label << ',' << fnum(m.ave_infecteds) << ','
        << fnum(m.policy_freq) << ',' << fnum(m.days_above_cap) << ','
        << fnum(m.startups) << ',' << fnum(m.c1) << ',' << fnum(m.c2) << ','
        << fnum(s.ave_infecteds) << ',' << fnum(s.policy_freq) << ','
        << fnum(s.days_above_cap) << ',' << fnum(s.startups) << ','
        << fnum(s.c1) << ',' << fnum(s.c2) << '\n';
    std::cout << rc.label << ": E[c1] " << fnum(m.c1) << " (se "
              << fnum(s.c1) << "), E[c2] " << fnum(m.c2) << " (se "
              << fnum(s.c2) << ")\n";
  }
  return 0;
}

// ---- reproduce ------------------------------------------------------------

struct ReproduceOpts {
  std::string suite;
  std::string scale = "desk";
  std::uint64_t seed = 8;
  std::string outdir;
};

int cmd_reproduce(const ReproduceOpts& o) {
  const std::string outdir =
      o.outdir.empty() ? "repro/" + o.suite : o.outdir;
  const ReproduceReport rep =
      run_reproduction(o.suite, o.scale, o.seed, outdir);
  write_report_json(std::cout, rep);
  for (const auto& c : rep.checks)
    if (!c.pass)
      std::cerr << "FAIL " << rep.suite << "/" << c.label << ": " << c.detail
                << "\n";
  return rep.all_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "simulation and sequential inference for regime-modulated stochastic "
      "kinetic models"};
  app.require_subcommand(1);

  SimulateOpts so;
  CLI::App* sim = app.add_subcommand(
      "simulate", "simulate an event path from a model descriptor");
  sim->add_option("--model", so.model, "model descriptor (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", so.out, "event-path CSV to write")->required();
  sim->add_option("--trajectory", so.trajectory,
                  "also write a population trajectory CSV");
  sim->add_option("--horizon", so.horizon, "override the model horizon");
  sim->add_option("--seed", so.seed, "random seed");
  sim->add_flag("--no-regime", so.no_regime,
                "omit the regime path from the output");

  FilterExactOpts fo;
  CLI::App* fex = app.add_subcommand(
      "filter-exact",
      "exact regime posterior over a recorded path (known rates)");
  fex->add_option("--model", fo.model, "model descriptor (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  fex->add_option("--path", fo.path, "event-path CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fex->add_option("--out", fo.out, "posterior CSV to write")->required();
  fex->add_option("--grid", fo.grid, "query spacing in days")
      ->check(CLI::PositiveNumber);
  fex->add_option("--horizon", fo.horizon,
                  "horizon when the CSV lacks one (defaults to last row)");

  FilterPlOpts po;
  CLI::App* fpl = app.add_subcommand(
      "filter-pl", "sequential joint inference over a recorded path");
  fpl->add_option("--model", po.model, "model descriptor (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  fpl->add_option("--path", po.path, "event-path CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fpl->add_option("--out", po.out, "parameter-posterior CSV to write")
      ->required();
  fpl->add_option("--regime-out", po.regime_out,
                  "also write the regime posterior CSV");
  fpl->add_option("--algorithm", po.algorithm,
                  "pl, storvik, or liu-west (default pl)");
  fpl->add_option("--particles", po.particles, "particle count")
      ->check(CLI::PositiveNumber);
  fpl->add_option("--scheme", po.scheme,
                  "multinomial, residual, or stratified");
  fpl->add_option("--trigger", po.trigger, "every-event or ess");
  fpl->add_option("--ess-fraction", po.ess_fraction,
                  "resample when ESS drops below this fraction");
  fpl->add_option("--lw-h", po.lw_h, "liu-west kernel bandwidth");
  fpl->add_option("--capture-every", po.capture_every,
                  "posterior capture spacing in days")
      ->check(CLI::PositiveNumber);
  fpl->add_option("--seed", po.seed, "random seed");
  fpl->add_option("--horizon", po.horizon,
                  "horizon when the CSV lacks one (defaults to last row)");

  CompareOpts co;
  CLI::App* cmp = app.add_subcommand(
      "compare-smc", "replicated filter comparison on one path");
  cmp->add_option("--model", co.model, "model descriptor (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmp->add_option("--path", co.path,
                  "event-path CSV (simulated internally when omitted)")
      ->check(CLI::ExistingFile);
  cmp->add_option("--out", co.outdir, "output directory");
  cmp->add_option("--particles", co.particles, "particles per run")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--runs", co.runs, "replicates per algorithm")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--benchmark-factor", co.benchmark_factor,
                  "benchmark size as a multiple of --particles")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--t1", co.t1, "first checkpoint time");
  cmp->add_option("--t2", co.t2, "second checkpoint time");
  cmp->add_option("--lw-h", co.lw_h, "liu-west kernel bandwidth");
  cmp->add_option("--seed", co.seed, "master seed for the filter runs");
  cmp->add_option("--path-seed", co.path_seed,
                  "seed for the internally simulated path");
  cmp->add_option("--horizon", co.horizon,
                  "horizon when the CSV lacks one (defaults to last row)");

  PolicyOpts yo;
  CLI::App* pol = app.add_subcommand(
      "policy-eval",
      "Monte Carlo cost comparison of countermeasure rules on the "
      "seasonal epidemic model");
  pol->add_option("--scenarios", yo.scenarios, "number of scenarios")
      ->check(CLI::PositiveNumber);
  pol->add_option("--particles", yo.particles,
                  "particles for belief-based rules")
      ->check(CLI::PositiveNumber);
  pol->add_option("--seed", yo.seed, "master seed");
  pol->add_option("--out", yo.out, "cost table CSV to write");
  pol->add_option("--single-rule", yo.single_rule,
                  "run one scenario under the named rule instead");
  pol->add_option("--trajectory-out", yo.trajectory_out,
                  "trajectory CSV for --single-rule");

  ReproduceOpts ro;
  CLI::App* rp = app.add_subcommand(
      "reproduce", "run a named study suite and check its thresholds");
  std::string suites_help = "one of:";
  for (const auto& s : reproduction_suites()) suites_help += " " + s;
  rp->add_option("--suite", ro.suite, suites_help)
      ->required()
      ->check(CLI::IsMember(reproduction_suites()));
  rp->add_option("--scale", ro.scale, "desk (fast) or full")
      ->check(CLI::IsMember({"desk", "full"}));
  rp->add_option("--seed", ro.seed, "master seed");
  rp->add_option("--out", ro.outdir, "output directory (default repro/<suite>)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(so);
    if (fex->parsed()) return cmd_filter_exact(fo);
    if (fpl->parsed()) return cmd_filter_pl(po);
    if (cmp->parsed()) return cmd_compare(co);
    if (pol->parsed()) return cmd_policy(yo);
    if (rp->parsed()) return cmd_reproduce(ro);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
