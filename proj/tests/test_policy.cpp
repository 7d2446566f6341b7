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

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "hmskm/policy.hpp"
#include "hmskm/simulate.hpp"

using namespace hmskm;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Trajectory two_piece(double t_mid, double t_end, double i1, int phi1,
                     double i2, int phi2) {
  Trajectory tr;
  tr.pts.push_back({0.0, i1, 0, phi1, kNaN});
  tr.pts.push_back({t_mid, i2, 0, phi2, kNaN});
  tr.t_end = t_end;
  return tr;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("discounted running average against closed-form integrals") {
  // Standard form after a zero stretch then a 100 stretch (kappa = 1):
  // 100 (1 - e^-1) / (1 - e^-2).
  Ewma e(1.0, 50.0);
  CHECK(e.value() == 50.0);  // at t = 0 the value is the initial count
  e.advance(1.0, 0.0);
  e.advance(1.0, 100.0);
  CHECK(e.time() == doctest::Approx(2.0));
  CHECK(e.value() ==
        doctest::Approx(100.0 * (1.0 - std::exp(-1.0)) /
                        (1.0 - std::exp(-2.0)))
            .epsilon(1e-12));
  // A constant level is a fixed point of the normalized form.
  Ewma c(1.0 / 14.0, 100.0);
  c.advance(3.0, 100.0);
  c.advance(10.0, 100.0);
  CHECK(c.value() == doctest::Approx(100.0).epsilon(1e-12));
  // Splitting an advance changes nothing.
  Ewma a(0.37, 10.0), b(0.37, 10.0);
  a.advance(2.0, 40.0);
  b.advance(0.6, 40.0);
  b.advance(1.4, 40.0);
  a.advance(1.0, 5.0);
  b.advance(1.0, 5.0);
  CHECK(a.value() == doctest::Approx(b.value()).epsilon(1e-13));
  CHECK_THROWS_AS(Ewma(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("the literal discounting variant weights early observations") {
  // (1/t) int_0^t e^{-kappa s} I_s ds with kappa = 1: zeros on [0,1], 100 on
  // [1,2] give 100 (e^-1 - e^-2) / 2.
  Ewma e(1.0, 0.0, EwmaForm::literal);
  e.advance(1.0, 0.0);
  e.advance(1.0, 100.0);
  CHECK(e.value() ==
        doctest::Approx(100.0 * (std::exp(-1.0) - std::exp(-2.0)) / 2.0)
            .epsilon(1e-12));
  // Early mass counts for more than late mass, unlike the standard form.
  Ewma early(1.0, 0.0, EwmaForm::literal), late(1.0, 0.0, EwmaForm::literal);
  early.advance(1.0, 100.0);
  early.advance(1.0, 0.0);
  late.advance(1.0, 0.0);
  late.advance(1.0, 100.0);
  CHECK(early.value() > late.value());
}

TEST_CASE("rule evaluation truth table with hysteresis and the cap guard") {
  const PolicyRule base = PolicyRule::make_baseline();
  CHECK(evaluate_rule(base, 500.0, 0.0, kNaN, 1, 0) == 0);
  CHECK(evaluate_rule(base, 500.0, 0.0, kNaN, 1, 1) == 0);

  const PolicyRule oracle = PolicyRule::make_oracle();
  CHECK(evaluate_rule(oracle, 0.0, 0.0, kNaN, 1, 0) == 1);
  CHECK(evaluate_rule(oracle, 0.0, 0.0, kNaN, 0, 1) == 0);

  const PolicyRule inf = PolicyRule::make_infecteds(20.0, -10.0);
  // Off: start only when I - ewma exceeds the upper band.
  CHECK(evaluate_rule(inf, 120.0, 90.0, kNaN, 0, 0) == 1);   // +30 > 20
  CHECK(evaluate_rule(inf, 110.0, 90.0, kNaN, 0, 0) == 0);   // +20, not >
  CHECK(evaluate_rule(inf, 80.0, 90.0, kNaN, 0, 0) == 0);
  // On: stop only below the lower band with the count under the cap.
  CHECK(evaluate_rule(inf, 80.0, 95.0, kNaN, 0, 1) == 0);    // -15 < -10, I<200
  CHECK(evaluate_rule(inf, 85.0, 90.0, kNaN, 0, 1) == 1);    // -5, hysteresis
  CHECK(evaluate_rule(inf, 250.0, 300.0, kNaN, 0, 1) == 1);  // I >= 200 blocks
  CHECK(evaluate_rule(inf, 199.0, 220.0, kNaN, 0, 1) == 0);

  const PolicyRule bay = PolicyRule::make_bayesian(0.80, 0.01);
  CHECK(evaluate_rule(bay, 50.0, 0.0, 0.80, 0, 0) == 1);
  CHECK(evaluate_rule(bay, 50.0, 0.0, 0.79, 0, 0) == 0);
  CHECK(evaluate_rule(bay, 50.0, 0.0, 0.005, 0, 1) == 0);
  CHECK(evaluate_rule(bay, 50.0, 0.0, 0.02, 0, 1) == 1);    // hysteresis
  CHECK(evaluate_rule(bay, 300.0, 0.0, 0.005, 0, 1) == 1);  // cap guard
  CHECK_THROWS_AS(evaluate_rule(bay, 50.0, 0.0, kNaN, 0, 0),
                  std::invalid_argument);

  CHECK(base.label() == "baseline");
  CHECK(oracle.label() == "oracle");
  CHECK(inf.label() == "infecteds(20,-10)");
  CHECK(bay.label() == "bayesian(0.8,0.01)");
}

TEST_CASE("cost functionals on hand-computed trajectories") {
  const CostConfig cfg{};
  // [0,5) I=100 off; [5,10) I=250 on: c1 = 500 + (250 + 0.02*50^2 + 50)*5.
  const Trajectory tr = two_piece(5.0, 10.0, 100.0, 0, 250.0, 1);
  CHECK(cost_c1(tr, cfg) == doctest::Approx(500.0 + 1750.0).epsilon(1e-13));
  // c2 = 500 + (250 + 200)*5 + one startup.
  CHECK(cost_c2(tr, cfg) ==
        doctest::Approx(500.0 + 2250.0 + 1400.0).epsilon(1e-13));
  const ScenarioSummary s = summarize_trajectory(tr, cfg);
  CHECK(s.ave_infecteds == doctest::Approx(175.0));
  CHECK(s.policy_freq == doctest::Approx(0.5));
  CHECK(s.days_above_cap == doctest::Approx(0.0));
  CHECK(s.startups == doctest::Approx(1.0));
  CHECK(s.c1 == doctest::Approx(2250.0));
  CHECK(s.c2 == doctest::Approx(4150.0));

  // Above the cap: each day costs the penalty on top of the count.
  Trajectory over;
  over.pts.push_back({0.0, 350.0, 1, 0, kNaN});
  over.t_end = 2.0;
  CHECK(cost_c1(over, cfg) ==
        doctest::Approx((350.0 + 0.02 * 150.0 * 150.0) * 2.0));
  CHECK(cost_c2(over, cfg) == doctest::Approx((350.0 + 1000.0) * 2.0));
  CHECK(summarize_trajectory(over, cfg).days_above_cap == doctest::Approx(2.0));
}

TEST_CASE("costs add over concatenation up to the boundary start-up") {
  const CostConfig cfg{};
  Trajectory whole;
  whole.pts.push_back({0.0, 120.0, 0, 0, kNaN});
  whole.pts.push_back({2.0, 260.0, 1, 1, kNaN});
  whole.pts.push_back({5.0, 180.0, 1, 1, kNaN});
  whole.pts.push_back({7.0, 90.0, 0, 0, kNaN});
  whole.t_end = 9.0;

  for (std::size_t cut = 1; cut < whole.pts.size(); ++cut) {
    CAPTURE(cut);
    Trajectory a, b;
    a.pts.assign(whole.pts.begin(), whole.pts.begin() + cut);
    a.t_end = whole.pts[cut].t;
    b.pts.assign(whole.pts.begin() + cut, whole.pts.end());
    b.t_end = whole.t_end;
    CHECK(cost_c1(a, cfg) + cost_c1(b, cfg) ==
          doctest::Approx(cost_c1(whole, cfg)).epsilon(1e-13));
    // The second piece restarts phi accounting from 0, so a boundary where
    // the policy is already on is double-counted by exactly one start-up.
    const double boundary =
        (whole.pts[cut].phi == 1 && whole.pts[cut - 1].phi == 1)
            ? cfg.startup_cost
            : 0.0;
    CHECK(cost_c2(a, cfg) + cost_c2(b, cfg) - boundary ==
          doctest::Approx(cost_c2(whole, cfg)).epsilon(1e-13));
  }
}

TEST_CASE("pointwise domination orders both costs") {
  const CostConfig cfg{};
  const Trajectory hi = two_piece(4.0, 8.0, 220.0, 1, 340.0, 0);
  Trajectory lo = hi;
  lo.pts[0].I = 150.0;
  lo.pts[1].I = 320.0;
  CHECK(cost_c1(lo, cfg) < cost_c1(hi, cfg));
  CHECK(cost_c2(lo, cfg) < cost_c2(hi, cfg));
}

TEST_CASE("default controlled generators and their stationary laws") {
  const ControlledRegimeModel c = ControlledRegimeModel::seasonal_default();
  CHECK(c.G_off(0, 1) == doctest::Approx(6.0 / 365.0));
  CHECK(c.G_off(1, 0) == doctest::Approx(2.0 / 365.0));
  CHECK(c.G_on(0, 1) == doctest::Approx(1.0 / 365.0));
  CHECK(c.G_on(1, 0) == doctest::Approx(8.0 / 365.0));
  CHECK(&c.at(0) == &c.G_off);
  CHECK(&c.at(1) == &c.G_on);
  // Uncontrolled: P(high) = 6/8; fully controlled: 1/9.
  CHECK(c.G_off(0, 1) / (c.G_off(0, 1) + c.G_off(1, 0)) ==
        doctest::Approx(0.75));
  CHECK(c.G_on(0, 1) / (c.G_on(0, 1) + c.G_on(1, 0)) ==
        doctest::Approx(1.0 / 9.0));
}

TEST_CASE("the do-nothing policy reproduces the plain simulation bitwise") {
  ControlledRunConfig cfg;
  cfg.sim_seed = 123;
  const ControlledRun run =
      controlled_simulate(PolicyRule::make_baseline(), cfg);

  const SISModel m = build_sis(cfg.sis);
  Rng rng(123);
  const EventPath plain = simulate_path(m.system, m.system.params, m.regimes,
                                        m.init, m.horizon, rng, true);
  REQUIRE(run.path.events.size() == plain.events.size());
  for (std::size_t i = 0; i < plain.events.size(); ++i) {
    CHECK(run.path.events[i].time == plain.events[i].time);  // bitwise
    CHECK(run.path.events[i].reaction == plain.events[i].reaction);
  }
  REQUIRE(run.path.regime_path->size() == plain.regime_path->size());
  for (std::size_t i = 0; i < plain.regime_path->size(); ++i) {
    CHECK((*run.path.regime_path)[i].time == (*plain.regime_path)[i].time);
    CHECK((*run.path.regime_path)[i].regime ==
          (*plain.regime_path)[i].regime);
  }
  // No policy activity, no filter.
  for (const auto& p : run.trajectory.pts) {
    CHECK(p.phi == 0);
    CHECK(std::isnan(p.pi2hat));
  }
  CHECK(run.summary.policy_freq == 0.0);
  CHECK(run.summary.startups == 0.0);
}

TEST_CASE("the oracle switches generators when the season flips") {
  // Pool several runs; conditional on the policy state the realized switch
  // rates must match the generator in force (the oracle keeps phi equal to
  // the regime up to one transition of lag).
  ControlledRunConfig cfg;
  double time_high = 0.0, time_low = 0.0;
  double high_to_low = 0.0, low_to_high = 0.0;
  for (int k = 0; k < 30; ++k) {
    cfg.sim_seed = 9000 + k;
    const ControlledRun run =
        controlled_simulate(PolicyRule::make_oracle(), cfg);
    double t = run.path.t0;
    int m = run.path.m0;
    for (const auto& sw : *run.path.regime_path) {
      (m == 1 ? time_high : time_low) += sw.time - t;
      if (m == 1 && sw.regime == 0) high_to_low += 1.0;
      if (m == 0 && sw.regime == 1) low_to_high += 1.0;
      t = sw.time;
      m = sw.regime;
    }
    (m == 1 ? time_high : time_low) += run.path.t_end - t;
    // A path that never enters high season legitimately keeps phi = 0, so
    // per-run activity is not asserted; the pooled rates below are.
  }
  REQUIRE(time_high > 100.0);
  // Under the oracle, high season runs with the controlled matrix (8/365
  // exit rate), low season with the natural one (6/365 entry rate).
  const double exp_hl = time_high * 8.0 / 365.0;
  const double exp_lh = time_low * 6.0 / 365.0;
  CHECK(std::abs(high_to_low - exp_hl) < 3.0 * std::sqrt(exp_hl));
  CHECK(std::abs(low_to_high - exp_lh) < 3.0 * std::sqrt(exp_lh));
}

TEST_CASE("threshold policies flip exactly where their rules say") {
  ControlledRunConfig cfg;
  cfg.sis.T = 120.0;
  cfg.sim_seed = 31;
  cfg.filter_seed = 77;
  cfg.filter.particles = 200;
  const PolicyRule rule = PolicyRule::make_bayesian(0.95, 0.05);
  const ControlledRun run = controlled_simulate(rule, cfg);
  REQUIRE(run.trajectory.pts.size() > 2);
  int flips = 0;
  for (std::size_t k = 1; k < run.trajectory.pts.size(); ++k) {
    const TrajPoint& prev = run.trajectory.pts[k - 1];
    const TrajPoint& cur = run.trajectory.pts[k];
    REQUIRE_FALSE(std::isnan(cur.pi2hat));
    if (prev.phi == 0 && cur.phi == 1) {
      CHECK(cur.pi2hat >= 0.95);
      ++flips;
    } else if (prev.phi == 1 && cur.phi == 0) {
      CHECK(cur.pi2hat <= 0.05);
      CHECK(cur.I < 200.0);
      ++flips;
    }
  }
  INFO("flips observed: " << flips);
  // The EWMA-band rule: flips respect the bands relative to the running
  // average maintained by the simulation.
  cfg.sis.T = 150.0;
  const ControlledRun run2 =
      controlled_simulate(PolicyRule::make_infecteds(20.0, -10.0), cfg);
  Ewma ew(cfg.kappa, run2.trajectory.pts.front().I);
  for (std::size_t k = 1; k < run2.trajectory.pts.size(); ++k) {
    const TrajPoint& prev = run2.trajectory.pts[k - 1];
    const TrajPoint& cur = run2.trajectory.pts[k];
    ew.advance(cur.t - prev.t, prev.I);
    if (prev.phi == 0 && cur.phi == 1) {
      CHECK(cur.I - ew.value() > 20.0);
    } else if (prev.phi == 1 && cur.phi == 0) {
      CHECK(cur.I - ew.value() < -10.0);
      CHECK(cur.I < 200.0);
    }
  }
}

TEST_CASE("scenario evaluation reproduces bit-exactly under one master seed") {
  const std::vector<PolicyRule> rules{PolicyRule::make_baseline(),
                                      PolicyRule::make_oracle(),
                                      PolicyRule::make_infecteds(20.0, -10.0)};
  PolicyEvalConfig cfg;
  cfg.scenarios = 3;
  cfg.master_seed = 515;
  cfg.run.sis.T = 60.0;
  const auto a = monte_carlo_costs(rules, cfg);
  const auto b = monte_carlo_costs(rules, cfg);
  REQUIRE(a.size() == rules.size());
  REQUIRE(b.size() == rules.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].label == rules[r].label());
    CHECK(a[r].mean.c1 == b[r].mean.c1);  // bitwise
    CHECK(a[r].mean.c2 == b[r].mean.c2);
    CHECK(a[r].mean.ave_infecteds == b[r].mean.ave_infecteds);
    CHECK(a[r].std_error.c1 == b[r].std_error.c1);
    CHECK(a[r].std_error.startups == b[r].std_error.startups);
  }
}

TEST_CASE("a single-scenario evaluation equals that scenario's raw costs") {
  const std::vector<PolicyRule> rules{PolicyRule::make_baseline()};
  PolicyEvalConfig cfg;
  cfg.scenarios = 1;
  cfg.master_seed = 808;
  cfg.run.sis.T = 40.0;
  const auto out = monte_carlo_costs(rules, cfg);
  REQUIRE(out.size() == 1);

  // Reproduce the scenario draw by hand: theta1, then the two seeds.
  Rng scen = Rng::stream(808, 0);
  ControlledRunConfig rc = cfg.run;
  rc.sis.theta1 = scen.gamma(cfg.scenario_a1, cfg.scenario_b1);
  rc.sim_seed = scen.next_u64();
  rc.filter_seed = scen.next_u64();
  const ControlledRun run = controlled_simulate(rules[0], rc);
  CHECK(out[0].mean.c1 == run.summary.c1);
  CHECK(out[0].mean.c2 == run.summary.c2);
  CHECK(out[0].mean.ave_infecteds == run.summary.ave_infecteds);
  CHECK(out[0].std_error.c1 == 0.0);
}

TEST_CASE("common random numbers share the scenario draw across rules") {
  // With the same scenario index, every rule sees the same theta1 draw and
  // the same simulation stream; the baseline fields must therefore repeat
  // when the rule list is reordered.
  const std::vector<PolicyRule> ab{PolicyRule::make_baseline(),
                                   PolicyRule::make_infecteds(20.0, -10.0)};
  const std::vector<PolicyRule> ba{PolicyRule::make_infecteds(20.0, -10.0),
                                   PolicyRule::make_baseline()};
  PolicyEvalConfig cfg;
  cfg.scenarios = 2;
  cfg.master_seed = 99;
  cfg.run.sis.T = 50.0;
  const auto x = monte_carlo_costs(ab, cfg);
  const auto y = monte_carlo_costs(ba, cfg);
  CHECK(x[0].mean.c1 == y[1].mean.c1);
  CHECK(x[1].mean.c1 == y[0].mean.c1);
  CHECK(x[0].mean.startups == y[1].mean.startups);
}

TEST_CASE("evaluation config guards") {
  PolicyEvalConfig cfg;
  cfg.scenarios = 0;
  const std::vector<PolicyRule> rules{PolicyRule::make_baseline()};
  CHECK_THROWS_AS(monte_carlo_costs(rules, cfg), std::invalid_argument);
  CHECK_THROWS_AS(
      monte_carlo_costs(std::span<const PolicyRule>{}, PolicyEvalConfig{}),
      std::invalid_argument);
  const CostConfig cc{};
  Trajectory empty;
  CHECK_THROWS_AS(summarize_trajectory(empty, cc), std::invalid_argument);
}

}  // TEST_SUITE
