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

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmskm/particle_learning.hpp"
#include "hmskm/sis.hpp"

// Binary countermeasure policies for the seasonal SIS model. The policy
// state phi in {0, 1} selects the regime generator (countermeasures push
// the season back toward low), and is re-evaluated at every transition of
// the simulation, reaction or regime switch alike; a threshold crossing
// strictly between transitions takes effect at the next one. Every rule
// has a hysteresis band: phi changes only when its start or stop region is
// entered, otherwise the previous value stands.
namespace hmskm {

// Discounted running average of the infecteds count. The standard form is
//
//   ewma_t = int_0^t e^{-kappa (t - s)} I_s ds / int_0^t e^{-kappa (t - s)} ds,
//
// a normalized average that discounts the past at rate kappa; ewma_0 = I_0.
// The `literal` variant is (1/t) int_0^t e^{-kappa s} I_s ds, which
// discounts recent observations instead; it is kept for comparison.
enum class EwmaForm { standard, literal };

class Ewma {
 public:
  Ewma(double kappa, double i0, EwmaForm form = EwmaForm::standard);

  // Advances time by dt during which the count was constant at level.
  void advance(double dt, double level);
  double value() const;
  double time() const { return t_; }

 private:
  double kappa_;
  EwmaForm form_;
  double t_ = 0.0;
  double i0_;
  double num_ = 0.0;  // discounted integral of the level
  double den_ = 0.0;  // discounted integral of 1 (standard form)
};

struct InfectedsRule {
  double upper = 20.0;   // start when I - ewma > upper
  double lower = -10.0;  // stop when I - ewma < lower and I < i_high
  double i_high = 200.0;
};

struct BayesianRule {
  double pi_on = 0.80;   // start when posterior P(high season) >= pi_on
  double pi_off = 0.01;  // stop when it <= pi_off and I < i_high
  double i_high = 200.0;
};

struct PolicyRule {
  enum class Kind { baseline, oracle, infecteds, bayesian };

  Kind kind = Kind::baseline;
  InfectedsRule infecteds{};
  BayesianRule bayesian{};

  static PolicyRule make_baseline();
  static PolicyRule make_oracle();
  static PolicyRule make_infecteds(double upper, double lower,
                                   double i_high = 200.0);
  static PolicyRule make_bayesian(double pi_on, double pi_off,
                                  double i_high = 200.0);

  bool needs_filter() const { return kind == Kind::bayesian; }
  std::string label() const;
};

// One rule evaluation. `pi2hat` is the posterior probability of the high
// season (ignored unless the rule is bayesian; NaN allowed otherwise);
// `true_m` is the latent regime (used only by the oracle).
int evaluate_rule(const PolicyRule& rule, double I, double ewma, double pi2hat,
                  int true_m, int phi_prev);

// Regime generators by policy state, rates per day.
struct ControlledRegimeModel {
  Eigen::MatrixXd G_off;  // phi = 0
  Eigen::MatrixXd G_on;   // phi = 1

  const Eigen::MatrixXd& at(int phi) const { return phi ? G_on : G_off; }

  // [[-6, 6], [2, -2]] / 365 off, [[-1, 1], [8, -8]] / 365 on.
  static ControlledRegimeModel seasonal_default();
};

// Piecewise-constant trajectory of everything the costs and summaries
// consume. A point records the values in force from its time until the
// next point; pi2hat is NaN when no filter is attached.
struct TrajPoint {
  double t = 0.0;
  double I = 0.0;
  int m = 0;
  int phi = 0;
  double pi2hat = 0.0;
};

struct Trajectory {
  std::vector<TrajPoint> pts;
  double t_end = 0.0;
};

// Cost functionals over a trajectory:
//
//   c1 = int I + quad_weight * (I - quad_ref)_+^2 + on_rate_1 * 1{phi=1} dt
//   c2 = int I + cap_penalty * 1{I > cap_level} + on_rate_2 * 1{phi=1} dt
//        + startup_cost * #(phi 0 -> 1 transitions)
struct CostConfig {
  double quad_weight = 0.02;
  double quad_ref = 200.0;
  double on_rate_1 = 50.0;
  double cap_level = 300.0;
  double cap_penalty = 1000.0;
  double on_rate_2 = 200.0;
  double startup_cost = 1400.0;
};

double cost_c1(const Trajectory& traj, const CostConfig& cfg);
double cost_c2(const Trajectory& traj, const CostConfig& cfg);

struct ScenarioSummary {
  double ave_infecteds = 0.0;   // (1/T) int I dt
  double policy_freq = 0.0;     // fraction of time phi = 1
  double days_above_cap = 0.0;  // int 1{I > cap_level} dt
  double startups = 0.0;        // # phi 0 -> 1 transitions
  double c1 = 0.0;
  double c2 = 0.0;
};

ScenarioSummary summarize_trajectory(const Trajectory& traj,
                                     const CostConfig& cfg);

struct ControlledRunConfig {
  SISParams sis;                 // theta1/theta2 here are the scenario truth
  ControlledRegimeModel control = ControlledRegimeModel::seasonal_default();
  double kappa = 1.0 / 14.0;
  EwmaForm ewma_form = EwmaForm::standard;
  CostConfig costs{};
  SmcConfig filter{};            // used when the rule needs the posterior
  bool force_filter = false;     // attach the filter for any rule
  std::uint64_t sim_seed = 1;
  std::uint64_t filter_seed = 2;
};

struct ControlledRun {
  Trajectory trajectory;
  EventPath path;  // reaction events and regime switches actually realized
  ScenarioSummary summary;
};

// Simulates one controlled scenario. With the baseline rule and the same
// seed, the realized path is bit-identical to simulate_path under G_off
// (the filter, when attached, draws from its own stream).
ControlledRun controlled_simulate(const PolicyRule& rule,
                                  const ControlledRunConfig& cfg);

// Monte Carlo cost comparison under common random numbers: scenario k
// draws theta1 ~ Gamma(scenario_a1, scenario_b1) (theta2 stays at the
// configured value, treated as known by the filter) and reuses the same
// seeds for every rule.
struct PolicyEvalConfig {
  ControlledRunConfig run;
  double scenario_a1 = 1700.0;
  double scenario_b1 = 7300.0;
  int scenarios = 100;
  std::uint64_t master_seed = 1;
};

struct RuleCosts {
  std::string label;
  ScenarioSummary mean;
  ScenarioSummary std_error;
};

std::vector<RuleCosts> monte_carlo_costs(std::span<const PolicyRule> rules,
                                         const PolicyEvalConfig& cfg);

}  // namespace hmskm
