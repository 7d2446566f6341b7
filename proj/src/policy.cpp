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

#include "hmskm/policy.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

#include "hmskm/parallel.hpp"
#include "hmskm/simulate.hpp"

namespace hmskm {

Ewma::Ewma(double kappa, double i0, EwmaForm form)
    : kappa_(kappa), form_(form), i0_(i0) {
  if (!(kappa > 0)) throw std::invalid_argument("kappa must be > 0");
}

void Ewma::advance(double dt, double level) {
  if (!(dt >= 0)) throw std::invalid_argument("dt must be >= 0");
  if (dt == 0) return;
  if (form_ == EwmaForm::standard) {
    const double e = std::exp(-kappa_ * dt);
    const double win = (1.0 - e) / kappa_;
    num_ = num_ * e + level * win;
    den_ = den_ * e + win;
  } else {
    num_ += level *
            (std::exp(-kappa_ * t_) - std::exp(-kappa_ * (t_ + dt))) / kappa_;
  }
  t_ += dt;
}

double Ewma::value() const {
  if (t_ <= 0) return i0_;
  return form_ == EwmaForm::standard ? num_ / den_ : num_ / t_;
}

PolicyRule PolicyRule::make_baseline() { return {}; }

PolicyRule PolicyRule::make_oracle() {
  PolicyRule r;
  r.kind = Kind::oracle;
  return r;
}

PolicyRule PolicyRule::make_infecteds(double upper, double lower,
                                      double i_high) {
  PolicyRule r;
  r.kind = Kind::infecteds;
  r.infecteds = {upper, lower, i_high};
  return r;
}

PolicyRule PolicyRule::make_bayesian(double pi_on, double pi_off,
                                     double i_high) {
  PolicyRule r;
  r.kind = Kind::bayesian;
  r.bayesian = {pi_on, pi_off, i_high};
  return r;
}

std::string PolicyRule::label() const {
  char buf[64];
  switch (kind) {
    case Kind::baseline:
      return "baseline";
    case Kind::oracle:
      return "oracle";
    case Kind::infecteds:
      std::snprintf(buf, sizeof buf, "infecteds(%g,%g)", infecteds.upper,
                    infecteds.lower);
      return buf;
    case Kind::bayesian:
      std::snprintf(buf, sizeof buf, "bayesian(%g,%g)", bayesian.pi_on,
                    bayesian.pi_off);
      return buf;
  }
  return "unknown";
}

int evaluate_rule(const PolicyRule& rule, double I, double ewma, double pi2hat,
                  int true_m, int phi_prev) {
  switch (rule.kind) {
    case PolicyRule::Kind::baseline:
      return 0;
    case PolicyRule::Kind::oracle:
      return true_m == 1 ? 1 : 0;
    case PolicyRule::Kind::infecteds: {
      const InfectedsRule& r = rule.infecteds;
      if (phi_prev == 0) return I - ewma > r.upper ? 1 : 0;
      return (I - ewma < r.lower && I < r.i_high) ? 0 : 1;
    }
    case PolicyRule::Kind::bayesian: {
      const BayesianRule& r = rule.bayesian;
      if (std::isnan(pi2hat))
        throw std::invalid_argument(
            "the bayesian rule needs a posterior value");
      if (phi_prev == 0) return pi2hat >= r.pi_on ? 1 : 0;
      return (pi2hat <= r.pi_off && I < r.i_high) ? 0 : 1;
    }
  }
  return phi_prev;
}

ControlledRegimeModel ControlledRegimeModel::seasonal_default() {
  ControlledRegimeModel c;
  c.G_off = Eigen::MatrixXd(2, 2);
  c.G_off << -6.0, 6.0, 2.0, -2.0;
  c.G_off /= 365.0;
  c.G_on = Eigen::MatrixXd(2, 2);
  c.G_on << -1.0, 1.0, 8.0, -8.0;
  c.G_on /= 365.0;
  return c;
}

namespace {

double piece_c1(const TrajPoint& p, const CostConfig& cfg) {
  const double over = std::max(p.I - cfg.quad_ref, 0.0);
  return p.I + cfg.quad_weight * over * over + (p.phi ? cfg.on_rate_1 : 0.0);
}

double piece_c2(const TrajPoint& p, const CostConfig& cfg) {
  return p.I + (p.I > cfg.cap_level ? cfg.cap_penalty : 0.0) +
         (p.phi ? cfg.on_rate_2 : 0.0);
}

template <class PieceRate>
double integrate_pieces(const Trajectory& traj, PieceRate&& rate) {
  double total = 0;
  for (std::size_t k = 0; k < traj.pts.size(); ++k) {
    const double t1 =
        k + 1 < traj.pts.size() ? traj.pts[k + 1].t : traj.t_end;
    total += rate(traj.pts[k]) * (t1 - traj.pts[k].t);
  }
  return total;
}

double count_startups(const Trajectory& traj) {
  int prev = 0;
  int n = 0;
  for (const auto& p : traj.pts) {
    if (p.phi == 1 && prev == 0) ++n;
    prev = p.phi;
  }
  return n;
}

}  // namespace

double cost_c1(const Trajectory& traj, const CostConfig& cfg) {
  return integrate_pieces(traj, [&](const TrajPoint& p) { return piece_c1(p, cfg); });
}

double cost_c2(const Trajectory& traj, const CostConfig& cfg) {
  return integrate_pieces(traj,
                          [&](const TrajPoint& p) { return piece_c2(p, cfg); }) +
         cfg.startup_cost * count_startups(traj);
}

ScenarioSummary summarize_trajectory(const Trajectory& traj,
                                     const CostConfig& cfg) {
  if (traj.pts.empty()) throw std::invalid_argument("empty trajectory");
  const double T = traj.t_end - traj.pts.front().t;
  if (!(T > 0)) throw std::invalid_argument("trajectory spans no time");
  ScenarioSummary s;
  s.ave_infecteds =
      integrate_pieces(traj, [](const TrajPoint& p) { return p.I; }) / T;
  s.policy_freq = integrate_pieces(traj, [](const TrajPoint& p) {
                    return p.phi ? 1.0 : 0.0;
                  }) /
                  T;
  s.days_above_cap = integrate_pieces(traj, [&](const TrajPoint& p) {
    return p.I > cfg.cap_level ? 1.0 : 0.0;
  });
  s.startups = count_startups(traj);
  s.c1 = cost_c1(traj, cfg);
  s.c2 = cost_c2(traj, cfg);
  return s;
}

ControlledRun controlled_simulate(const PolicyRule& rule,
                                  const ControlledRunConfig& cfg) {
  SISModel model = build_sis(cfg.sis);
  const ReactionSystem& sys = model.system;

  RegimeModel rm_off;
  rm_off.regimes = 2;
  rm_off.G = cfg.control.G_off;
  rm_off.validate();
  RegimeModel rm_on;
  rm_on.regimes = 2;
  rm_on.G = cfg.control.G_on;
  rm_on.validate();

  const double T = model.horizon;
  Rng rng_sim(cfg.sim_seed);

  // The filter treats theta1 as unknown with the configured prior and
  // theta2 as known; it watches reaction events only.
  std::unique_ptr<ParticleLearningFilter> filter;
  if (rule.needs_filter() || cfg.force_filter) {
    ParamStatus status = ParamStatus::all_estimated(2);
    status.known[1] = cfg.sis.theta2;
    Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(2);
    pi0[model.init.m] = 1.0;
    SmcConfig fcfg = cfg.filter;
    fcfg.seed = cfg.filter_seed;
    filter = std::make_unique<ParticleLearningFilter>(
        sys, model.prior, std::move(status), std::move(pi0), fcfg);
  }

  SystemState state = model.init;
  Ewma ewma(cfg.kappa, static_cast<double>(state.x[0]), cfg.ewma_form);

  ControlledRun run;
  run.path.t0 = 0.0;
  run.path.t_end = T;
  run.path.x0 = state.x;
  run.path.m0 = state.m;
  run.path.regime_path.emplace();
  run.trajectory.t_end = T;

  std::vector<GapSegment> seg_buf;
  double seg_start = 0.0;

  double pi2 = std::numeric_limits<double>::quiet_NaN();
  if (filter) pi2 = filter->regime_posterior()[1];

  int phi = evaluate_rule(rule, static_cast<double>(state.x[0]), ewma.value(),
                          pi2, state.m, 0);
  run.trajectory.pts.push_back(
      {0.0, static_cast<double>(state.x[0]), state.m, phi, pi2});

  auto drifted_pi2 = [&](double t_now) {
    std::vector<GapSegment> partial = seg_buf;
    partial.push_back({t_now - seg_start, &cfg.control.at(phi)});
    return filter->regime_posterior_drifted(partial, state.x)[1];
  };

  while (state.t < T) {
    const RegimeModel& rm = phi ? rm_on : rm_off;
    const Transition tr =
        next_transition(sys, sys.params, rm, state, T, rng_sim);
    if (tr.kind == TransitionKind::none) break;

    ewma.advance(tr.time - state.t, static_cast<double>(state.x[0]));

    if (tr.kind == TransitionKind::reaction) {
      run.path.events.push_back({tr.time, tr.index});
      if (filter) {
        seg_buf.push_back({tr.time - seg_start, &cfg.control.at(phi)});
        EventStep ev;
        ev.segments = seg_buf;
        ev.reaction = tr.index;
        ev.x_pre = &state.x;
        ev.t_event = tr.time;
        filter->step(ev);
        seg_buf.clear();
        seg_start = tr.time;
        pi2 = filter->regime_posterior()[1];
      }
      apply_transition(sys, state, tr);
    } else {
      run.path.regime_path->push_back({tr.time, tr.index});
      apply_transition(sys, state, tr);
      if (filter) pi2 = drifted_pi2(tr.time);
    }

    const int phi_new =
        evaluate_rule(rule, static_cast<double>(state.x[0]), ewma.value(), pi2,
                      state.m, phi);
    if (phi_new != phi) {
      if (filter && state.t > seg_start) {
        seg_buf.push_back({state.t - seg_start, &cfg.control.at(phi)});
        seg_start = state.t;
      }
      phi = phi_new;
    }
    run.trajectory.pts.push_back(
        {state.t, static_cast<double>(state.x[0]), state.m, phi, pi2});
  }

  run.summary = summarize_trajectory(run.trajectory, cfg.costs);
  return run;
}

std::vector<RuleCosts> monte_carlo_costs(std::span<const PolicyRule> rules,
                                         const PolicyEvalConfig& cfg) {
  if (rules.empty()) throw std::invalid_argument("no rules to evaluate");
  if (cfg.scenarios < 1)
    throw std::invalid_argument("need at least one scenario");

  const std::size_t nr = rules.size();
  constexpr int kFields = 6;

  auto fields = [](const ScenarioSummary& s) {
    return std::array<double, kFields>{s.ave_infecteds, s.policy_freq,
                                       s.days_above_cap, s.startups, s.c1,
                                       s.c2};
  };

  // Scenarios are independent given their per-scenario streams, so they run
  // in parallel into disjoint slots; the reduction below is sequential, so
  // the summaries are identical at every HMSKM_THREADS setting.
  std::vector<std::array<double, kFields>> cell(
      static_cast<std::size_t>(cfg.scenarios) * nr);
  parallel_for(env_thread_count(), cfg.scenarios, [&](int kb, int ke) {
    for (int k = kb; k < ke; ++k) {
      Rng scen = Rng::stream(cfg.master_seed, static_cast<std::uint64_t>(k));
      ControlledRunConfig rc = cfg.run;
      rc.sis.theta1 = scen.gamma(cfg.scenario_a1, cfg.scenario_b1);
      rc.sim_seed = scen.next_u64();
      rc.filter_seed = scen.next_u64();
      rc.filter.threads = 1;  // parallelism lives at the scenario level
      for (std::size_t r = 0; r < nr; ++r)
        cell[static_cast<std::size_t>(k) * nr + r] =
            fields(controlled_simulate(rules[r], rc).summary);
    }
  });

  std::vector<std::array<double, kFields>> sum(nr), sumsq(nr);
  for (int k = 0; k < cfg.scenarios; ++k)
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& f = cell[static_cast<std::size_t>(k) * nr + r];
      for (int i = 0; i < kFields; ++i) {
        sum[r][i] += f[i];
        sumsq[r][i] += f[i] * f[i];
      }
    }

  std::vector<RuleCosts> out(nr);
  const double n = cfg.scenarios;
  for (std::size_t r = 0; r < nr; ++r) {
    out[r].label = rules[r].label();
    std::array<double, kFields> mean{}, se{};
    for (int i = 0; i < kFields; ++i) {
      mean[i] = sum[r][i] / n;
      const double var =
          std::max(0.0, sumsq[r][i] / n - mean[i] * mean[i]);
      se[i] = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    }
    auto unpack = [](const std::array<double, kFields>& f) {
      ScenarioSummary s;
      s.ave_infecteds = f[0];
      s.policy_freq = f[1];
      s.days_above_cap = f[2];
      s.startups = f[3];
      s.c1 = f[4];
      s.c2 = f[5];
      return s;
    };
    out[r].mean = unpack(mean);
    out[r].std_error = unpack(se);
  }
  return out;
}

}  // namespace hmskm
