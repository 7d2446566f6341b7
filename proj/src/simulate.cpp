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

#include "hmskm/simulate.hpp"

#include <cmath>
#include <limits>

#include "hmskm/errors.hpp"

namespace hmskm {

namespace {

int pick_reaction(const ReactionSystem& sys, const RateParams& params,
                  double t, const StateVec& x, int m, double total, Rng& rng) {
  const int nq = sys.reactions();
  double u = rng.uniform() * total;
  for (int q = 0; q < nq - 1; ++q) {
    u -= propensity(sys, params, q, t, x, m);
    if (u < 0) return q;
  }
  return nq - 1;
}

int pick_destination(const Eigen::MatrixXd& G, int m, Rng& rng) {
  const int n = static_cast<int>(G.rows());
  double u = rng.uniform() * (-G(m, m));
  int last = -1;
  for (int j = 0; j < n; ++j) {
    if (j == m) continue;
    last = j;
    u -= G(m, j);
    if (u < 0) return j;
  }
  return last;
}

bool all_time_independent(const ReactionSystem& sys) {
  for (const auto& h : sys.hazard)
    if (!h.time_independent) return false;
  return true;
}

// Reaction-clock draw when some hazards vary in time: thin candidate events
// against the declared sup bound over the remaining window.
double thinned_reaction_time(const ReactionSystem& sys,
                             const RateParams& params, const StateVec& x,
                             int m, double t_now, double t_max, Rng& rng) {
  double t = t_now;
  while (t < t_max) {
    double bound = 0;
    for (int q = 0; q < sys.reactions(); ++q) {
      const double theta = rate_value(sys, params, q, m);
      if (theta == 0) continue;
      const HazardLaw& h = sys.hazard[q];
      bound += theta * (h.time_independent ? h.value(t, x)
                                           : h.sup_bound(t, t_max, x));
    }
    if (bound <= 0) return std::numeric_limits<double>::infinity();
    t += rng.exponential(bound);
    if (t >= t_max) return std::numeric_limits<double>::infinity();
    const double actual = total_rate(sys, params, t, x, m);
    if (rng.uniform() * bound < actual) return t;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

Transition next_transition(const ReactionSystem& sys, const RateParams& params,
                           const RegimeModel& regimes,
                           const SystemState& state, double t_max, Rng& rng) {
  const Eigen::MatrixXd& G = regimes.at(state.t, state.x);
  const double switch_rate = -G(state.m, state.m);

  double reaction_time;
  if (all_time_independent(sys)) {
    const double total = total_rate(sys, params, state.t, state.x, state.m);
    reaction_time = total > 0 ? state.t + rng.exponential(total)
                              : std::numeric_limits<double>::infinity();
  } else {
    reaction_time =
        thinned_reaction_time(sys, params, state.x, state.m, state.t, t_max,
                              rng);
  }
  const double switch_time =
      switch_rate > 0 ? state.t + rng.exponential(switch_rate)
                      : std::numeric_limits<double>::infinity();

  Transition tr;
  if (reaction_time >= t_max && switch_time >= t_max) {
    tr.time = t_max;
    tr.kind = TransitionKind::none;
    return tr;
  }
  if (reaction_time <= switch_time) {
    tr.time = reaction_time;
    tr.kind = TransitionKind::reaction;
    tr.index = pick_reaction(sys, params, reaction_time, state.x, state.m,
                             total_rate(sys, params, reaction_time, state.x,
                                        state.m),
                             rng);
  } else {
    tr.time = switch_time;
    tr.kind = TransitionKind::regime_switch;
    tr.index = pick_destination(G, state.m, rng);
  }
  return tr;
}

void apply_transition(const ReactionSystem& sys, SystemState& state,
                      const Transition& tr) {
  state.t = tr.time;
  switch (tr.kind) {
    case TransitionKind::reaction: {
      const StateVec& d = sys.delta[tr.index];
      for (int s = 0; s < sys.species; ++s) {
        state.x[s] += d[s];
        if (state.x[s] < 0)
          throw DegenerateStateError("population count went negative");
      }
      break;
    }
    case TransitionKind::regime_switch:
      state.m = tr.index;
      break;
    case TransitionKind::none:
      break;
  }
}

EventPath simulate_path(const ReactionSystem& sys, const RateParams& params,
                        const RegimeModel& regimes, const SystemState& init,
                        double horizon, Rng& rng, bool record_regime) {
  if (!(horizon >= 0)) throw std::invalid_argument("horizon must be >= 0");
  EventPath path;
  path.t0 = init.t;
  path.t_end = init.t + horizon;
  path.x0 = init.x;
  path.m0 = init.m;
  if (record_regime) path.regime_path.emplace();

  SystemState state = init;
  while (state.t < path.t_end) {
    const Transition tr =
        next_transition(sys, params, regimes, state, path.t_end, rng);
    if (tr.kind == TransitionKind::none) break;
    apply_transition(sys, state, tr);
    if (tr.kind == TransitionKind::reaction) {
      path.events.push_back({tr.time, tr.index});
    } else if (record_regime) {
      path.regime_path->push_back({tr.time, tr.index});
    }
  }
  return path;
}

EventPath simulate_path(const ReactionSystem& sys, const RateParams& params,
                        const RegimeModel& regimes, const SystemState& init,
                        const SimConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_path(sys, params, regimes, init, cfg.horizon, rng,
                       cfg.record_regime);
}

}  // namespace hmskm
