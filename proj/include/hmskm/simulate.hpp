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

#include <cstdint>

#include "hmskm/kinetics.hpp"
#include "hmskm/random.hpp"

namespace hmskm {

struct SimConfig {
  double horizon = 0.0;
  std::uint64_t seed = 1;
  bool record_regime = true;
};

enum class TransitionKind { reaction, regime_switch, none };

// Next transition of the joint (X, M) chain. `time` is absolute; `index` is
// the reaction type or the new regime. `none` means nothing fires before
// `t_max` (the state may be absorbing).
struct Transition {
  double time = 0.0;
  TransitionKind kind = TransitionKind::none;
  int index = 0;
};

// Races the reaction clock (rate alpha_bar) against the regime clock (rate
// -G[m][m]). Exact when hazards are time-independent; time-varying hazards
// are thinned against their declared sup bounds over [state.t, t_max].
// A tie between the two clocks (probability zero) resolves to the reaction.
Transition next_transition(const ReactionSystem& sys, const RateParams& params,
                           const RegimeModel& regimes, const SystemState& state,
                           double t_max, Rng& rng);

// Applies a transition to the state in place.
void apply_transition(const ReactionSystem& sys, SystemState& state,
                      const Transition& tr);

// Gillespie simulation over [init.t, init.t + cfg.horizon]. The returned
// path is bit-identical for a given seed. With record_regime = false the
// regime path is omitted (the draws consumed are identical either way).
EventPath simulate_path(const ReactionSystem& sys, const RateParams& params,
                        const RegimeModel& regimes, const SystemState& init,
                        const SimConfig& cfg);

EventPath simulate_path(const ReactionSystem& sys, const RateParams& params,
                        const RegimeModel& regimes, const SystemState& init,
                        double horizon, Rng& rng, bool record_regime = true);

}  // namespace hmskm
