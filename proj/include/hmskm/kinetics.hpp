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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmskm/errors.hpp"
#include "hmskm/numeric.hpp"

// Core model types for stochastic kinetic systems whose reaction rates are
// modulated by a latent finite-state Markov regime. The propensity of
// reaction q in regime i is
//
//     alpha_q(t, x, i) = theta_q(i) * h_q(t, x),
//
// where h_q is a hazard law of the population state and theta_q(i) is a
// regime-dependent rate constant. Time is measured in days throughout;
// rates are per day.
namespace hmskm {

// Population counts, one entry per species. Componentwise nonnegative.
using StateVec = std::vector<std::int64_t>;

// Joint state of the observable counts and the latent regime; regimes are
// 0-based internally (serialization uses 1-based labels).
struct SystemState {
  double t = 0.0;
  StateVec x;
  int m = 0;
};

// Hazard law h_q(t, x) >= 0. Laws come from a registered catalog so models
// can round-trip through descriptors; `params` holds the catalog arguments.
// Time-independent laws are evaluated once per constancy interval; laws
// with time dependence must also supply `sup_bound`, a least upper bound of
// h over a time window at fixed x, which the simulator thins against.
struct HazardLaw {
  std::string name;
  std::map<std::string, double> params;
  std::function<double(double t, const StateVec& x)> value;
  bool time_independent = true;
  std::function<double(double t0, double t1, const StateVec& x)> sup_bound;
};

// Catalog lookup. Built-in laws:
//   "sis_infection" {N, eta, species=0}:  h = (x + eta) * (N - x) / N
//   "linear"        {species=0}:          h = x
//   "constant"      {value}:              h = value
HazardLaw make_hazard(const std::string& name,
                      const std::map<std::string, double>& params);

// Extension point for user laws; `make_hazard` consults the registry first.
void register_hazard(
    const std::string& name,
    std::function<HazardLaw(const std::map<std::string, double>&)> factory);

// Rate constants theta_q(i) are expressed through a small set of base
// parameters with per-(reaction, regime) coefficients:
//
//     theta_q(i) = coef(q, i) * base[param(q, i)].
//
// Sharing one base parameter across regimes ties the regime rates together
// (a single infectiousness parameter scaled by a seasonal factor); giving
// every (q, i) cell its own parameter recovers the fully free panel.
struct TieEntry {
  int param = 0;
  double coef = 1.0;
};

// Base parameter values; all entries strictly positive.
struct RateParams {
  std::vector<double> base;
};

struct ReactionSystem {
  int species = 1;
  int regimes = 1;

  std::vector<StateVec> delta;             // per reaction, size `species`
  std::vector<HazardLaw> hazard;           // per reaction
  std::vector<std::string> reaction_name;  // per reaction

  std::vector<std::string> param_name;     // base parameters
  std::vector<TieEntry> tie;               // reactions() x regimes, row-major
  RateParams params;                       // reference (simulation truth)

  int reactions() const { return static_cast<int>(delta.size()); }
  int param_count() const { return static_cast<int>(param_name.size()); }

  const TieEntry& tie_at(int q, int i) const { return tie[q * regimes + i]; }

  bool time_independent() const {
    for (const auto& h : hazard)
      if (!h.time_independent) return false;
    return true;
  }

  // Throws std::invalid_argument on shape mismatches, nonpositive base
  // parameters, or negative tie coefficients.
  void validate() const;
};

// Latent regime generator G(t, x): off-diagonal entries nonnegative, rows
// sum to zero. The constant matrix `G` is used unless `fn` is set; state
// dependence is supported, time dependence between transitions is not.
struct RegimeModel {
  int regimes = 1;
  Eigen::MatrixXd G;
  std::function<Eigen::MatrixXd(double t, const StateVec& x)> fn;

  Eigen::MatrixXd at(double t, const StateVec& x) const {
    return fn ? fn(t, x) : G;
  }

  void validate() const;
};

// A realized trajectory over [t0, t_end]: the reaction events that were
// observed, and optionally the latent regime path. Event times are strictly
// increasing; a regime switch coinciding with an event time (a probability
// zero tie) is applied before the event.
struct ReactionEvent {
  double time = 0.0;
  int reaction = 0;
};

struct RegimeSwitch {
  double time = 0.0;
  int regime = 0;  // regime in force from `time` on
};

struct EventPath {
  double t0 = 0.0;
  double t_end = 0.0;
  StateVec x0;
  int m0 = 0;
  std::vector<ReactionEvent> events;
  std::optional<std::vector<RegimeSwitch>> regime_path;

  // Throws std::invalid_argument if times are not strictly increasing and
  // inside [t0, t_end], or if replaying the events drives any count below
  // zero.
  void validate(const ReactionSystem& sys) const;
};

// theta_q(i) under explicit parameter values.
inline double rate_value(const ReactionSystem& sys, const RateParams& params,
                         int q, int i) {
  const TieEntry& t = sys.tie_at(q, i);
  return t.coef * params.base[t.param];
}

// alpha_q(t, x, i).
double propensity(const ReactionSystem& sys, const RateParams& params, int q,
                  double t, const StateVec& x, int m);

// alpha_bar(t, x, i) = sum_q alpha_q.
double total_rate(const ReactionSystem& sys, const RateParams& params,
                  double t, const StateVec& x, int m);

// Probability that the next event is of type q given one occurs now:
// f_q = alpha_q / alpha_bar. Throws DegenerateStateError when alpha_bar = 0.
double reaction_type_likelihood(const ReactionSystem& sys,
                                const RateParams& params, int q, double t,
                                const StateVec& x, int m);

// Convenience overloads using the system's own parameter values.
double propensity(const ReactionSystem& sys, int q, double t,
                  const StateVec& x, int m);
double total_rate(const ReactionSystem& sys, double t, const StateVec& x,
                  int m);
double reaction_type_likelihood(const ReactionSystem& sys, int q, double t,
                                const StateVec& x, int m);

// Per-regime vectors used by the filters: component i is the value in
// regime i at fixed (t, x).
Eigen::VectorXd total_rate_vector(const ReactionSystem& sys,
                                  const RateParams& params, double t,
                                  const StateVec& x);
Eigen::VectorXd propensity_vector(const ReactionSystem& sys,
                                  const RateParams& params, int q, double t,
                                  const StateVec& x);

// Log-likelihood of the reaction events given the regime path (which must
// be present), split into the survival integral -int alpha_bar ds and the
// sum of log event propensities. An event with zero propensity makes
// `events` (and the total) log_zero.
struct PathLogLik {
  double survival = 0.0;
  double events = 0.0;
  double total() const { return survival + events; }
};

PathLogLik path_log_likelihood(const ReactionSystem& sys,
                               const RateParams& params,
                               const EventPath& path);
PathLogLik path_log_likelihood(const ReactionSystem& sys,
                               const EventPath& path);

// Chronological replay of a path with its regime overlay. `piece_fn` is
// invoked for every maximal interval on which (x, m) is constant, and
// `event_fn` at every reaction event with the pre-event state and the
// regime in force. Switches at an event time are applied first.
//
//   piece_fn(double t0, double t1, const StateVec& x, int m)
//   event_fn(double t, int q, const StateVec& x_pre, int m)
template <class PieceFn, class EventFn>
void for_each_piece(const ReactionSystem& sys, const EventPath& path,
                    PieceFn&& piece_fn, EventFn&& event_fn) {
  StateVec x = path.x0;
  int m = path.m0;
  double t = path.t0;
  std::size_t ie = 0, is = 0;
  const std::vector<RegimeSwitch>* sw =
      path.regime_path ? &*path.regime_path : nullptr;
  const std::size_t ne = path.events.size();
  const std::size_t ns = sw ? sw->size() : 0;
  while (ie < ne || is < ns) {
    const double te = ie < ne ? path.events[ie].time : path.t_end;
    const double ts = is < ns ? (*sw)[is].time : path.t_end;
    if (is < ns && ts <= te) {
      if (ts > t) piece_fn(t, ts, x, m);
      m = (*sw)[is].regime;
      t = ts;
      ++is;
    } else {
      if (te > t) piece_fn(t, te, x, m);
      const int q = path.events[ie].reaction;
      event_fn(te, q, x, m);
      const StateVec& d = sys.delta[q];
      for (int s = 0; s < sys.species; ++s) x[s] += d[s];
      t = te;
      ++ie;
    }
  }
  if (path.t_end > t) piece_fn(t, path.t_end, x, m);
}

}  // namespace hmskm
