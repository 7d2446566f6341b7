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
#include <span>
#include <vector>

#include "hmskm/kinetics.hpp"

// Exact regime filter for known rate parameters. Between events the
// posterior follows the killed semigroup
//
//     P(dt) = exp(dt * (G - diag(kill))),      kill_i = alpha_bar(x, i),
//
// renormalized (entry (i, j) is the probability of moving i -> j with no
// reaction firing); at an event of type q it reweights by the per-regime
// event propensities alpha_q(x-, i). Requires time-independent hazards.
namespace hmskm {

// exp(dt * (G - diag(kill))). Substochastic: entries >= 0, row sums <= 1
// and strictly decreasing in dt when min kill > 0. The 2-state case uses a
// closed-form eigendecomposition; larger systems use Pade scaling-squaring.
Eigen::MatrixXd killed_transition_matrix(const Eigen::MatrixXd& G,
                                         const Eigen::VectorXd& kill,
                                         double dt);

// Allocation-free 2-state kernel for the filter hot paths. Generator
// [[-mu12, mu12], [mu21, -mu21]], killing rates (kill1, kill2).
struct Kernel2 {
  double p11, p12, p21, p22;
};
Kernel2 killed_kernel2(double mu12, double mu21, double kill1, double kill2,
                       double dt);

// One drift step pi -> pi * P(dt), renormalized. Throws NumericError when
// the surviving mass underflows to zero; callers should subdivide.
Eigen::VectorXd drift_pi_raw(const Eigen::VectorXd& pi,
                             const Eigen::MatrixXd& G,
                             const Eigen::VectorXd& kill, double dt);

// Drift with automatic subdivision: long intervals are split so each piece
// keeps the survival exponent moderate, making underflow impossible while
// leaving the result unchanged (the semigroup property composes exactly).
Eigen::VectorXd drift_pi(const Eigen::VectorXd& pi, const Eigen::MatrixXd& G,
                         const Eigen::VectorXd& kill, double dt);

// Event update pi_i -> pi_i * alpha_event(i), renormalized.
// `alpha_event(i)` is the propensity of the observed reaction in regime i.
Eigen::VectorXd jump_update_pi(const Eigen::VectorXd& pi,
                               const Eigen::VectorXd& alpha_event);

struct FilterPoint {
  double t = 0.0;
  Eigen::VectorXd pi;
  bool at_event = false;  // post event update, as opposed to a drifted query
};

// Runs the filter over a path, emitting the posterior after every event
// update and at every requested query time (drifted from the last event).
// pi0 is the prior over the initial regime.
std::vector<FilterPoint> run_exact_filter(
    const ReactionSystem& sys, const RateParams& params,
    const RegimeModel& regimes, const EventPath& path,
    const Eigen::VectorXd& pi0, std::span<const double> query_times = {});

}  // namespace hmskm
