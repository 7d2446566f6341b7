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

#include "hmskm/conjugate.hpp"
#include "hmskm/kinetics.hpp"

// Seasonal SIS epidemic with demographic leakage: one tracked species
// (the infecteds count I in a population of size N) and two reactions,
//
//   infection:  I -> I + 1   at rate theta1(m) * (I + eta) * (N - I) / N
//   recovery:   I -> I - 1   at rate theta2 * I
//
// modulated by a two-regime season process (1 = low, 2 = high) with
// theta1(2) = (1 + SF) * theta1(1). The infection rates share one base
// parameter with regime coefficients (1, 1 + SF); recovery is regime
// independent. eta > 0 is an immigration-like forcing that keeps the
// infection hazard positive at I = 0, so the chain never absorbs.
namespace hmskm {

struct SISParams {
  double N = 10000.0;
  double eta = 2.0;
  double theta1 = 0.235;  // low-season infectiousness
  double SF = 0.15;       // high-season scale factor
  double theta2 = 0.25;   // recovery rate
  double mu12 = 6.0 / 365.0;  // low -> high switch rate, per day
  double mu21 = 2.0 / 365.0;  // high -> low switch rate, per day
  double I0 = 50.0;
  int M0 = 0;  // 0-based initial regime (0 = low season)
  double T = 273.0;
  double prior_a1 = 25.0, prior_b1 = 100.0;  // Gamma prior on theta1
  double prior_a2 = 25.0, prior_b2 = 100.0;  // Gamma prior on theta2

  void validate() const;
};

struct SISModel {
  ReactionSystem system;   // params = {theta1, theta2}
  RegimeModel regimes;
  SystemState init;
  SufficientStats prior;
  double horizon = 0.0;
};

SISModel build_sis(const SISParams& p);

// Deterministic balance point of the infecteds count with the regime frozen
// (0-based): the positive root of
//
//   theta1(m) * (I + eta) * (N - I) / N = theta2 * I.
inline constexpr int kSisInfection = 0;
inline constexpr int kSisRecovery = 1;

double carrying_capacity(const SISParams& p, int regime);

// Probability that the next event is of the given type; equals
// reaction_type_likelihood on the SIS system. The same per-regime ratio
// drives the particle weights and the exact filter's event update.
double sis_reaction_likelihood(const SISParams& p, const RateParams& params,
                               int q, double I, int regime);

}  // namespace hmskm
