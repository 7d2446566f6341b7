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

#include "hmskm/sis.hpp"

#include <cmath>
#include <stdexcept>

namespace hmskm {

void SISParams::validate() const {
  if (!(N > 0) || !(eta >= 0) || !(theta1 > 0) || !(theta2 > 0))
    throw std::invalid_argument("SIS rates and sizes must be positive");
  if (!(SF > -1.0))
    throw std::invalid_argument("the seasonal factor must exceed -1");
  if (!(mu12 >= 0) || !(mu21 >= 0))
    throw std::invalid_argument("switch rates must be >= 0");
  if (I0 < 0 || I0 > N)
    throw std::invalid_argument("I0 must lie in [0, N]");
  if (M0 != 0 && M0 != 1)
    throw std::invalid_argument("M0 must be 0 (low) or 1 (high)");
  if (!(T >= 0)) throw std::invalid_argument("horizon must be >= 0");
  if (!(prior_a1 > 0) || !(prior_b1 > 0) || !(prior_a2 > 0) ||
      !(prior_b2 > 0))
    throw std::invalid_argument("prior hyperparameters must be > 0");
}

SISModel build_sis(const SISParams& p) {
  p.validate();
  SISModel model;

  ReactionSystem& sys = model.system;
  sys.species = 1;
  sys.regimes = 2;
  sys.delta = {{+1}, {-1}};
  sys.hazard = {make_hazard("sis_infection", {{"N", p.N}, {"eta", p.eta}}),
                make_hazard("linear", {})};
  sys.reaction_name = {"infection", "recovery"};
  sys.param_name = {"theta1", "theta2"};
  // theta1 is shared across seasons through the (1, 1 + SF) coefficients;
  // theta2 is season independent.
  sys.tie = {{0, 1.0}, {0, 1.0 + p.SF}, {1, 1.0}, {1, 1.0}};
  sys.params.base = {p.theta1, p.theta2};
  sys.validate();

  model.regimes.regimes = 2;
  model.regimes.G = Eigen::MatrixXd(2, 2);
  model.regimes.G << -p.mu12, p.mu12, p.mu21, -p.mu21;
  model.regimes.validate();

  model.init.t = 0.0;
  model.init.x = {static_cast<std::int64_t>(p.I0)};
  model.init.m = p.M0;

  model.prior = make_stats({p.prior_a1, p.prior_a2}, {p.prior_b1, p.prior_b2});
  model.horizon = p.T;
  return model;
}

double carrying_capacity(const SISParams& p, int regime) {
  if (regime != 0 && regime != 1)
    throw std::invalid_argument("regime must be 0 or 1");
  const double th1 = p.theta1 * (regime == 1 ? 1.0 + p.SF : 1.0);
  // th1 (I + eta)(N - I)/N = th2 I  <=>  I^2 + bq I + cq = 0 with
  const double bq = p.eta - p.N + p.N * p.theta2 / th1;
  const double cq = -p.eta * p.N;
  const double disc = std::sqrt(bq * bq - 4.0 * cq);
  // cq <= 0 guarantees one nonnegative root.
  return 0.5 * (-bq + disc);
}

double sis_reaction_likelihood(const SISParams& p, const RateParams& params,
                               int q, double I, int regime) {
  if (q != kSisInfection && q != kSisRecovery)
    throw std::invalid_argument("reaction must be 0 (infection) or 1 (recovery)");
  if (regime != 0 && regime != 1)
    throw std::invalid_argument("regime must be 0 or 1");
  const double coef1 = regime == 1 ? 1.0 + p.SF : 1.0;
  const double infect =
      coef1 * params.base[0] * (I + p.eta) * (p.N - I) / p.N;
  const double recover = params.base[1] * I;
  const double total = infect + recover;
  if (!(total > 0))
    throw DegenerateStateError("all SIS propensities vanish");
  return (q == kSisInfection ? infect : recover) / total;
}

}  // namespace hmskm
