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

#include <cmath>
#include <stdexcept>

#include "hmskm/kinetics.hpp"
#include "hmskm/sis.hpp"

using namespace hmskm;

TEST_SUITE("sis") {

TEST_CASE("the built system carries the documented structure") {
  const SISParams p;
  const SISModel m = build_sis(p);
  CHECK(m.system.species == 1);
  CHECK(m.system.regimes == 2);
  CHECK(m.system.reactions() == 2);
  CHECK(m.system.param_count() == 2);
  CHECK(m.system.delta[kSisInfection][0] == 1);
  CHECK(m.system.delta[kSisRecovery][0] == -1);
  // One shared infectiousness parameter scaled by season: coefficients
  // (1, 1 + SF); recovery is season independent.
  CHECK(m.system.tie_at(kSisInfection, 0).param == 0);
  CHECK(m.system.tie_at(kSisInfection, 1).param == 0);
  CHECK(m.system.tie_at(kSisInfection, 0).coef == 1.0);
  CHECK(m.system.tie_at(kSisInfection, 1).coef == doctest::Approx(1.15));
  CHECK(m.system.tie_at(kSisRecovery, 0).param == 1);
  CHECK(m.system.tie_at(kSisRecovery, 1).param == 1);
  CHECK(m.system.tie_at(kSisRecovery, 1).coef == 1.0);
  CHECK(m.system.params.base[0] == doctest::Approx(0.235));
  CHECK(m.system.params.base[1] == doctest::Approx(0.25));
  CHECK(m.regimes.G(0, 1) == doctest::Approx(6.0 / 365.0));
  CHECK(m.regimes.G(1, 0) == doctest::Approx(2.0 / 365.0));
  CHECK(m.regimes.G.row(0).sum() == doctest::Approx(0.0));
  CHECK(m.init.x[0] == 50);
  CHECK(m.init.m == 0);
  CHECK(m.horizon == doctest::Approx(273.0));
  CHECK(m.prior.a[0] == doctest::Approx(25.0));
  CHECK(m.prior.b_value(0) == doctest::Approx(100.0));
  CHECK(rate_value(m.system, m.system.params, kSisInfection, 1) ==
        doctest::Approx(0.235 * 1.15).epsilon(1e-15));
}

TEST_CASE("propensities equal the closed-form infection and recovery rates") {
  const SISParams p;
  const SISModel m = build_sis(p);
  for (std::int64_t I : {0, 1, 17, 50, 500, 5000, 9999, 10000}) {
    for (int regime : {0, 1}) {
      CAPTURE(I);
      CAPTURE(regime);
      const StateVec x{I};
      const double coef = regime == 1 ? 1.15 : 1.0;
      const double Id = static_cast<double>(I);
      const double infect =
          coef * 0.235 * (Id + 2.0) * (10000.0 - Id) / 10000.0;
      const double recover = 0.25 * Id;
      CHECK(propensity(m.system, kSisInfection, 0.0, x, regime) ==
            doctest::Approx(infect).epsilon(1e-15));
      CHECK(propensity(m.system, kSisRecovery, 0.0, x, regime) ==
            doctest::Approx(recover).epsilon(1e-15));
    }
  }
}

TEST_CASE("carrying capacities match frozen roots of the balance equation") {
  const SISParams p;
  CHECK(carrying_capacity(p, 1) ==
        doctest::Approx(773.1736095687623).epsilon(1e-12));
  CHECK(carrying_capacity(p, 0) ==
        doctest::Approx(29.84440852496713).epsilon(1e-12));
  // Each root balances infection against recovery.
  for (int regime : {0, 1}) {
    const double C = carrying_capacity(p, regime);
    const double th1 = 0.235 * (regime == 1 ? 1.15 : 1.0);
    const double inflow = th1 * (C + 2.0) * (10000.0 - C) / 10000.0;
    const double outflow = 0.25 * C;
    CHECK(inflow == doctest::Approx(outflow).epsilon(1e-10));
  }
  CHECK_THROWS_AS(carrying_capacity(p, 2), std::invalid_argument);
}

TEST_CASE("carrying capacity responds to the parameters as expected") {
  SISParams p;
  const double base_high = carrying_capacity(p, 1);
  p.SF = 0.30;  // stronger season, higher equilibrium
  CHECK(carrying_capacity(p, 1) > base_high);
  p.SF = 0.15;
  p.theta2 = 0.5;  // faster recovery, lower equilibrium
  CHECK(carrying_capacity(p, 1) < base_high);
  // With SF = 0 both regimes coincide.
  p.theta2 = 0.25;
  p.SF = 0.0;
  CHECK(carrying_capacity(p, 0) ==
        doctest::Approx(carrying_capacity(p, 1)).epsilon(1e-14));
}

TEST_CASE("reaction-type likelihood shortcut equals the generic one") {
  const SISParams p;
  const SISModel m = build_sis(p);
  for (double I : {1.0, 50.0, 333.0, 773.0}) {
    for (int regime : {0, 1}) {
      for (int q : {kSisInfection, kSisRecovery}) {
        CAPTURE(I);
        CAPTURE(regime);
        CAPTURE(q);
        const StateVec x{static_cast<std::int64_t>(I)};
        CHECK(sis_reaction_likelihood(p, m.system.params, q, I, regime) ==
              doctest::Approx(
                  reaction_type_likelihood(m.system, q, 0.0, x, regime))
                  .epsilon(1e-14));
      }
    }
  }
  // 12.1589 / 24.6589 in decimal arithmetic.
  CHECK(sis_reaction_likelihood(p, build_sis(p).system.params, kSisInfection,
                                50.0, 0) ==
        doctest::Approx(0.4930836330898783).epsilon(1e-12));
  CHECK_THROWS_AS(sis_reaction_likelihood(p, m.system.params, 3, 50.0, 0),
                  std::invalid_argument);
}

TEST_CASE("parameter validation guards the documented domain") {
  SISParams p;
  p.I0 = 10001.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  p.theta1 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  p.SF = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  p.M0 = 2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  p.mu12 = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  p.prior_b2 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SISParams{};
  CHECK_NOTHROW(p.validate());
  // SF = 0 is allowed (modulation disabled), negative SF above -1 too.
  p.SF = 0.0;
  CHECK_NOTHROW(build_sis(p));
  p.SF = -0.5;
  CHECK_NOTHROW(build_sis(p));
}

TEST_CASE("eta keeps the infection hazard alive at extinction") {
  const SISModel m = build_sis(SISParams{});
  const StateVec x{0};
  CHECK(propensity(m.system, kSisInfection, 0.0, x, 0) ==
        doctest::Approx(0.235 * 2.0).epsilon(1e-15));
  CHECK(total_rate(m.system, 0.0, x, 0) > 0.0);
  CHECK(total_rate(m.system, 0.0, x, 1) > 0.0);
}

}  // TEST_SUITE
