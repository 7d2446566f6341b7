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

#include "hmskm/regime_filter.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "hmskm/errors.hpp"

namespace hmskm {

namespace {

// sinh(z)/z, stable through z = 0.
double sinhc(double z) {
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0));
  }
  return std::sinh(z) / z;
}

}  // namespace

Kernel2 killed_kernel2(double mu12, double mu21, double kill1, double kill2,
                       double dt) {
  // B = [[-mu12 - kill1, mu12], [mu21, -mu21 - kill2]];
  // exp(dt B) = e^{m dt} [cosh(d dt) I + dt sinhc(d dt) (B - m I)]
  // with m = tr(B)/2 and d^2 = ((b11 - b22)/2)^2 + mu12 mu21.
  const double b11 = -mu12 - kill1;
  const double b22 = -mu21 - kill2;
  const double mean = 0.5 * (b11 + b22);
  const double half_gap = 0.5 * (b11 - b22);
  const double d = std::sqrt(half_gap * half_gap + mu12 * mu21);
  // scale * cosh and scale * dt * sinhc, computed so nothing overflows: the
  // dominant exponent (mean + d) dt is <= 0 for any killed generator, so
  // the split-exponential form is safe whenever d dt is large, while the
  // cosh/sinhc form is kept for small d dt where the difference cancels.
  double sc_ch, sc_sh;
  if (d * dt > 1.0) {
    const double e_hi = std::exp((mean + d) * dt);
    const double e_lo = std::exp((mean - d) * dt);
    sc_ch = 0.5 * (e_hi + e_lo);
    sc_sh = 0.5 * (e_hi - e_lo) / d;
  } else {
    const double scale = std::exp(mean * dt);
    sc_ch = scale * std::cosh(d * dt);
    sc_sh = scale * dt * sinhc(d * dt);  // sinh(d dt)/d, stable as d -> 0
  }
  Kernel2 k;
  k.p11 = sc_ch + sc_sh * half_gap;
  k.p22 = sc_ch - sc_sh * half_gap;
  k.p12 = sc_sh * mu12;
  k.p21 = sc_sh * mu21;
  return k;
}

Eigen::MatrixXd killed_transition_matrix(const Eigen::MatrixXd& G,
                                         const Eigen::VectorXd& kill,
                                         double dt) {
  const int n = static_cast<int>(G.rows());
  if (G.cols() != n || kill.size() != n)
    throw std::invalid_argument("generator/killing size mismatch");
  if (n == 2) {
    const Kernel2 k = killed_kernel2(G(0, 1), G(1, 0), kill[0], kill[1], dt);
    Eigen::MatrixXd P(2, 2);
    P << k.p11, k.p12, k.p21, k.p22;
    return P;
  }
  Eigen::MatrixXd B = G;
  B.diagonal() -= kill;
  return (dt * B).exp();
}

Eigen::VectorXd drift_pi_raw(const Eigen::VectorXd& pi,
                             const Eigen::MatrixXd& G,
                             const Eigen::VectorXd& kill, double dt) {
  const Eigen::MatrixXd P = killed_transition_matrix(G, kill, dt);
  Eigen::VectorXd out = P.transpose() * pi;
  const double mass = out.sum();
  if (!(mass > 0)) {
    std::ostringstream msg;
    msg << "surviving probability mass underflowed over an interval of length "
        << dt << "; subdivide the interval";
    throw NumericError(msg.str());
  }
  return out / mass;
}

Eigen::VectorXd drift_pi(const Eigen::VectorXd& pi, const Eigen::MatrixXd& G,
                         const Eigen::VectorXd& kill, double dt) {
  if (dt < 0) throw std::invalid_argument("drift interval must be >= 0");
  if (dt == 0) return pi;
  // Keep each piece's survival exponent around 30 so exp stays far from the
  // underflow threshold; the semigroup property makes splitting exact.
  const double max_kill = kill.maxCoeff();
  const double budget = 30.0;
  const int pieces =
      std::max(1, static_cast<int>(std::ceil(max_kill * dt / budget)));
  const double h = dt / pieces;
  Eigen::VectorXd cur = pi;
  for (int k = 0; k < pieces; ++k) cur = drift_pi_raw(cur, G, kill, h);
  return cur;
}

Eigen::VectorXd jump_update_pi(const Eigen::VectorXd& pi,
                               const Eigen::VectorXd& alpha_event) {
  Eigen::VectorXd out = pi.cwiseProduct(alpha_event);
  const double mass = out.sum();
  if (!(mass > 0))
    throw NumericError(
        "event update annihilated the regime posterior: the observed "
        "reaction has zero propensity in every regime of positive mass");
  return out / mass;
}

std::vector<FilterPoint> run_exact_filter(const ReactionSystem& sys,
                                          const RateParams& params,
                                          const RegimeModel& regimes,
                                          const EventPath& path,
                                          const Eigen::VectorXd& pi0,
                                          std::span<const double> query_times) {
  if (!sys.time_independent())
    throw std::invalid_argument(
        "the exact filter requires time-independent hazards");
  if (pi0.size() != sys.regimes)
    throw std::invalid_argument("prior dimension mismatch");
  if (std::abs(pi0.sum() - 1.0) > 1e-9 || pi0.minCoeff() < 0)
    throw std::invalid_argument("prior must be a probability vector");

  std::vector<double> queries(query_times.begin(), query_times.end());
  std::sort(queries.begin(), queries.end());

  std::vector<FilterPoint> out;
  out.reserve(path.events.size() + queries.size());

  Eigen::VectorXd pi = pi0;
  StateVec x = path.x0;
  double t = path.t0;
  std::size_t qi = 0;
  while (qi < queries.size() && queries[qi] < t) ++qi;

  auto emit_queries_until = [&](double t_stop) {
    while (qi < queries.size() && queries[qi] <= t_stop) {
      const double tq = queries[qi];
      const Eigen::VectorXd kill = total_rate_vector(sys, params, t, x);
      const Eigen::VectorXd piq =
          drift_pi(pi, regimes.at(t, x), kill, tq - t);
      out.push_back({tq, piq, false});
      ++qi;
    }
  };

  for (const auto& e : path.events) {
    emit_queries_until(e.time);
    const Eigen::VectorXd kill = total_rate_vector(sys, params, t, x);
    pi = drift_pi(pi, regimes.at(t, x), kill, e.time - t);
    pi = jump_update_pi(pi,
                        propensity_vector(sys, params, e.reaction, e.time, x));
    const StateVec& d = sys.delta[e.reaction];
    for (int s = 0; s < sys.species; ++s) x[s] += d[s];
    t = e.time;
    out.push_back({t, pi, true});
  }
  emit_queries_until(path.t_end);
  return out;
}

}  // namespace hmskm
