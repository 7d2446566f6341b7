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

#include "hmskm/conjugate.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hmskm/numeric.hpp"

namespace hmskm {

SufficientStats make_stats(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("shape/rate vectors must have equal size");
  for (std::size_t p = 0; p < a.size(); ++p)
    if (!(a[p] > 0) || !(b[p] > 0))
      throw std::invalid_argument("Gamma hyperparameters must be > 0");
  SufficientStats s;
  s.a = std::move(a);
  s.b = std::move(b);
  s.b_comp.assign(s.a.size(), 0.0);
  return s;
}

ParamStatus ParamStatus::all_estimated(int n) {
  ParamStatus st;
  st.known.assign(n, std::numeric_limits<double>::quiet_NaN());
  return st;
}

ParamStatus ParamStatus::with_known(int n, std::span<const int> idx,
                                    std::span<const double> value) {
  if (idx.size() != value.size())
    throw std::invalid_argument("index/value spans must have equal size");
  ParamStatus st = all_estimated(n);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= n)
      throw std::invalid_argument("known-parameter index out of range");
    if (!(value[k] > 0))
      throw std::invalid_argument("known parameter values must be > 0");
    st.known[idx[k]] = value[k];
  }
  return st;
}

namespace {

double piece_hazard_integral(const HazardLaw& h, double t0, double t1,
                             const StateVec& x) {
  if (h.time_independent) return h.value(t0, x) * (t1 - t0);
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double s) { return h.value(s, x); }, t0, t1, 12, 1e-12);
}

}  // namespace

void update_stats_in_place(SufficientStats& s, const ReactionSystem& sys,
                           const EventPath& segment) {
  if (!segment.regime_path)
    throw std::invalid_argument(
        "conjugate updating needs the regime path of the segment");
  if (s.size() != sys.param_count())
    throw std::invalid_argument("statistics size does not match the model");
  for_each_piece(
      sys, segment,
      [&](double t0, double t1, const StateVec& x, int m) {
        if (t1 <= t0) return;
        for (int q = 0; q < sys.reactions(); ++q) {
          const TieEntry& tie = sys.tie_at(q, m);
          if (tie.coef == 0) continue;
          const double inc =
              tie.coef * piece_hazard_integral(sys.hazard[q], t0, t1, x);
          compensated_add(s.b[tie.param], s.b_comp[tie.param], inc);
        }
      },
      [&](double, int q, const StateVec&, int m) {
        s.a[sys.tie_at(q, m).param] += 1.0;
      });
}

SufficientStats update_stats(SufficientStats s, const ReactionSystem& sys,
                             const EventPath& segment) {
  update_stats_in_place(s, sys, segment);
  return s;
}

double gamma_cdf(double shape, double rate, double x) {
  if (x <= 0) return 0.0;
  return boost::math::gamma_p(shape, rate * x);
}

double gamma_pdf(double shape, double rate, double x) {
  if (x <= 0) return 0.0;
  boost::math::gamma_distribution<double> d(shape, 1.0 / rate);
  return boost::math::pdf(d, x);
}

double gamma_quantile(double shape, double rate, double p) {
  if (!(p >= 0 && p <= 1))
    throw std::invalid_argument("probability must lie in [0, 1]");
  return boost::math::gamma_p_inv(shape, p) / rate;
}

double posterior_mean(const SufficientStats& s, int p) {
  return s.a[p] / s.b_value(p);
}

double posterior_quantile(const SufficientStats& s, int p, double prob) {
  return gamma_quantile(s.a[p], s.b_value(p), prob);
}

double posterior_pdf(const SufficientStats& s, int p, double x) {
  return gamma_pdf(s.a[p], s.b_value(p), x);
}

double posterior_cdf(const SufficientStats& s, int p, double x) {
  return gamma_cdf(s.a[p], s.b_value(p), x);
}

RateParams sample_theta(const SufficientStats& s, const ParamStatus& status,
                        Rng& rng) {
  RateParams out;
  out.base.resize(s.size());
  for (int p = 0; p < s.size(); ++p)
    out.base[p] = status.is_known(p) ? status.known[p]
                                     : rng.gamma(s.a[p], s.b_value(p));
  return out;
}

}  // namespace hmskm
