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

#include <span>
#include <vector>

#include "hmskm/kinetics.hpp"
#include "hmskm/random.hpp"

// Conjugate Gamma updating for the base rate parameters when the regime
// path is observed. Each base parameter p carries Gamma(a_p, b_p):
//
//   a_p += number of events whose (reaction, regime) cell maps to p,
//   b_p += sum over cells (q, i) mapping to p of
//          coef(q, i) * int h_q(s, X_s) 1{M_s = i} ds.
//
// With those increments the Gamma family is closed under observation, and
// the update factors over disjoint time intervals.
namespace hmskm {

struct SufficientStats {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> b_comp;  // Neumaier compensation carried with b

  int size() const { return static_cast<int>(a.size()); }
  double b_value(int p) const { return b[p] + b_comp[p]; }
};

SufficientStats make_stats(std::vector<double> a, std::vector<double> b);

// Marks base parameters as estimated (conjugate Gamma) or known (point
// mass). Known parameters are skipped by updates and sampled as constants.
struct ParamStatus {
  std::vector<double> known;  // NaN = estimated

  bool is_known(int p) const { return !std::isnan(known[p]); }
  static ParamStatus all_estimated(int n);
  static ParamStatus with_known(int n, std::span<const int> idx,
                                std::span<const double> value);
};

// Accumulates one path segment (its regime path must be present) into the
// statistics. Splitting a segment at any interior point and updating twice
// gives the same result as one update, up to compensated-sum rounding.
void update_stats_in_place(SufficientStats& s, const ReactionSystem& sys,
                           const EventPath& segment);
SufficientStats update_stats(SufficientStats s, const ReactionSystem& sys,
                             const EventPath& segment);

// Gamma(shape, rate) helpers; relative accuracy ~1e-14 over the parameter
// ranges that arise here (shapes up to ~1e5).
double gamma_cdf(double shape, double rate, double x);
double gamma_pdf(double shape, double rate, double x);
double gamma_quantile(double shape, double rate, double p);

// Posterior summaries for base parameter p.
double posterior_mean(const SufficientStats& s, int p);
double posterior_quantile(const SufficientStats& s, int p, double prob);
double posterior_pdf(const SufficientStats& s, int p, double x);
double posterior_cdf(const SufficientStats& s, int p, double x);

// One joint draw of the base parameters: Gamma(a_p, b_p) for estimated
// parameters, the fixed value for known ones.
RateParams sample_theta(const SufficientStats& s, const ParamStatus& status,
                        Rng& rng);

}  // namespace hmskm
