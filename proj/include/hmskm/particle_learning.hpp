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
#include <memory>
#include <span>
#include <vector>

#include "hmskm/conjugate.hpp"
#include "hmskm/kinetics.hpp"
#include "hmskm/random.hpp"

// Sequential Monte Carlo for joint inference of the latent regime and the
// rate parameters from reaction events. Three algorithms over a common
// particle cloud:
//
//   ParticleLearningFilter  particles carry (regime, sufficient stats);
//                           weight by the one-event predictive likelihood,
//                           resample first, then move each offspring by an
//                           exact conditional regime-path draw.
//   StorvikFilter           particles carry (regime, sufficient stats);
//                           propagate the regime path blindly from the
//                           chain law, weight by the path likelihood of the
//                           observed event, then resample.
//   LiuWestFilter           particles carry explicit parameter values with
//                           a kernel-shrinkage move in log-parameter space;
//                           no sufficient statistics.
//
// All filters require time-independent hazard laws. Summaries depend only
// on the weighted set of particles, never on slot order, and runs are
// bit-reproducible for a given seed at any HMSKM_THREADS setting.
namespace hmskm {

enum class ResampleScheme { multinomial, residual, stratified };
enum class ResampleTrigger { every_event, ess_threshold };

struct SmcConfig {
  int particles = 1000;
  ResampleScheme scheme = ResampleScheme::residual;
  ResampleTrigger trigger = ResampleTrigger::every_event;
  double ess_fraction = 0.5;     // resample when ESS < ess_fraction * J
  std::uint64_t seed = 1;
  int max_path_proposals = 10000;  // rejection cap before exact splitting
  int threads = -1;                // worker threads; -1 reads HMSKM_THREADS
};

// 1 / sum w_j^2 for normalized weights; J for uniform weights, 1 for a
// point mass.
double effective_sample_size(std::span<const double> normalized_w);

// Fills `ancestors` with J slot indices distributed per the scheme: the
// expected offspring count of slot j is J * w_j for every scheme.
void resample_indices(ResampleScheme scheme,
                      std::span<const double> normalized_w,
                      std::span<std::uint32_t> ancestors, Rng& rng);

// Density of the next observation (gap, reaction) given the regime at the
// previous event and fixed parameter values:
//
//     sum_i P_killed(gap)[m_prev, i] * alpha_q(x_pre, i).
//
// Integrating over gap > 0 and summing over reactions and destination
// regimes gives exactly 1 whenever every regime has positive total rate.
double predictive_likelihood(const ReactionSystem& sys,
                             const RateParams& params,
                             const Eigen::MatrixXd& G, int m_prev, double gap,
                             int reaction, const StateVec& x_pre);

// Same value split by destination regime (unnormalized); the normalized
// vector is the regime posterior just after the event.
Eigen::VectorXd predictive_by_destination(const ReactionSystem& sys,
                                          const RateParams& params,
                                          const Eigen::MatrixXd& G, int m_prev,
                                          double gap, int reaction,
                                          const StateVec& x_pre);

// Counters for the conditional regime-path sampler.
struct AcceptanceStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t splits = 0;  // exact-splitting fallbacks taken

  double rate() const {
    return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals)
                     : 1.0;
  }
};

// A sampled regime path over one inter-event gap, reduced to what the
// statistics update needs: occupation time per regime, the switch times,
// and the regime at the event.
struct RegimePathDraw {
  int m_end = 0;
  std::vector<std::pair<double, int>> switches;  // (offset in gap, new regime)
};

// Exact draw from the conditional law of the regime path over a gap given
// that the next event is of the observed type at the end of the gap.
// Proposes from the chain law and accepts with probability
//
//     exp(-int (kill(M_s) - min_i kill(i)) ds) * aR(M_end) / max_i aR(i),
//
// which is a valid bound (the acceptance probability never exceeds 1).
// After `cfg.max_path_proposals` rejections the gap is split recursively:
// the midpoint regime is drawn from its exact conditional and each half is
// sampled independently, which terminates with probability one.
RegimePathDraw sample_conditional_regime_path(
    const Eigen::MatrixXd& G, const Eigen::VectorXd& kill,
    const Eigen::VectorXd& alpha_event, int m_start, double gap, Rng& rng,
    AcceptanceStats& stats, int max_proposals = 10000);

// Summary of a weighted mixture posterior for one parameter.
struct MixtureSummary {
  double mean = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

// A particle as seen from outside: regime, statistics, log weight.
struct ParticleView {
  int m = 0;
  SufficientStats s;
  double logw = 0.0;
};

// One observed event handed to a filter. The gap since the previous event
// is covered by one or more segments with piecewise-constant generators
// (the generator may switch inside a gap when a policy acts between
// reactions); segment durations sum to the gap. x_pre is the population
// state throughout the gap.
struct GapSegment {
  double dt = 0.0;
  const Eigen::MatrixXd* G = nullptr;
};

struct EventStep {
  std::span<const GapSegment> segments;
  int reaction = 0;
  const StateVec* x_pre = nullptr;
  double t_event = 0.0;
};

namespace detail {
struct CloudState;
}

// Common cloud machinery shared by the three filters.
class FilterBase {
 public:
  virtual ~FilterBase();

  // Processes one observed event. Throws FilterCollapseError if every
  // particle weight reaches log-zero.
  virtual void step(const EventStep& ev) = 0;

  int particle_count() const;
  int events_seen() const;

  // Posterior over the current regime: sum of weights per regime.
  Eigen::VectorXd regime_posterior() const;

  // Posterior over the regime a duration into the current gap, conditioned
  // on no event having fired; read-only. `x` is the current population.
  // Parameter uncertainty enters through each particle's posterior-mean
  // rates (explicit values for Liu-West).
  Eigen::VectorXd regime_posterior_drifted(std::span<const GapSegment> partial,
                                           const StateVec& x) const;

  double ess() const;
  std::span<const double> weights() const;

  // Mixture posterior summary for base parameter p.
  virtual MixtureSummary param_summary(int p) const = 0;

  // n draws from the parameter posterior (mixture of particle laws).
  virtual std::vector<double> sample_param_posterior(int p, int n,
                                                     Rng& rng) const = 0;

 protected:
  FilterBase(const ReactionSystem& sys, Eigen::VectorXd pi0,
             const SmcConfig& cfg);
  std::unique_ptr<detail::CloudState> st_;
};

class ParticleLearningFilter : public FilterBase {
 public:
  ParticleLearningFilter(const ReactionSystem& sys, SufficientStats prior,
                         ParamStatus status, Eigen::VectorXd pi0,
                         const SmcConfig& cfg);
  ~ParticleLearningFilter() override;

  void step(const EventStep& ev) override;
  MixtureSummary param_summary(int p) const override;
  std::vector<double> sample_param_posterior(int p, int n,
                                             Rng& rng) const override;

  const AcceptanceStats& acceptance_stats() const;
  ParticleView particle(int j) const;
};

class StorvikFilter : public FilterBase {
 public:
  StorvikFilter(const ReactionSystem& sys, SufficientStats prior,
                ParamStatus status, Eigen::VectorXd pi0, const SmcConfig& cfg);
  ~StorvikFilter() override;

  void step(const EventStep& ev) override;
  MixtureSummary param_summary(int p) const override;
  std::vector<double> sample_param_posterior(int p, int n,
                                             Rng& rng) const override;

  ParticleView particle(int j) const;
};

struct LWConfig {
  double h = 0.97;  // kernel bandwidth in (0, 1)

  double shrinkage() const { return std::sqrt(1.0 - h * h); }
};

class LiuWestFilter : public FilterBase {
 public:
  LiuWestFilter(const ReactionSystem& sys, SufficientStats prior,
                ParamStatus status, Eigen::VectorXd pi0, const SmcConfig& cfg,
                const LWConfig& lw);
  ~LiuWestFilter() override;

  void step(const EventStep& ev) override;
  MixtureSummary param_summary(int p) const override;
  std::vector<double> sample_param_posterior(int p, int n,
                                             Rng& rng) const override;

  // Weighted empirical quantile of the explicit parameter values.
  double param_quantile(int p, double prob) const;

  // Applies one kernel-shrinkage move to the explicit values (log space,
  // moments taken under the current weights); exposed for direct testing.
  void shrinkage_move();

  double param_value(int p, int j) const;
  int regime_of(int j) const;
};

// Quantile of a weighted mixture of Gamma laws by bisection on the CDF;
// absolute tolerance 1e-8 on the parameter axis.
double gamma_mixture_quantile(std::span<const double> w,
                              std::span<const double> shape,
                              std::span<const double> rate, double prob);

// Weighted empirical quantile: smallest value whose cumulative weight
// reaches prob.
double weighted_quantile(std::span<const double> w,
                         std::span<const double> value, double prob);

}  // namespace hmskm
