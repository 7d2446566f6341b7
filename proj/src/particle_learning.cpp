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

#include "hmskm/particle_learning.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "hmskm/errors.hpp"
#include "hmskm/numeric.hpp"
#include "hmskm/parallel.hpp"
#include "hmskm/regime_filter.hpp"

namespace hmskm {

double effective_sample_size(std::span<const double> normalized_w) {
  double s2 = 0;
  for (double w : normalized_w) s2 += w * w;
  return s2 > 0 ? 1.0 / s2 : 0.0;
}

namespace {

// Walks ancestors for `n` sorted uniforms u_k = make_u(k) against the weight
// CDF. The u's must be nondecreasing in k.
template <class MakeU>
void walk_cdf(std::span<const double> w, std::span<std::uint32_t> anc,
              std::size_t n_from, std::size_t n_to, double total,
              MakeU&& make_u) {
  const std::size_t J = w.size();
  std::size_t idx = 0;
  double cdf = w[0];
  for (std::size_t k = n_from; k < n_to; ++k) {
    const double u = make_u(k) * total;
    while (u > cdf && idx + 1 < J) cdf += w[++idx];
    anc[k] = static_cast<std::uint32_t>(idx);
  }
}

void multinomial_sorted(std::span<const double> w,
                        std::span<std::uint32_t> anc, std::size_t n_from,
                        std::size_t n_to, double total, Rng& rng) {
  // Sorted uniforms via exponential spacings: one O(n) pass, no sort.
  const std::size_t n = n_to - n_from;
  if (n == 0) return;
  std::vector<double> partial(n);
  double s = 0;
  for (std::size_t k = 0; k < n; ++k) {
    s += rng.exponential(1.0);
    partial[k] = s;
  }
  s += rng.exponential(1.0);
  walk_cdf(w, anc, n_from, n_to, total,
           [&](std::size_t k) { return partial[k - n_from] / s; });
}

}  // namespace

void resample_indices(ResampleScheme scheme, std::span<const double> w,
                      std::span<std::uint32_t> ancestors, Rng& rng) {
  const std::size_t J = w.size();
  const std::size_t n = ancestors.size();
  if (J == 0 || n == 0) throw std::invalid_argument("empty resampling input");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0))
    throw std::invalid_argument("resampling needs positive total weight");

  switch (scheme) {
    case ResampleScheme::multinomial:
      multinomial_sorted(w, ancestors, 0, n, total, rng);
      break;
    case ResampleScheme::stratified: {
      const double inv = 1.0 / static_cast<double>(n);
      walk_cdf(w, ancestors, 0, n, total, [&](std::size_t k) {
        return (static_cast<double>(k) + rng.uniform()) * inv;
      });
      break;
    }
    case ResampleScheme::residual: {
      std::vector<double> resid(J);
      std::size_t filled = 0;
      for (std::size_t j = 0; j < J; ++j) {
        const double scaled = static_cast<double>(n) * w[j] / total;
        const double whole = std::floor(scaled);
        resid[j] = scaled - whole;
        for (std::uint64_t c = 0; c < static_cast<std::uint64_t>(whole); ++c) {
          if (filled < n) ancestors[filled++] = static_cast<std::uint32_t>(j);
        }
      }
      if (filled < n) {
        const double rtotal =
            std::accumulate(resid.begin(), resid.end(), 0.0);
        if (rtotal > 0) {
          multinomial_sorted(resid, ancestors, filled, n, rtotal, rng);
        } else {
          for (std::size_t k = filled; k < n; ++k)
            ancestors[k] = static_cast<std::uint32_t>(J - 1);
        }
      }
      break;
    }
  }
}

Eigen::VectorXd predictive_by_destination(const ReactionSystem& sys,
                                          const RateParams& params,
                                          const Eigen::MatrixXd& G, int m_prev,
                                          double gap, int reaction,
                                          const StateVec& x_pre) {
  if (!sys.time_independent())
    throw std::invalid_argument(
        "predictive likelihoods require time-independent hazards");
  if (m_prev < 0 || m_prev >= sys.regimes)
    throw std::invalid_argument("regime index out of range");
  const Eigen::VectorXd kill = total_rate_vector(sys, params, 0.0, x_pre);
  const Eigen::MatrixXd K = killed_transition_matrix(G, kill, gap);
  const Eigen::VectorXd aR =
      propensity_vector(sys, params, reaction, 0.0, x_pre);
  return K.row(m_prev).transpose().cwiseProduct(aR);
}

double predictive_likelihood(const ReactionSystem& sys,
                             const RateParams& params,
                             const Eigen::MatrixXd& G, int m_prev, double gap,
                             int reaction, const StateVec& x_pre) {
  return predictive_by_destination(sys, params, G, m_prev, gap, reaction,
                                   x_pre)
      .sum();
}

double weighted_quantile(std::span<const double> w,
                         std::span<const double> value, double prob) {
  if (w.size() != value.size() || w.empty())
    throw std::invalid_argument("weighted_quantile size mismatch");
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return value[i] < value[j]; });
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double cum = 0;
  for (std::size_t k : order) {
    cum += w[k];
    if (cum >= prob * total) return value[k];
  }
  return value[order.back()];
}

double gamma_mixture_quantile(std::span<const double> w,
                              std::span<const double> shape,
                              std::span<const double> rate, double prob) {
  if (w.size() != shape.size() || w.size() != rate.size() || w.empty())
    throw std::invalid_argument("gamma_mixture_quantile size mismatch");
  if (!(prob > 0 && prob < 1))
    throw std::invalid_argument("probability must lie in (0, 1)");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  auto cdf = [&](double x) {
    double c = 0;
    for (std::size_t j = 0; j < w.size(); ++j)
      c += w[j] * gamma_cdf(shape[j], rate[j], x);
    return c / total;
  };
  double hi = 1.0;
  for (int it = 0; it < 200 && cdf(hi) < prob; ++it) hi *= 2;
  double lo = 0.0;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Conditional regime-path sampling.
// ---------------------------------------------------------------------------

namespace {

using Switches = std::vector<std::pair<double, int>>;

thread_local std::vector<double> t_occ;     // per-regime occupation scratch
thread_local std::vector<double> t_vend;    // per-segment terminal values
thread_local std::vector<Eigen::MatrixXd> t_pows;  // uniformization powers
thread_local std::vector<double> t_times;   // bridge jump times

// Chain-law propagation over [0, dt] under one generator, starting in m.
// Switches are appended as (offset + time, regime). Returns the end regime.
int propagate_chain(const Eigen::MatrixXd& G, int m, double dt, double offset,
                    Rng& rng, Switches& out) {
  const int R = static_cast<int>(G.rows());
  double t = 0;
  for (;;) {
    const double rate = -G(m, m);
    if (!(rate > 0)) return m;
    t += rng.exponential(rate);
    if (t >= dt) return m;
    double u = rng.uniform() * rate;
    int next = m;
    for (int j = 0; j < R; ++j) {
      if (j == m) continue;
      u -= G(m, j);
      next = j;
      if (u < 0) break;
    }
    m = next;
    out.emplace_back(offset + t, m);
  }
}

// Occupation time per regime over [0, dt] for switches recorded from
// `from` onward (offsets relative to the same origin as `dt`).
void occupation(int m0, double dt, const Switches& sw, std::size_t from,
                double base_offset, double* occ, int R) {
  std::fill(occ, occ + R, 0.0);
  double t = 0;
  int m = m0;
  for (std::size_t k = from; k < sw.size(); ++k) {
    const double s = sw[k].first - base_offset;
    occ[m] += s - t;
    t = s;
    m = sw[k].second;
  }
  occ[m] += dt - t;
}

double max_exit_rate(const Eigen::MatrixXd& G) {
  double lam = 0;
  for (int i = 0; i < G.rows(); ++i) lam = std::max(lam, -G(i, i));
  return lam;
}

// Exact chain-law bridge on [0, T] from i to j via uniformization; real
// switches are appended as (offset + time, regime).
void sample_chain_bridge(const Eigen::MatrixXd& G, int i, int j, double T,
                         double offset, Rng& rng, Switches& out) {
  const int R = static_cast<int>(G.rows());
  const double lam = max_exit_rate(G);
  if (!(lam * T > 0)) return;  // no jumps possible; i == j by reachability

  const Eigen::MatrixXd P =
      Eigen::MatrixXd::Identity(R, R) + G / lam;
  const Eigen::MatrixXd E =
      killed_transition_matrix(G, Eigen::VectorXd::Zero(R), T);

  t_pows.clear();
  t_pows.push_back(Eigen::MatrixXd::Identity(R, R));
  const double lt = lam * T;
  double pois = std::exp(-lt);  // Poisson(lt) weight at n
  double cum = pois * t_pows[0](i, j);
  const double u = rng.uniform() * E(i, j);
  int n = 0;
  const int n_cap = static_cast<int>(lt + 12 * std::sqrt(lt + 1.0)) + 60;
  while (cum < u && n < n_cap) {
    ++n;
    pois *= lt / n;
    t_pows.push_back(t_pows.back() * P);
    cum += pois * t_pows[n](i, j);
  }
  if (n == 0) return;

  t_times.resize(n);
  for (int k = 0; k < n; ++k) t_times[k] = rng.uniform() * T;
  std::sort(t_times.begin(), t_times.end());

  int prev = i;
  for (int k = 1; k <= n; ++k) {
    int v;
    if (k == n) {
      v = j;
    } else {
      double norm = 0;
      for (int s = 0; s < R; ++s)
        norm += P(prev, s) * t_pows[n - k](s, j);
      double uu = rng.uniform() * norm;
      v = prev;
      for (int s = 0; s < R; ++s) {
        const double p = P(prev, s) * t_pows[n - k](s, j);
        uu -= p;
        v = s;
        if (uu < 0 && p > 0) break;
      }
    }
    if (v != prev) out.emplace_back(offset + t_times[k - 1], v);
    prev = v;
  }
}

Eigen::Map<const Eigen::VectorXd> as_vec(const double* p, int n) {
  return Eigen::Map<const Eigen::VectorXd>(p, n);
}

// Bridge of the killed chain: path law proportional to
// chain(dM) * exp(-int kill(M_s) ds) conditioned on M_0 = i, M_T = j (a
// state pair with positive killed-kernel mass). Switches are committed to
// `out`. Exact; recursion splits at midpoints until the killing-tilt
// rejection is cheap.
void sample_killed_bridge(const Eigen::MatrixXd& G, const double* kill, int R,
                          int i, int j, double T, double offset, Rng& rng,
                          Switches& out, int depth) {
  if (depth > 120)
    throw NumericError("regime-bridge recursion failed to terminate");
  if (T <= 0) return;

  double kmin = kill[0], kmax = kill[0];
  for (int r = 1; r < R; ++r) {
    kmin = std::min(kmin, kill[r]);
    kmax = std::max(kmax, kill[r]);
  }
  const double lam = max_exit_rate(G);
  if (lam == 0) return;  // no jumps possible; i == j by reachability
  if ((kmax - kmin) * T <= 0.7 && lam * T <= 30.0) {
    for (int attempt = 0; attempt < 256; ++attempt) {
      const std::size_t mark = out.size();
      sample_chain_bridge(G, i, j, T, offset, rng, out);
      t_occ.resize(R);
      occupation(i, T, out, mark, offset, t_occ.data(), R);
      double expo = 0;
      for (int r = 0; r < R; ++r) expo += (kill[r] - kmin) * t_occ[r];
      if (rng.uniform() < std::exp(-expo)) return;
      out.resize(mark);
    }
  }
  // Split at the midpoint; the midpoint regime has an exact conditional in
  // terms of the half-interval killed kernels.
  const Eigen::MatrixXd Kh =
      killed_transition_matrix(G, as_vec(kill, R), T / 2);
  double norm = 0;
  for (int s = 0; s < R; ++s) norm += Kh(i, s) * Kh(s, j);
  if (!(norm > 0))
    throw NumericError("killed bridge lost all probability mass");
  double u = rng.uniform() * norm;
  int mid = i;
  for (int s = 0; s < R; ++s) {
    const double p = Kh(i, s) * Kh(s, j);
    u -= p;
    mid = s;
    if (u < 0 && p > 0) break;
  }
  sample_killed_bridge(G, kill, R, i, mid, T / 2, offset, rng, out, depth + 1);
  sample_killed_bridge(G, kill, R, mid, j, T / 2, offset + T / 2, rng, out,
                       depth + 1);
}

// One segment of the conditional path: chain(dM) * exp(-int kill) * v(M_T),
// started in m0 over [0, T]. Switches are committed to `out` with absolute
// offsets; returns the end regime.
int conditional_segment(const Eigen::MatrixXd& G, const double* kill,
                        const double* v, int R, int m0, double T,
                        double offset, Rng& rng, AcceptanceStats& stats,
                        int max_props, Switches& out, int depth) {
  if (depth > 120)
    throw NumericError("conditional path recursion failed to terminate");
  double vmax = 0;
  for (int r = 0; r < R; ++r) vmax = std::max(vmax, v[r]);
  if (!(vmax > 0))
    throw NumericError("conditional path has zero terminal mass");
  if (T <= 0) return m0;  // the conditional at zero duration is the start
  double kmin = kill[0];
  for (int r = 1; r < R; ++r) kmin = std::min(kmin, kill[r]);

  t_occ.resize(R);
  for (int attempt = 0; attempt < max_props; ++attempt) {
    ++stats.proposals;
    const std::size_t mark = out.size();
    const int m_end = propagate_chain(G, m0, T, offset, rng, out);
    if (v[m_end] > 0) {
      occupation(m0, T, out, mark, offset, t_occ.data(), R);
      double expo = 0;
      for (int r = 0; r < R; ++r) expo += (kill[r] - kmin) * t_occ[r];
      const double acc = std::exp(-expo) * v[m_end] / vmax;
      if (rng.uniform() < acc) {
        ++stats.accepted;
        return m_end;
      }
    }
    out.resize(mark);
  }

  // Exact splitting: draw the midpoint regime from its conditional, bridge
  // the left half, recurse on the right half.
  ++stats.splits;
  const Eigen::MatrixXd Kh =
      killed_transition_matrix(G, as_vec(kill, R), T / 2);
  double norm = 0;
  for (int s = 0; s < R; ++s) {
    double rv = 0;
    for (int r = 0; r < R; ++r) rv += Kh(s, r) * v[r];
    norm += Kh(m0, s) * rv;
  }
  if (!(norm > 0))
    throw NumericError("conditional path lost all probability mass");
  double u = rng.uniform() * norm;
  int mid = m0;
  for (int s = 0; s < R; ++s) {
    double rv = 0;
    for (int r = 0; r < R; ++r) rv += Kh(s, r) * v[r];
    const double p = Kh(m0, s) * rv;
    u -= p;
    mid = s;
    if (u < 0 && p > 0) break;
  }
  sample_killed_bridge(G, kill, R, m0, mid, T / 2, offset, rng, out, 0);
  return conditional_segment(G, kill, v, R, mid, T / 2, offset + T / 2, rng,
                             stats, max_props, out, depth + 1);
}

}  // namespace

RegimePathDraw sample_conditional_regime_path(const Eigen::MatrixXd& G,
                                              const Eigen::VectorXd& kill,
                                              const Eigen::VectorXd& alpha_event,
                                              int m_start, double gap, Rng& rng,
                                              AcceptanceStats& stats,
                                              int max_proposals) {
  const int R = static_cast<int>(G.rows());
  if (kill.size() != R || alpha_event.size() != R)
    throw std::invalid_argument("dimension mismatch");
  if (m_start < 0 || m_start >= R)
    throw std::invalid_argument("start regime out of range");
  if (!(gap >= 0)) throw std::invalid_argument("gap must be >= 0");
  RegimePathDraw draw;
  Switches out;
  draw.m_end = conditional_segment(G, kill.data(), alpha_event.data(), R,
                                   m_start, gap, 0.0, rng, stats,
                                   max_proposals, out, 0);
  draw.switches = std::move(out);
  return draw;
}

// ---------------------------------------------------------------------------
// Particle cloud.
// ---------------------------------------------------------------------------

namespace detail {

struct CloudState {
  const ReactionSystem* sys = nullptr;
  Eigen::VectorXd pi0;
  SmcConfig cfg;
  SufficientStats prior;
  ParamStatus status;
  bool explicit_theta = false;  // Liu-West mode
  LWConfig lw;

  int J = 0, R = 0, P = 0, Q = 0;
  int nthreads = 1;
  int events = 0;

  // Slot-major state; *2 are resampling write buffers.
  std::vector<double> a, b, bc, a2, b2, bc2;  // J * P
  std::vector<double> th, th2;                // J * P
  std::vector<int> m, m2;                     // J
  std::vector<double> logw, w;                // J
  std::vector<Rng> slot_rng;
  Rng master;

  // Per-event scratch.
  std::vector<double> kill_s, aR_s;  // J * R
  std::vector<double> hq;            // Q
  std::vector<std::uint32_t> anc;    // J
  std::vector<std::uint32_t> perm;   // J, regime-sorted slot order
  std::vector<double> wperm;         // J, weights in `perm` order
  AcceptanceStats acc;
  std::mutex acc_mu;

  // Draws ancestor slots for one resampling pass. The cloud is an unordered
  // weighted set, so slots may be presented to the resampler in any order;
  // for the stratified scheme they are ordered by regime first, which makes
  // each regime a contiguous weight block and caps the deviation of its
  // offspring count at one particle per block boundary. Interleaved blocks
  // would instead accumulate O(sqrt(J)) noise per pass, which compounds
  // along event-dense paths where the regime posterior moves slowly.
  void draw_ancestors() {
    if (cfg.scheme != ResampleScheme::stratified) {
      resample_indices(cfg.scheme, w, anc, master);
      return;
    }
    perm.resize(static_cast<std::size_t>(J));
    std::iota(perm.begin(), perm.end(), 0u);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::uint32_t x, std::uint32_t y) {
                       return m[x] < m[y];
                     });
    wperm.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) wperm[j] = w[perm[j]];
    resample_indices(cfg.scheme, wperm, anc, master);
    for (int j = 0; j < J; ++j) anc[j] = perm[anc[j]];
  }

  void base_init(const ReactionSystem& s, Eigen::VectorXd pi,
                 const SmcConfig& c) {
    sys = &s;
    s.validate();
    if (!s.time_independent())
      throw std::invalid_argument(
          "particle filters require time-independent hazards");
    pi0 = std::move(pi);
    cfg = c;
    if (cfg.particles < 1)
      throw std::invalid_argument("need at least one particle");
    if (pi0.size() != s.regimes || std::abs(pi0.sum() - 1.0) > 1e-9 ||
        pi0.minCoeff() < 0)
      throw std::invalid_argument("prior must be a probability vector");

    J = cfg.particles;
    R = s.regimes;
    P = s.param_count();
    Q = s.reactions();
    nthreads = cfg.threads >= 0 ? std::max(1, cfg.threads) : env_thread_count();

    master = Rng::stream(cfg.seed, 0);
    slot_rng.reserve(J);
    for (int j = 0; j < J; ++j)
      slot_rng.push_back(Rng::stream(cfg.seed, static_cast<std::uint64_t>(j) + 1));

    m.resize(J);
    m2.resize(J);
    for (int j = 0; j < J; ++j) {
      double u = slot_rng[j].uniform();
      int mi = R - 1;
      for (int i = 0; i < R; ++i) {
        u -= pi0[i];
        if (u < 0) {
          mi = i;
          break;
        }
      }
      m[j] = mi;
    }
    logw.assign(J, 0.0);
    w.assign(J, 1.0 / J);
    kill_s.resize(static_cast<std::size_t>(J) * R);
    aR_s.resize(static_cast<std::size_t>(J) * R);
    hq.resize(Q);
    anc.resize(J);
  }

  void stats_init(SufficientStats pr, ParamStatus st) {
    if (pr.size() != P || static_cast<int>(st.known.size()) != P)
      throw std::invalid_argument("prior/status size must match parameters");
    prior = std::move(pr);
    status = std::move(st);
    const std::size_t n = static_cast<std::size_t>(J) * P;
    a.resize(n);
    b.resize(n);
    bc.resize(n);
    a2.resize(n);
    b2.resize(n);
    bc2.resize(n);
    th.resize(n);
    th2.resize(n);
    for (int j = 0; j < J; ++j)
      for (int p = 0; p < P; ++p) {
        a[idx(j, p)] = prior.a[p];
        b[idx(j, p)] = prior.b[p];
        bc[idx(j, p)] = prior.b_comp[p];
      }
  }

  std::size_t idx(int j, int p) const {
    return static_cast<std::size_t>(j) * P + p;
  }
  std::size_t ridx(int j, int i) const {
    return static_cast<std::size_t>(j) * R + i;
  }

  // Hazard values at the pre-event population (time-independent laws).
  void fill_hq(const StateVec& x_pre) {
    for (int q = 0; q < Q; ++q) hq[q] = sys->hazard[q].value(0.0, x_pre);
  }

  // kill(i) and alpha_reaction(i) for one parameter vector.
  void rates_for(const double* base, int reaction, double* kill,
                 double* aR) const {
    for (int i = 0; i < R; ++i) {
      kill[i] = 0;
      aR[i] = 0;
    }
    for (int q = 0; q < Q; ++q) {
      const double hv = hq[q];
      for (int i = 0; i < R; ++i) {
        const TieEntry& t = sys->tie[static_cast<std::size_t>(q) * R + i];
        const double val = t.coef * base[t.param] * hv;
        kill[i] += val;
        if (q == reaction) aR[i] = val;
      }
    }
  }

  // Draws theta for slot j from its Gamma statistics into th.
  void draw_theta(int j) {
    for (int p = 0; p < P; ++p)
      th[idx(j, p)] = status.is_known(p)
                          ? status.known[p]
                          : slot_rng[j].gamma(a[idx(j, p)],
                                              b[idx(j, p)] + bc[idx(j, p)]);
  }

  // Row m of the product of killed segment kernels, dotted with aR:
  // the predictive density of (gap, reaction) from regime m.
  double predictive_row(std::span<const GapSegment> segs, int mj,
                        const double* kill, const double* aR) const {
    if (R == 2) {
      double r0 = mj == 0 ? 1.0 : 0.0;
      double r1 = 1.0 - r0;
      for (const auto& s : segs) {
        const Kernel2 k = killed_kernel2((*s.G)(0, 1), (*s.G)(1, 0), kill[0],
                                         kill[1], s.dt);
        const double n0 = r0 * k.p11 + r1 * k.p21;
        const double n1 = r0 * k.p12 + r1 * k.p22;
        r0 = n0;
        r1 = n1;
      }
      return r0 * aR[0] + r1 * aR[1];
    }
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(R);
    r[mj] = 1.0;
    for (const auto& s : segs)
      r *= killed_transition_matrix(*s.G, as_vec(kill, R), s.dt);
    double out = 0;
    for (int i = 0; i < R; ++i) out += r[i] * aR[i];
    return out;
  }

  // Conditional regime-path draw across all gap segments with terminal
  // event weights aR. Returns the end regime; switches land in `out`.
  int conditional_over_segments(std::span<const GapSegment> segs,
                                const double* kill, const double* aR, int m0,
                                Rng& rng, AcceptanceStats& stats,
                                Switches& out) const {
    const std::size_t K = segs.size();
    if (K == 1)
      return conditional_segment(*segs[0].G, kill, aR, R, m0, segs[0].dt, 0.0,
                                 rng, stats, cfg.max_path_proposals, out, 0);
    // Terminal value at the end of segment k, backward recursion:
    // v_{K-1} = aR, v_{k} = Kk_{k+1} v_{k+1}.
    t_vend.resize(K * R);
    for (int i = 0; i < R; ++i) t_vend[(K - 1) * R + i] = aR[i];
    for (std::size_t k = K - 1; k > 0; --k) {
      const double* vn = &t_vend[k * R];
      double* vp = &t_vend[(k - 1) * R];
      if (R == 2) {
        const Kernel2 kk = killed_kernel2((*segs[k].G)(0, 1),
                                          (*segs[k].G)(1, 0), kill[0], kill[1],
                                          segs[k].dt);
        vp[0] = kk.p11 * vn[0] + kk.p12 * vn[1];
        vp[1] = kk.p21 * vn[0] + kk.p22 * vn[1];
      } else {
        const Eigen::MatrixXd Kk =
            killed_transition_matrix(*segs[k].G, as_vec(kill, R), segs[k].dt);
        Eigen::Map<Eigen::VectorXd>(vp, R) =
            Kk * Eigen::Map<const Eigen::VectorXd>(vn, R);
      }
    }
    int mm = m0;
    double offset = 0;
    for (std::size_t k = 0; k < K; ++k) {
      mm = conditional_segment(*segs[k].G, kill, &t_vend[k * R], R, mm,
                               segs[k].dt, offset, rng, stats,
                               cfg.max_path_proposals, out, 0);
      offset += segs[k].dt;
    }
    return mm;
  }

  // Blind chain propagation across segments; returns end regime, appends
  // switches.
  int blind_over_segments(std::span<const GapSegment> segs, int m0, Rng& rng,
                          Switches& out) const {
    int mm = m0;
    double offset = 0;
    for (const auto& s : segs) {
      mm = propagate_chain(*s.G, mm, s.dt, offset, rng, out);
      offset += s.dt;
    }
    return mm;
  }

  // Adds the statistics increments of one gap draw to buffers (ja, jb, jbc
  // point at the slot's parameter block) given occupation times.
  void add_gap_stats(double* ja, double* jb, double* jbc, const double* occ,
                     int reaction, int m_end) const {
    for (int q = 0; q < Q; ++q) {
      const double hv = hq[q];
      for (int i = 0; i < R; ++i) {
        if (occ[i] == 0) continue;
        const TieEntry& t = sys->tie[static_cast<std::size_t>(q) * R + i];
        if (t.coef == 0) continue;
        compensated_add(jb[t.param], jbc[t.param], t.coef * hv * occ[i]);
      }
    }
    ja[sys->tie[static_cast<std::size_t>(reaction) * R + m_end].param] += 1.0;
  }

  double total_gap(const EventStep& ev) const {
    double g = 0;
    for (const auto& s : ev.segments) g += s.dt;
    return g;
  }

  // Normalizes logw into w; throws when every weight is log-zero.
  void normalize_or_collapse(const EventStep& ev) {
    double wmax = log_zero;
    for (int j = 0; j < J; ++j) wmax = std::max(wmax, logw[j]);
    if (is_log_zero(wmax)) {
      std::ostringstream msg;
      msg << "particle cloud collapsed: every weight is log-zero at event "
          << events + 1 << " (t=" << ev.t_event << ", reaction "
          << ev.reaction + 1 << ", gap " << total_gap(ev) << ")";
      throw FilterCollapseError(msg.str(), events, ev.t_event, ev.reaction,
                                total_gap(ev));
    }
    double sum = 0;
    for (int j = 0; j < J; ++j) {
      w[j] = std::exp(logw[j] - wmax);
      sum += w[j];
    }
    for (int j = 0; j < J; ++j) w[j] /= sum;
  }

  bool should_resample() const {
    if (cfg.trigger == ResampleTrigger::every_event) return true;
    return effective_sample_size(w) < cfg.ess_fraction * J;
  }

  void reset_weights() {
    std::fill(logw.begin(), logw.end(), 0.0);
    std::fill(w.begin(), w.end(), 1.0 / J);
  }

  // Mean parameter vector of slot j (posterior mean for statistics
  // particles, the explicit value for Liu-West).
  void mean_theta(int j, double* base) const {
    for (int p = 0; p < P; ++p) {
      if (explicit_theta)
        base[p] = th[idx(j, p)];
      else
        base[p] = status.is_known(p)
                      ? status.known[p]
                      : a[idx(j, p)] / (b[idx(j, p)] + bc[idx(j, p)]);
    }
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// FilterBase.
// ---------------------------------------------------------------------------

FilterBase::FilterBase(const ReactionSystem& sys, Eigen::VectorXd pi0,
                       const SmcConfig& cfg)
    : st_(std::make_unique<detail::CloudState>()) {
  st_->base_init(sys, std::move(pi0), cfg);
}

FilterBase::~FilterBase() = default;

int FilterBase::particle_count() const { return st_->J; }
int FilterBase::events_seen() const { return st_->events; }

Eigen::VectorXd FilterBase::regime_posterior() const {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(st_->R);
  for (int j = 0; j < st_->J; ++j) pi[st_->m[j]] += st_->w[j];
  return pi;
}

Eigen::VectorXd FilterBase::regime_posterior_drifted(
    std::span<const GapSegment> partial, const StateVec& x) const {
  auto& st = *st_;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(st.R);
  std::vector<double> hq(st.Q);
  for (int q = 0; q < st.Q; ++q) hq[q] = st.sys->hazard[q].value(0.0, x);
  std::vector<double> base(st.P), kill(st.R);
  for (int j = 0; j < st.J; ++j) {
    st.mean_theta(j, base.data());
    for (int i = 0; i < st.R; ++i) {
      kill[i] = 0;
      for (int q = 0; q < st.Q; ++q) {
        const TieEntry& t = st.sys->tie[static_cast<std::size_t>(q) * st.R + i];
        kill[i] += t.coef * base[t.param] * hq[q];
      }
    }
    if (st.R == 2) {
      double r0 = st.m[j] == 0 ? 1.0 : 0.0;
      double r1 = 1.0 - r0;
      for (const auto& s : partial) {
        const Kernel2 k = killed_kernel2((*s.G)(0, 1), (*s.G)(1, 0), kill[0],
                                         kill[1], s.dt);
        const double n0 = r0 * k.p11 + r1 * k.p21;
        const double n1 = r0 * k.p12 + r1 * k.p22;
        r0 = n0;
        r1 = n1;
      }
      num[0] += st.w[j] * r0;
      num[1] += st.w[j] * r1;
    } else {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(st.R);
      r[st.m[j]] = 1.0;
      for (const auto& s : partial)
        r *= killed_transition_matrix(*s.G, as_vec(kill.data(), st.R), s.dt);
      for (int i = 0; i < st.R; ++i) num[i] += st.w[j] * r[i];
    }
  }
  const double mass = num.sum();
  if (!(mass > 0))
    throw NumericError("drifted regime posterior lost all probability mass");
  return num / mass;
}

double FilterBase::ess() const { return effective_sample_size(st_->w); }

std::span<const double> FilterBase::weights() const {
  return {st_->w.data(), st_->w.size()};
}

namespace {

// Shared Gamma-statistics summaries for the statistics-carrying filters.
MixtureSummary stats_summary(const detail::CloudState& st, int p) {
  MixtureSummary s;
  if (st.status.is_known(p)) {
    s.mean = s.median = s.q025 = s.q975 = st.status.known[p];
    return s;
  }
  std::vector<double> shape(st.J), rate(st.J);
  for (int j = 0; j < st.J; ++j) {
    shape[j] = st.a[st.idx(j, p)];
    rate[j] = st.b[st.idx(j, p)] + st.bc[st.idx(j, p)];
    s.mean += st.w[j] * shape[j] / rate[j];
  }
  s.median = gamma_mixture_quantile(st.w, shape, rate, 0.5);
  s.q025 = gamma_mixture_quantile(st.w, shape, rate, 0.025);
  s.q975 = gamma_mixture_quantile(st.w, shape, rate, 0.975);
  return s;
}

std::vector<double> stats_sample(const detail::CloudState& st, int p, int n,
                                 Rng& rng) {
  std::vector<double> out(n);
  if (st.status.is_known(p)) {
    std::fill(out.begin(), out.end(), st.status.known[p]);
    return out;
  }
  for (int k = 0; k < n; ++k) {
    double u = rng.uniform();
    int j = st.J - 1;
    for (int i = 0; i < st.J; ++i) {
      u -= st.w[i];
      if (u < 0) {
        j = i;
        break;
      }
    }
    out[k] = rng.gamma(st.a[st.idx(j, p)],
                       st.b[st.idx(j, p)] + st.bc[st.idx(j, p)]);
  }
  return out;
}

ParticleView stats_view(const detail::CloudState& st, int j) {
  ParticleView v;
  v.m = st.m[j];
  v.logw = st.logw[j];
  v.s.a.resize(st.P);
  v.s.b.resize(st.P);
  v.s.b_comp.resize(st.P);
  for (int p = 0; p < st.P; ++p) {
    v.s.a[p] = st.a[st.idx(j, p)];
    v.s.b[p] = st.b[st.idx(j, p)];
    v.s.b_comp[p] = st.bc[st.idx(j, p)];
  }
  return v;
}

void check_step(const detail::CloudState& st, const EventStep& ev) {
  if (ev.segments.empty())
    throw std::invalid_argument("event step needs at least one gap segment");
  if (!ev.x_pre) throw std::invalid_argument("event step needs x_pre");
  if (ev.reaction < 0 || ev.reaction >= st.Q)
    throw std::invalid_argument("reaction index out of range");
  for (const auto& s : ev.segments) {
    if (!s.G || s.G->rows() != st.R || s.G->cols() != st.R)
      throw std::invalid_argument("segment generator shape mismatch");
    if (!(s.dt >= 0))
      throw std::invalid_argument("segment duration must be >= 0");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Particle learning: weight by the predictive, resample, then move by the
// exact conditional path draw.
// ---------------------------------------------------------------------------

ParticleLearningFilter::ParticleLearningFilter(const ReactionSystem& sys,
                                               SufficientStats prior,
                                               ParamStatus status,
                                               Eigen::VectorXd pi0,
                                               const SmcConfig& cfg)
    : FilterBase(sys, std::move(pi0), cfg) {
  st_->stats_init(std::move(prior), std::move(status));
}

ParticleLearningFilter::~ParticleLearningFilter() = default;

void ParticleLearningFilter::step(const EventStep& ev) {
  auto& st = *st_;
  check_step(st, ev);
  st.fill_hq(*ev.x_pre);

  // Weight by the one-event predictive under a fresh parameter draw.
  parallel_for(st.nthreads, st.J, [&](int jb, int je) {
    for (int j = jb; j < je; ++j) {
      st.draw_theta(j);
      double* kill = &st.kill_s[st.ridx(j, 0)];
      double* aR = &st.aR_s[st.ridx(j, 0)];
      st.rates_for(&st.th[st.idx(j, 0)], ev.reaction, kill, aR);
      const double pred = st.predictive_row(ev.segments, st.m[j], kill, aR);
      st.logw[j] += pred > 0 ? std::log(pred) : log_zero;
    }
  });
  st.normalize_or_collapse(ev);

  const bool resampled = st.should_resample();
  if (resampled) {
    st.draw_ancestors();
  } else {
    std::iota(st.anc.begin(), st.anc.end(), 0u);
  }

  // Move each offspring along an exact conditional regime path drawn from
  // its ancestor's state, then fold the path into the statistics.
  const double gap = st.total_gap(ev);
  parallel_for(st.nthreads, st.J, [&](int jb, int je) {
    AcceptanceStats local;
    std::vector<double> occ(st.R);
    Switches path;
    for (int j = jb; j < je; ++j) {
      const std::uint32_t aj = st.anc[j];
      if (is_log_zero(st.logw[aj])) {
        // A dead slot can only be its own ancestor (it is never selected);
        // its conditional law is undefined, so carry it unchanged.
        for (int p = 0; p < st.P; ++p) {
          st.a2[st.idx(j, p)] = st.a[st.idx(aj, p)];
          st.b2[st.idx(j, p)] = st.b[st.idx(aj, p)];
          st.bc2[st.idx(j, p)] = st.bc[st.idx(aj, p)];
        }
        st.m2[j] = st.m[aj];
        continue;
      }
      path.clear();
      const int m_end = st.conditional_over_segments(
          ev.segments, &st.kill_s[st.ridx(aj, 0)], &st.aR_s[st.ridx(aj, 0)],
          st.m[aj], st.slot_rng[j], local, path);
      occupation(st.m[aj], gap, path, 0, 0.0, occ.data(), st.R);
      for (int p = 0; p < st.P; ++p) {
        st.a2[st.idx(j, p)] = st.a[st.idx(aj, p)];
        st.b2[st.idx(j, p)] = st.b[st.idx(aj, p)];
        st.bc2[st.idx(j, p)] = st.bc[st.idx(aj, p)];
      }
      st.add_gap_stats(&st.a2[st.idx(j, 0)], &st.b2[st.idx(j, 0)],
                       &st.bc2[st.idx(j, 0)], occ.data(), ev.reaction, m_end);
      st.m2[j] = m_end;
    }
    std::lock_guard<std::mutex> lock(st.acc_mu);
    st.acc.proposals += local.proposals;
    st.acc.accepted += local.accepted;
    st.acc.splits += local.splits;
  });

  st.a.swap(st.a2);
  st.b.swap(st.b2);
  st.bc.swap(st.bc2);
  st.m.swap(st.m2);
  if (resampled) st.reset_weights();
  ++st.events;
}

MixtureSummary ParticleLearningFilter::param_summary(int p) const {
  return stats_summary(*st_, p);
}

std::vector<double> ParticleLearningFilter::sample_param_posterior(
    int p, int n, Rng& rng) const {
  return stats_sample(*st_, p, n, rng);
}

const AcceptanceStats& ParticleLearningFilter::acceptance_stats() const {
  return st_->acc;
}

ParticleView ParticleLearningFilter::particle(int j) const {
  return stats_view(*st_, j);
}

// ---------------------------------------------------------------------------
// Storvik: propagate the regime blindly, weight by the event likelihood of
// the propagated path, then resample.
// ---------------------------------------------------------------------------

StorvikFilter::StorvikFilter(const ReactionSystem& sys, SufficientStats prior,
                             ParamStatus status, Eigen::VectorXd pi0,
                             const SmcConfig& cfg)
    : FilterBase(sys, std::move(pi0), cfg) {
  st_->stats_init(std::move(prior), std::move(status));
}

StorvikFilter::~StorvikFilter() = default;

void StorvikFilter::step(const EventStep& ev) {
  auto& st = *st_;
  check_step(st, ev);
  st.fill_hq(*ev.x_pre);
  const double gap = st.total_gap(ev);

  parallel_for(st.nthreads, st.J, [&](int jb, int je) {
    std::vector<double> occ(st.R);
    Switches path;
    for (int j = jb; j < je; ++j) {
      st.draw_theta(j);
      double* kill = &st.kill_s[st.ridx(j, 0)];
      double* aR = &st.aR_s[st.ridx(j, 0)];
      st.rates_for(&st.th[st.idx(j, 0)], ev.reaction, kill, aR);
      path.clear();
      const int m_end =
          st.blind_over_segments(ev.segments, st.m[j], st.slot_rng[j], path);
      occupation(st.m[j], gap, path, 0, 0.0, occ.data(), st.R);
      double expo = 0;
      for (int i = 0; i < st.R; ++i) expo += kill[i] * occ[i];
      st.logw[j] += aR[m_end] > 0 ? std::log(aR[m_end]) - expo : log_zero;
      st.add_gap_stats(&st.a[st.idx(j, 0)], &st.b[st.idx(j, 0)],
                       &st.bc[st.idx(j, 0)], occ.data(), ev.reaction, m_end);
      st.m[j] = m_end;
    }
  });
  st.normalize_or_collapse(ev);

  if (st.should_resample()) {
    st.draw_ancestors();
    parallel_for(st.nthreads, st.J, [&](int jb, int je) {
      for (int j = jb; j < je; ++j) {
        const std::uint32_t aj = st.anc[j];
        for (int p = 0; p < st.P; ++p) {
          st.a2[st.idx(j, p)] = st.a[st.idx(aj, p)];
          st.b2[st.idx(j, p)] = st.b[st.idx(aj, p)];
          st.bc2[st.idx(j, p)] = st.bc[st.idx(aj, p)];
        }
        st.m2[j] = st.m[aj];
      }
    });
    st.a.swap(st.a2);
    st.b.swap(st.b2);
    st.bc.swap(st.bc2);
    st.m.swap(st.m2);
    st.reset_weights();
  }
  ++st.events;
}

MixtureSummary StorvikFilter::param_summary(int p) const {
  return stats_summary(*st_, p);
}

std::vector<double> StorvikFilter::sample_param_posterior(int p, int n,
                                                          Rng& rng) const {
  return stats_sample(*st_, p, n, rng);
}

ParticleView StorvikFilter::particle(int j) const {
  return stats_view(*st_, j);
}

// ---------------------------------------------------------------------------
// Liu-West: explicit parameter values with a kernel-shrinkage move.
// ---------------------------------------------------------------------------

LiuWestFilter::LiuWestFilter(const ReactionSystem& sys, SufficientStats prior,
                             ParamStatus status, Eigen::VectorXd pi0,
                             const SmcConfig& cfg, const LWConfig& lw)
    : FilterBase(sys, std::move(pi0), cfg) {
  if (!(lw.h > 0 && lw.h < 1))
    throw std::invalid_argument("kernel bandwidth must lie in (0, 1)");
  st_->stats_init(std::move(prior), std::move(status));
  st_->explicit_theta = true;
  st_->lw = lw;
  auto& st = *st_;
  for (int j = 0; j < st.J; ++j)
    for (int p = 0; p < st.P; ++p)
      st.th[st.idx(j, p)] =
          st.status.is_known(p)
              ? st.status.known[p]
              : st.slot_rng[j].gamma(st.prior.a[p], st.prior.b[p]);
}

LiuWestFilter::~LiuWestFilter() = default;

void LiuWestFilter::shrinkage_move() {
  auto& st = *st_;
  const double a_shrink = st.lw.shrinkage();
  for (int p = 0; p < st.P; ++p) {
    if (st.status.is_known(p)) continue;
    double mean = 0;
    for (int j = 0; j < st.J; ++j)
      mean += st.w[j] * std::log(st.th[st.idx(j, p)]);
    double var = 0;
    for (int j = 0; j < st.J; ++j) {
      const double d = std::log(st.th[st.idx(j, p)]) - mean;
      var += st.w[j] * d * d;
    }
    const double sd = std::sqrt(std::max(var, 0.0));
    parallel_for(st.nthreads, st.J, [&](int jb, int je) {
      for (int j = jb; j < je; ++j) {
        const double lt = std::log(st.th[st.idx(j, p)]);
        const double moved = a_shrink * lt + (1.0 - a_shrink) * mean +
                             st.lw.h * sd * st.slot_rng[j].normal();
        st.th[st.idx(j, p)] = std::exp(moved);
      }
    });
  }
}

void LiuWestFilter::step(const EventStep& ev) {
  auto& st = *st_;
  check_step(st, ev);
  st.fill_hq(*ev.x_pre);
  const double gap = st.total_gap(ev);

  shrinkage_move();

  parallel_for(st.nthreads, st.J, [&](int jb, int je) {
    std::vector<double> occ(st.R);
    Switches path;
    for (int j = jb; j < je; ++j) {
      double* kill = &st.kill_s[st.ridx(j, 0)];
      double* aR = &st.aR_s[st.ridx(j, 0)];
      st.rates_for(&st.th[st.idx(j, 0)], ev.reaction, kill, aR);
      path.clear();
      const int m_end =
          st.blind_over_segments(ev.segments, st.m[j], st.slot_rng[j], path);
      occupation(st.m[j], gap, path, 0, 0.0, occ.data(), st.R);
      double expo = 0;
      for (int i = 0; i < st.R; ++i) expo += kill[i] * occ[i];
      st.logw[j] += aR[m_end] > 0 ? std::log(aR[m_end]) - expo : log_zero;
      st.m[j] = m_end;
    }
  });
  st.normalize_or_collapse(ev);

  if (st.should_resample()) {
    st.draw_ancestors();
    parallel_for(st.nthreads, st.J, [&](int jb, int je) {
      for (int j = jb; j < je; ++j) {
        const std::uint32_t aj = st.anc[j];
        for (int p = 0; p < st.P; ++p) st.th2[st.idx(j, p)] = st.th[st.idx(aj, p)];
        st.m2[j] = st.m[aj];
      }
    });
    st.th.swap(st.th2);
    st.m.swap(st.m2);
    st.reset_weights();
  }
  ++st.events;
}

MixtureSummary LiuWestFilter::param_summary(int p) const {
  auto& st = *st_;
  MixtureSummary s;
  if (st.status.is_known(p)) {
    s.mean = s.median = s.q025 = s.q975 = st.status.known[p];
    return s;
  }
  std::vector<double> vals(st.J);
  for (int j = 0; j < st.J; ++j) {
    vals[j] = st.th[st.idx(j, p)];
    s.mean += st.w[j] * vals[j];
  }
  s.median = weighted_quantile(st.w, vals, 0.5);
  s.q025 = weighted_quantile(st.w, vals, 0.025);
  s.q975 = weighted_quantile(st.w, vals, 0.975);
  return s;
}

std::vector<double> LiuWestFilter::sample_param_posterior(int p, int n,
                                                          Rng& rng) const {
  auto& st = *st_;
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    double u = rng.uniform();
    int j = st.J - 1;
    for (int i = 0; i < st.J; ++i) {
      u -= st.w[i];
      if (u < 0) {
        j = i;
        break;
      }
    }
    out[k] = st.th[st.idx(j, p)];
  }
  return out;
}

double LiuWestFilter::param_quantile(int p, double prob) const {
  auto& st = *st_;
  if (st.status.is_known(p)) return st.status.known[p];
  std::vector<double> vals(st.J);
  for (int j = 0; j < st.J; ++j) vals[j] = st.th[st.idx(j, p)];
  return weighted_quantile(st.w, vals, prob);
}

double LiuWestFilter::param_value(int p, int j) const {
  return st_->th[st_->idx(j, p)];
}

int LiuWestFilter::regime_of(int j) const { return st_->m[j]; }

}  // namespace hmskm
