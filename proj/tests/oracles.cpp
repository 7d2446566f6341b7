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

#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

Eigen::MatrixXd expm_taylor(const Eigen::MatrixXd& A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd B = A * scale;
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = (term * B) / k;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-300) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

std::vector<GridFilterPoint> grid_filter(const hmskm::ReactionSystem& sys,
                                         const hmskm::RateParams& params,
                                         const Eigen::MatrixXd& G,
                                         const hmskm::EventPath& path,
                                         const Eigen::VectorXd& pi0, double dt,
                                         std::span<const double> query_times) {
  const int R = sys.regimes;
  std::vector<GridFilterPoint> out;
  Eigen::VectorXd pi = pi0;
  hmskm::StateVec x = path.x0;
  double t = path.t0;
  std::size_t qi = 0;
  while (qi < query_times.size() && query_times[qi] < path.t0) ++qi;

  // Advances pi to time target through repeated fixed steps of the killed
  // semigroup, renormalizing as it goes. The per-interval step matrices
  // come from the Taylor exponential, never from the library kernels.
  auto advance_to = [&](double target, const Eigen::MatrixXd& step_mat,
                        double step, const Eigen::MatrixXd& a_mat) {
    while (t + step <= target + 1e-15) {
      pi = (step_mat.transpose() * pi).eval();
      const double mass = pi.sum();
      if (mass <= 0.0) throw std::runtime_error("grid filter underflow");
      pi /= mass;
      t += step;
    }
    const double rem = target - t;
    if (rem > 1e-15) {
      const Eigen::MatrixXd rem_mat = expm_taylor(rem * a_mat);
      pi = (rem_mat.transpose() * pi).eval();
      const double mass = pi.sum();
      if (mass <= 0.0) throw std::runtime_error("grid filter underflow");
      pi /= mass;
    }
    t = target;
  };

  auto kill_matrix = [&]() {
    Eigen::MatrixXd A = G;
    for (int i = 0; i < R; ++i)
      A(i, i) -= hmskm::total_rate(sys, params, t, x, i);
    return A;
  };

  for (const auto& e : path.events) {
    Eigen::MatrixXd A = kill_matrix();
    Eigen::MatrixXd step_mat = expm_taylor(dt * A);
    while (qi < query_times.size() && query_times[qi] <= e.time) {
      advance_to(query_times[qi], step_mat, dt, A);
      out.push_back({t, pi, false});
      ++qi;
    }
    advance_to(e.time, step_mat, dt, A);
    Eigen::VectorXd alpha(R);
    for (int i = 0; i < R; ++i)
      alpha(i) = hmskm::propensity(sys, params, e.reaction, t, x, i);
    pi = pi.cwiseProduct(alpha).eval();
    const double mass = pi.sum();
    if (mass <= 0.0) throw std::runtime_error("grid filter: impossible event");
    pi /= mass;
    out.push_back({t, pi, true});
    const hmskm::StateVec& d = sys.delta[e.reaction];
    for (std::size_t s = 0; s < d.size(); ++s) x[s] += d[s];
  }
  {
    Eigen::MatrixXd A = kill_matrix();
    Eigen::MatrixXd step_mat = expm_taylor(dt * A);
    while (qi < query_times.size() && query_times[qi] <= path.t_end + 1e-15) {
      advance_to(query_times[qi], step_mat, dt, A);
      out.push_back({t, pi, false});
      ++qi;
    }
  }
  return out;
}

double rk4_pi2(double mu12, double mu21, double kill1, double kill2,
               double p0, double T, int n) {
  auto f = [&](double p) {
    return mu12 * (1.0 - p) - mu21 * p - (kill2 - kill1) * p * (1.0 - p);
  };
  const double h = T / n;
  double p = p0;
  for (int k = 0; k < n; ++k) {
    const double k1 = f(p);
    const double k2 = f(p + 0.5 * h * k1);
    const double k3 = f(p + 0.5 * h * k2);
    const double k4 = f(p + h * k3);
    p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

namespace {

// Asymptotic KS survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2
// lambda^2}.
double ks_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue_from_d(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return ks_q((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty KS sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double v = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= v) ++ia;
    while (ib < b.size() && b[ib] <= v) ++ib;
    d = std::max(d, std::abs(ia / na - ib / nb));
  }
  return ks_pvalue_from_d(d, na * nb / (na + nb));
}

double ks_pvalue_vs_cdf(std::vector<double> sample,
                        const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("empty KS sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double c = cdf(sample[i]);
    d = std::max(d, std::abs(c - i / n));
    d = std::max(d, std::abs((i + 1) / n - c));
  }
  return ks_pvalue_from_d(d, n);
}

double chi2_gof_pvalue(std::span<const double> observed,
                       std::span<const double> expected, int fitted_params) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi2: need matching bins");
  double stat = 0.0;
  int df = -1 - fitted_params;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    const double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
    ++df;
  }
  if (df < 1) throw std::invalid_argument("chi2: no degrees of freedom");
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
