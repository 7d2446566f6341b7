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

#include "hmskm/kinetics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace hmskm {

namespace {

double param_or(const std::map<std::string, double>& params,
                const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double require_param(const std::map<std::string, double>& params,
                     const std::string& law, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end())
    throw std::invalid_argument("hazard law '" + law +
                                "' requires parameter '" + key + "'");
  return it->second;
}

using HazardFactory =
    std::function<HazardLaw(const std::map<std::string, double>&)>;

std::unordered_map<std::string, HazardFactory>& hazard_registry() {
  static std::unordered_map<std::string, HazardFactory> reg;
  return reg;
}

std::mutex& hazard_registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_hazard(const std::string& name, HazardFactory factory) {
  std::lock_guard<std::mutex> lock(hazard_registry_mutex());
  hazard_registry()[name] = std::move(factory);
}

HazardLaw make_hazard(const std::string& name,
                      const std::map<std::string, double>& params) {
  {
    std::lock_guard<std::mutex> lock(hazard_registry_mutex());
    auto it = hazard_registry().find(name);
    if (it != hazard_registry().end()) return it->second(params);
  }
  HazardLaw law;
  law.name = name;
  law.params = params;
  if (name == "sis_infection") {
    const double N = require_param(params, name, "N");
    const double eta = require_param(params, name, "eta");
    const int sp = static_cast<int>(param_or(params, "species", 0));
    if (N <= 0 || eta < 0)
      throw std::invalid_argument("sis_infection: need N > 0 and eta >= 0");
    law.value = [N, eta, sp](double, const StateVec& x) {
      const double v = static_cast<double>(x[sp]);
      return (v + eta) * (N - v) / N;
    };
  } else if (name == "linear") {
    const int sp = static_cast<int>(param_or(params, "species", 0));
    law.value = [sp](double, const StateVec& x) {
      return static_cast<double>(x[sp]);
    };
  } else if (name == "constant") {
    const double v = require_param(params, name, "value");
    if (v < 0) throw std::invalid_argument("constant hazard must be >= 0");
    law.value = [v](double, const StateVec&) { return v; };
  } else {
    throw std::invalid_argument("unknown hazard law '" + name + "'");
  }
  return law;
}

void ReactionSystem::validate() const {
  const int q = reactions();
  if (species <= 0) throw std::invalid_argument("species must be positive");
  if (regimes <= 0) throw std::invalid_argument("regimes must be positive");
  if (q == 0) throw std::invalid_argument("need at least one reaction");
  if (static_cast<int>(hazard.size()) != q ||
      static_cast<int>(reaction_name.size()) != q)
    throw std::invalid_argument("reaction table sizes disagree");
  for (const auto& d : delta)
    if (static_cast<int>(d.size()) != species)
      throw std::invalid_argument("stoichiometry row size mismatch");
  if (static_cast<int>(tie.size()) != q * regimes)
    throw std::invalid_argument("rate tie table must be reactions x regimes");
  const int np = param_count();
  if (static_cast<int>(params.base.size()) != np)
    throw std::invalid_argument("base parameter count mismatch");
  for (double v : params.base)
    if (!(v > 0)) throw std::invalid_argument("base parameters must be > 0");
  for (const auto& t : tie) {
    if (t.param < 0 || t.param >= np)
      throw std::invalid_argument("tie refers to a missing parameter");
    if (!(t.coef >= 0))
      throw std::invalid_argument("tie coefficients must be >= 0");
  }
  for (const auto& h : hazard) {
    if (!h.value) throw std::invalid_argument("hazard law has no value fn");
    if (!h.time_independent && !h.sup_bound)
      throw std::invalid_argument(
          "time-dependent hazard needs a sup_bound for thinning");
  }
}

void RegimeModel::validate() const {
  if (regimes <= 0) throw std::invalid_argument("regimes must be positive");
  if (!fn) {
    if (G.rows() != regimes || G.cols() != regimes)
      throw std::invalid_argument("generator shape mismatch");
    for (int i = 0; i < regimes; ++i) {
      double row = 0;
      for (int j = 0; j < regimes; ++j) {
        if (j != i && G(i, j) < 0)
          throw std::invalid_argument("generator off-diagonals must be >= 0");
        row += G(i, j);
      }
      if (std::abs(row) > 1e-12 * (1.0 + std::abs(G(i, i))))
        throw std::invalid_argument("generator rows must sum to zero");
    }
  }
}

void EventPath::validate(const ReactionSystem& sys) const {
  if (!(t_end >= t0)) throw std::invalid_argument("t_end must be >= t0");
  if (static_cast<int>(x0.size()) != sys.species)
    throw std::invalid_argument("initial state size mismatch");
  if (m0 < 0 || m0 >= sys.regimes)
    throw std::invalid_argument("initial regime out of range");
  double prev = t0;
  for (const auto& e : events) {
    if (!(e.time > prev))
      throw std::invalid_argument("event times must be strictly increasing");
    if (e.time > t_end) throw std::invalid_argument("event after t_end");
    if (e.reaction < 0 || e.reaction >= sys.reactions())
      throw std::invalid_argument("event reaction out of range");
    prev = e.time;
  }
  if (regime_path) {
    prev = t0;
    for (const auto& s : *regime_path) {
      if (!(s.time > prev))
        throw std::invalid_argument("switch times must be strictly increasing");
      if (s.time > t_end) throw std::invalid_argument("switch after t_end");
      if (s.regime < 0 || s.regime >= sys.regimes)
        throw std::invalid_argument("switch regime out of range");
      prev = s.time;
    }
  }
  StateVec x = x0;
  for (const auto& e : events) {
    const StateVec& d = sys.delta[e.reaction];
    for (int s = 0; s < sys.species; ++s) {
      x[s] += d[s];
      if (x[s] < 0)
        throw std::invalid_argument("population count went negative");
    }
  }
}

double propensity(const ReactionSystem& sys, const RateParams& params, int q,
                  double t, const StateVec& x, int m) {
  return rate_value(sys, params, q, m) * sys.hazard[q].value(t, x);
}

double total_rate(const ReactionSystem& sys, const RateParams& params,
                  double t, const StateVec& x, int m) {
  double total = 0;
  for (int q = 0; q < sys.reactions(); ++q)
    total += propensity(sys, params, q, t, x, m);
  return total;
}

double reaction_type_likelihood(const ReactionSystem& sys,
                                const RateParams& params, int q, double t,
                                const StateVec& x, int m) {
  const double total = total_rate(sys, params, t, x, m);
  if (total <= 0) {
    std::ostringstream msg;
    msg << "all propensities vanish at t=" << t << ", regime " << (m + 1)
        << "; the reaction-type law is undefined";
    throw DegenerateStateError(msg.str());
  }
  return propensity(sys, params, q, t, x, m) / total;
}

double propensity(const ReactionSystem& sys, int q, double t,
                  const StateVec& x, int m) {
  return propensity(sys, sys.params, q, t, x, m);
}

double total_rate(const ReactionSystem& sys, double t, const StateVec& x,
                  int m) {
  return total_rate(sys, sys.params, t, x, m);
}

double reaction_type_likelihood(const ReactionSystem& sys, int q, double t,
                                const StateVec& x, int m) {
  return reaction_type_likelihood(sys, sys.params, q, t, x, m);
}

Eigen::VectorXd total_rate_vector(const ReactionSystem& sys,
                                  const RateParams& params, double t,
                                  const StateVec& x) {
  Eigen::VectorXd v(sys.regimes);
  for (int i = 0; i < sys.regimes; ++i) v[i] = total_rate(sys, params, t, x, i);
  return v;
}

Eigen::VectorXd propensity_vector(const ReactionSystem& sys,
                                  const RateParams& params, int q, double t,
                                  const StateVec& x) {
  Eigen::VectorXd v(sys.regimes);
  for (int i = 0; i < sys.regimes; ++i)
    v[i] = propensity(sys, params, q, t, x, i);
  return v;
}

namespace {

// int_t0^t1 alpha_bar(s, x, m) ds for one constancy piece; closed form for
// time-independent hazards, adaptive quadrature otherwise.
double piece_rate_integral(const ReactionSystem& sys, const RateParams& params,
                           double t0, double t1, const StateVec& x, int m) {
  double fixed = 0;
  double integral = 0;
  for (int q = 0; q < sys.reactions(); ++q) {
    const double theta = rate_value(sys, params, q, m);
    if (theta == 0) continue;
    const HazardLaw& h = sys.hazard[q];
    if (h.time_independent) {
      fixed += theta * h.value(t0, x);
    } else {
      integral += theta * boost::math::quadrature::gauss_kronrod<double, 15>::
                              integrate([&](double s) { return h.value(s, x); },
                                        t0, t1, 12, 1e-12);
    }
  }
  return fixed * (t1 - t0) + integral;
}

}  // namespace

PathLogLik path_log_likelihood(const ReactionSystem& sys,
                               const RateParams& params,
                               const EventPath& path) {
  if (!path.regime_path)
    throw std::invalid_argument(
        "path_log_likelihood needs the regime path; use the filters when the "
        "regime is hidden");
  CompensatedSum survival;
  CompensatedSum events;
  bool impossible = false;
  for_each_piece(
      sys, path,
      [&](double t0, double t1, const StateVec& x, int m) {
        survival.add(-piece_rate_integral(sys, params, t0, t1, x, m));
      },
      [&](double t, int q, const StateVec& x_pre, int m) {
        const double a = propensity(sys, params, q, t, x_pre, m);
        if (a <= 0) {
          impossible = true;
        } else {
          events.add(std::log(a));
        }
      });
  PathLogLik out;
  out.survival = survival.value();
  out.events = impossible ? log_zero : events.value();
  return out;
}

PathLogLik path_log_likelihood(const ReactionSystem& sys,
                               const EventPath& path) {
  return path_log_likelihood(sys, sys.params, path);
}

}  // namespace hmskm
