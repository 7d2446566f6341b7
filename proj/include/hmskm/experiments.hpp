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

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmskm/particle_learning.hpp"
#include "hmskm/policy.hpp"
#include "hmskm/regime_filter.hpp"
#include "hmskm/sis.hpp"

// Reproducible studies: the filter-comparison table, the policy-cost table,
// and the named reproduction suites behind the command line. Everything is
// deterministic in the configured master seed.
namespace hmskm {

// Feeds a recorded path to a filter event by event. `on_capture(t, f)`
// fires once per capture time, after the last event at or before t (capture
// times must be ascending); `on_event(k, t, f)` after every event update.
void drive_filter(
    FilterBase& filter, const ReactionSystem& sys, const RegimeModel& regimes,
    const EventPath& path, std::span<const double> capture_times,
    const std::function<void(double, const FilterBase&)>& on_capture = {},
    const std::function<void(int, double, const FilterBase&)>& on_event = {});

enum class SmcAlgorithm { pl, storvik, liu_west };

std::unique_ptr<FilterBase> make_filter(SmcAlgorithm algo,
                                        const ReactionSystem& sys,
                                        SufficientStats prior,
                                        ParamStatus status,
                                        Eigen::VectorXd pi0,
                                        const SmcConfig& cfg, double lw_h);

// Replicated filter comparison on one fixed path: coverage of the true
// infectiousness parameter by the 95% posterior interval at two checkpoint
// times, and the mean absolute deviation of the high-season posterior from
// a large-J benchmark run.
struct SmcComparisonConfig {
  int particles = 2000;
  int runs = 30;
  int benchmark_factor = 10;  // benchmark gets particles * factor
  double t1 = 120.0;
  double t2 = 270.0;
  ResampleScheme scheme = ResampleScheme::residual;
  double lw_h = 0.97;
  std::uint64_t seed = 8;
};

struct AlgoMetrics {
  double coverage_t1 = 0.0;
  double coverage_t2 = 0.0;
  double pi2_err_t1 = 0.0;  // mean |pi2hat - benchmark pi2hat| at t1
  double pi2_err_t2 = 0.0;
};

struct SmcComparisonResult {
  AlgoMetrics pl, storvik, lw;
  double benchmark_pi2_t1 = 0.0, benchmark_pi2_t2 = 0.0;
  MixtureSummary benchmark_theta1_t2;
  int events = 0;
};

SmcComparisonResult run_smc_comparison(const SISModel& model,
                                       const EventPath& path,
                                       const SmcComparisonConfig& cfg);

// Standard rule set for the policy study.
std::vector<PolicyRule> standard_policy_rules();

// Named reproduction suites. Each writes its outputs and a manifest under
// `outdir` and returns threshold checks; scale is "desk" (fast) or "full".
struct CheckResult {
  std::string label;
  bool pass = false;
  std::string detail;
};

struct ReproduceReport {
  std::string suite;
  std::string scale;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

ReproduceReport run_reproduction(const std::string& suite,
                                 const std::string& scale, std::uint64_t seed,
                                 const std::string& outdir);

const std::vector<std::string>& reproduction_suites();

void write_report_json(std::ostream& out, const ReproduceReport& report);

}  // namespace hmskm
