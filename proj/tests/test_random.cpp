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

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "hmskm/random.hpp"
#include "oracles.hpp"

using hmskm::Rng;

namespace {

// Sample moments with the standard error of the mean.
struct Moments {
  double mean = 0.0, var = 0.0, se_mean = 0.0;
};

template <class Draw>
Moments sample_moments(int n, Draw&& draw) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  Moments m;
  m.mean = s / n;
  m.var = s2 / n - m.mean * m.mean;
  m.se_mean = std::sqrt(m.var / n);
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST_SUITE("random") {

TEST_CASE("same seed reproduces the raw stream bit for bit") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  int diff = 0;
  Rng a2(42);
  for (int i = 0; i < 64; ++i) diff += (a2.next_u64() != c.next_u64());
  CHECK(diff > 60);  // different seeds decorrelate immediately
}

TEST_CASE("reseed restores the sequence") {
  Rng a(7);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());
  a.reseed(7);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == first[i]);
}

TEST_CASE("substreams are deterministic and mutually distinct") {
  Rng s0 = Rng::stream(99, 0);
  Rng s0b = Rng::stream(99, 0);
  Rng s1 = Rng::stream(99, 1);
  Rng other = Rng::stream(100, 0);
  bool same01 = true, same_seed = true;
  for (int i = 0; i < 256; ++i) {
    const std::uint64_t a = s0.next_u64();
    CHECK(a == s0b.next_u64());
    same01 = same01 && (a == s1.next_u64());
    same_seed = same_seed && (a == other.next_u64());
  }
  CHECK_FALSE(same01);
  CHECK_FALSE(same_seed);
}

TEST_CASE("substreams look independent: cross-correlation near zero") {
  const int n = 100000;
  Rng a = Rng::stream(2024, 3), b = Rng::stream(2024, 4);
  double sxy = 0.0;
  for (int i = 0; i < n; ++i)
    sxy += (a.uniform() - 0.5) * (b.uniform() - 0.5);
  // Var[(U-1/2)(V-1/2)] = 1/144, so SE of the mean product is 1/(12 sqrt n).
  const double corr_se = 1.0 / (12.0 * std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sxy / n) < 4.0 * corr_se);
}

TEST_CASE("uniform: range, moments, and distribution") {
  Rng rng(11);
  const int n = 200000;
  std::vector<double> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    xs.push_back(u);
  }
  const Moments m = sample_moments(n, [&, i = 0]() mutable { return xs[i++]; });
  CHECK(std::abs(m.mean - 0.5) < 3.0 * m.se_mean);
  CHECK(m.var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
  std::vector<double> sub(xs.begin(), xs.begin() + 5000);
  CHECK(oracle::ks_pvalue_vs_cdf(sub, [](double x) { return x; }) > 1e-3);
}

TEST_CASE("uniform_index covers [0, n) uniformly") {
  Rng rng(12);
  const int n = 7, draws = 70000;
  std::vector<double> count(n, 0.0), expect(n, draws / static_cast<double>(n));
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t k = rng.uniform_index(n);
    REQUIRE(k < static_cast<std::uint64_t>(n));
    count[k] += 1.0;
  }
  CHECK(oracle::chi2_gof_pvalue(count, expect) > 1e-3);
}

TEST_CASE("exponential: positivity, mean, and distribution") {
  Rng rng(13);
  const double rate = 2.5;
  const int n = 200000;
  std::vector<double> xs;
  xs.reserve(5000);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(rate);
    REQUIRE(x > 0.0);
    s += x;
    if (i < 5000) xs.push_back(x);
  }
  // Exponential SE of the mean is (1/rate)/sqrt(n).
  CHECK(std::abs(s / n - 1.0 / rate) < 3.0 / (rate * std::sqrt(double(n))));
  CHECK(oracle::ks_pvalue_vs_cdf(
            xs, [&](double x) { return -std::expm1(-rate * x); }) > 1e-3);
}

TEST_CASE("normal: moments and distribution") {
  Rng rng(14);
  const int n = 200000;
  std::vector<double> xs;
  xs.reserve(5000);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    if (i < 5000) xs.push_back(x);
  }
  CHECK(std::abs(s / n) < 3.0 / std::sqrt(double(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(oracle::ks_pvalue_vs_cdf(xs, normal_cdf) > 1e-3);
}

TEST_CASE("gamma: moments and distribution across the shape branches") {
  struct Case {
    double shape, rate;
  };
  for (const Case c : {Case{25.0, 100.0}, Case{1700.0, 7300.0}, Case{0.5, 1.0},
                       Case{1.0, 3.0}}) {
    CAPTURE(c.shape);
    CAPTURE(c.rate);
    Rng rng(static_cast<std::uint64_t>(c.shape * 1000 + c.rate));
    const int n = 100000;
    std::vector<double> xs;
    xs.reserve(4000);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(c.shape, c.rate);
      REQUIRE(x > 0.0);
      s += x;
      s2 += x * x;
      if (i < 4000) xs.push_back(x);
    }
    const double mean = c.shape / c.rate;
    const double sd = std::sqrt(c.shape) / c.rate;
    CHECK(std::abs(s / n - mean) < 4.0 * sd / std::sqrt(double(n)));
    CHECK(s2 / n - (s / n) * (s / n) ==
          doctest::Approx(sd * sd).epsilon(0.05));
    CHECK(oracle::ks_pvalue_vs_cdf(xs, [&](double x) {
            return boost::math::gamma_p(c.shape, c.rate * x);
          }) > 1e-3);
  }
}

TEST_CASE("gamma mean matches a frozen reference for the scenario prior") {
  // Ga(1700, 7300): mean 1700/7300 = 0.23287671232876711.
  Rng rng(20260815);
  const int n = 400000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += rng.gamma(1700.0, 7300.0);
  const double se = (std::sqrt(1700.0) / 7300.0) / std::sqrt(double(n));
  CHECK(std::abs(s / n - 0.2328767123287671) < 4.0 * se);
}

}  // TEST_SUITE
