// Copyright 2026 The kamlab Authors
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

#include "kam/diophantine.hpp"

using namespace kam;
using namespace kam::dio;

namespace {
const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));
}

TEST_SUITE("diophantine") {

TEST_CASE("small_divisor_min: exact resonance and golden minimum") {
  auto res = small_divisor_min({1.0, 0.5}, 2);
  CHECK(res.value == 0.0);
  CHECK(res.k == std::vector<int64_t>{1, -2});

  auto gold = small_divisor_min({1.0, kGolden}, 5);
  CHECK(gold.k == std::vector<int64_t>{5, -3});
  CHECK(gold.value == doctest::Approx(std::abs(5.0 - 3.0 * kGolden)).epsilon(1e-14));

  // m*(N) nonincreasing in N
  double prev = std::numeric_limits<double>::infinity();
  for (int64_t N : {2, 5, 13, 34, 89}) {
    double m = small_divisor_min({1.0, kGolden}, N).value;
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("small_divisor_min matches brute force on random vectors") {
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w = {u(rng), u(rng), u(rng)};
    const int64_t N = 6;
    double best = std::numeric_limits<double>::infinity();
    for (int a = -N; a <= N; ++a)
      for (int b = -N; b <= N; ++b)
        for (int c = -N; c <= N; ++c) {
          if (!a && !b && !c) continue;
          best = std::min(best, std::abs(a * w[0] + b * w[1] + c * w[2]));
        }
    CHECK(small_divisor_min(w, N).value == doctest::Approx(best).epsilon(1e-13));
  }
}

TEST_CASE("small divisor scales homogeneously") {
  Rng rng(79);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  std::vector<double> w = {u(rng), u(rng)};
  auto base = small_divisor_min(w, 50);
  std::vector<double> w2 = {3.0 * w[0], 3.0 * w[1]};
  auto scaled = small_divisor_min(w2, 50);
  CHECK(scaled.k == base.k);
  CHECK(scaled.value == doctest::Approx(3.0 * base.value).epsilon(1e-13));
}

TEST_CASE("is_diophantine_up_to: resonant, golden, and consistency") {
  DiophantineParams p(0.2, 1.0, 100);
  auto bad = is_diophantine_up_to({1.0, 0.5}, p);
  CHECK(!bad.holds);
  CHECK(bad.violation->k == std::vector<int64_t>{1, -2});

  auto good = is_diophantine_up_to({1.0, kGolden}, p);
  CHECK(good.holds);

  // consistency with small_divisor_min on a near-resonant vector
  std::vector<double> w = {1.0, 0.618};
  DiophantineParams tight(0.9, 1.1, 200);
  auto verdict = is_diophantine_up_to(w, tight);
  bool any_violation = false;
  for (int64_t N = 1; N <= 200 && !any_violation; ++N) {
    auto m = small_divisor_min(w, N);
    int64_t kn = 0;
    for (auto v : m.k) kn = std::max<int64_t>(kn, std::llabs(v));
    if (m.value < tight.kappa / std::pow(double(kn), tight.tau)) any_violation = true;
  }
  CHECK(verdict.holds == !any_violation);
}

TEST_CASE("uniform exponent: golden is 1.0 +/- 0.1, resonant is infinite") {
  std::vector<int64_t> Ns;
  for (int64_t N = 10; N <= 10000; N = N * 3 / 2) Ns.push_back(N);
  auto est = uniform_exponent_estimate({1.0, kGolden}, Ns);
  CHECK(!est.divergent);
  CHECK(std::abs(est.gamma_hat - 1.0) < 0.1);

  auto res = uniform_exponent_estimate({1.0, 0.5}, {5, 10});
  CHECK(res.divergent);
  CHECK(std::isinf(res.gamma_hat));
}

TEST_CASE("build_liouville_pair: witnesses, independence, exponent growth") {
  std::vector<LiouvilleTarget> sched(3);
  sched[0].exponent = 5;
  sched[1].exponent = 10;
  sched[2].exponent = 20;
  auto pair = build_liouville_pair({1.3, 1.0}, sched, 0.05);

  REQUIRE(pair.witnesses.size() == 3);
  CHECK(witness_recheck_error(pair) <= 1e-15);
  for (const auto& wt : pair.witnesses) {
    double kn = std::max(std::abs(double(wt.k[0])), std::abs(double(wt.k[1])));
    CHECK(wt.value < std::pow(kn, -5.0));
  }
  // rational independence up to 200: no exact zero
  CHECK(small_divisor_min(pair.omega, 200).value > 0.0);

  // the estimated uniform exponent blows past the golden value at the
  // witness scale
  int64_t scale = std::max(std::llabs(pair.witnesses[0].k[0]),
                           std::llabs(pair.witnesses[0].k[1]));
  auto est = uniform_exponent_estimate(pair.omega, {scale});
  CHECK(est.table[0].second < std::pow(double(scale), -5.0));

  // scaling reuses witnesses with scaled bounds
  FrequencyVector scaled;
  scaled.omega = {2.0 * pair.omega[0], 2.0 * pair.omega[1]};
  for (const auto& wt : pair.witnesses) scaled.witnesses.push_back({wt.k, 2.0 * wt.value});
  CHECK(witness_recheck_error(scaled) <= 1e-15);
}

TEST_CASE("resonance_pick: stored witness, golden failure, direct recheck") {
  LiouvilleTarget t;
  t.kind = LiouvilleTarget::Kind::Value;
  t.value = 1e-13;
  t.min_scale = 13;
  t.min_component = 13;
  auto pair = build_liouville_pair({1.3, 1.0}, {t}, 0.05);

  auto [q1, q2] = resonance_pick(pair, 10.0, 1.0, 2, 1e-7);
  CHECK(std::abs(q1) > 11);
  CHECK(std::abs(q2) > 11);
  double v = std::abs(q1 * pair.omega[0] + q2 * pair.omega[1]);
  CHECK(v < 1e-7 * std::min(std::pow(std::abs(double(q1)), -4.0),
                            std::pow(std::abs(double(q2)), -4.0)));

  FrequencyVector golden;
  golden.omega = {1.0, kGolden};
  CHECK_THROWS_AS(resonance_pick(golden, 3.0, 1.0, 2, 1e-9), NotFoundError);
}

TEST_CASE("precision floor reports an error instead of fake witnesses") {
  std::vector<LiouvilleTarget> sched(1);
  sched[0].exponent = 40;
  sched[0].min_scale = 50;
  CHECK_THROWS_AS(build_liouville_pair({1.3, 1.0}, sched, 0.05), PrecisionError);
}

TEST_CASE("enumeration budget guard") {
  CHECK_THROWS_AS(small_divisor_min({1.0, 0.7, 1.3, 0.9}, 100000, 1000), BudgetError);
}

}  // TEST_SUITE
