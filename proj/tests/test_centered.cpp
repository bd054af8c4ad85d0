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

#include "kam/centered.hpp"
#include "test_util.hpp"

using namespace kam;
using kamtest::random_point;
using kamtest::random_series;

TEST_SUITE("centered") {

TEST_CASE("recenter: Taylor identities for monomials") {
  // f = r1 -> c1 + (r-c)1
  Series f(2, 2, 2, 3);
  f.set({0, 0}, {1, 0}, 1.0);
  CenteredSeries cf = recenter(f);
  CHECK(cf.data().coeff({0, 0}, {1, 0, 0, 0}).real() == doctest::Approx(1.0));
  CHECK(cf.data().coeff({0, 0}, {0, 0, 1, 0}).real() == doctest::Approx(1.0));
  CHECK(cf.data().size() == 2);

  // f = 1/2 r1^2 -> 1/2 c1^2 + c1 (r-c)1 + 1/2 (r-c)1^2
  Series g(2, 2, 2, 3);
  g.set({0, 0}, {2, 0}, 0.5);
  CenteredSeries cg = recenter(g);
  CHECK(cg.data().coeff({0, 0}, {0, 0, 2, 0}).real() == doctest::Approx(0.5));
  CHECK(cg.data().coeff({0, 0}, {1, 0, 1, 0}).real() == doctest::Approx(1.0));
  CHECK(cg.data().coeff({0, 0}, {2, 0, 0, 0}).real() == doctest::Approx(0.5));
}

TEST_CASE("recenter: pointwise evaluation equality on random series") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    Series f = random_series(rng, 2, 3, 4, 15);
    CenteredSeries cf = recenter(f);
    for (int pt = 0; pt < 5; ++pt) {
      auto phi = random_point(rng, 2, 0.5);
      auto r = random_point(rng, 2, 0.7);
      auto c = random_point(rng, 2, 0.7);
      double lhs = f.evaluate(phi, r);
      double rhs = cf.evaluate(phi, r, c);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("rc strata partition the series and implement O^j membership") {
  Rng rng(103);
  Series f = random_series(rng, 2, 3, 4, 20);
  CenteredSeries cf = recenter(f);
  CenteredSeries sum = cf.rc_slice(0, 0);
  sum += cf.rc_slice(1, 1);
  sum += cf.rc_slice(2, 2);
  sum += cf.rc_slice(3, -1);
  CHECK((sum.data() - cf.data()).max_abs_coeff() == 0.0);
  CHECK(cf.rc_slice(1, -1).min_rc_degree() >= 1);
  CHECK(cf.rc_slice(2, -1).min_rc_degree() >= 2);
}

TEST_CASE("c polynomial round trip") {
  Series p(2, 2, 0, 4);
  p.set({0, 0}, {2, 1}, -0.75);
  p.set({0, 0}, {0, 3}, 0.25);
  CenteredSeries cp = recenter(p);
  // a pure-r polynomial recentered and restricted to its alpha = 0 part is
  // the same polynomial in c
  Series back = c_polynomial_to_plain(cp.rc_slice(0, 0));
  CHECK((back - p).max_abs_coeff() < 1e-15);
}

}  // TEST_SUITE
