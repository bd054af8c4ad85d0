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

#ifndef KAMLAB_TESTS_TEST_UTIL_HPP
#define KAMLAB_TESTS_TEST_UTIL_HPP

#include <random>
#include <vector>

#include "kam/series.hpp"

namespace kamtest {

using kam::Complex;
using kam::Rng;
using kam::Series;

/// Random conjugate-symmetric series with the given support parameters.
inline Series random_series(Rng& rng, int d, int N, int q, int terms, double scale = 1.0,
                            int n_max = -1, int q_max = -1) {
  if (n_max < 0) n_max = N;
  if (q_max < 0) q_max = q;
  Series s(d, d, N, q);
  std::uniform_int_distribution<int> mode(-n_max, n_max);
  std::uniform_int_distribution<int> expo(0, q_max);
  std::normal_distribution<double> coef(0.0, scale);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> n(d), alpha(d);
    int deg = 0;
    for (int i = 0; i < d; ++i) {
      n[i] = mode(rng);
      alpha[i] = expo(rng);
      deg += alpha[i];
    }
    if (deg > q_max) continue;
    s.set(n, alpha, Complex(coef(rng), coef(rng)));
  }
  return s;
}

inline std::vector<double> random_point(Rng& rng, int d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> x(d);
  for (auto& v : x) v = u(rng);
  return x;
}

/// Independent Horner-style evaluation: groups by Fourier mode, evaluates
/// each polynomial factor by nested Horner recursion over the variables.
double horner_reference(const Series& f, std::span<const double> phi,
                        std::span<const double> x);

}  // namespace kamtest

#endif  // KAMLAB_TESTS_TEST_UTIL_HPP
