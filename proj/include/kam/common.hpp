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

#ifndef KAMLAB_COMMON_HPP
#define KAMLAB_COMMON_HPP

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kam {

using Complex = std::complex<double>;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Analyticity weights (rho, delta) of the weighted-l1 majorant
///   |f| = sum |a_{n,alpha}| e^{2 pi ||n||_1 rho} delta^{|alpha|}.
struct NormWeights {
  double rho = 0.1;
  double delta = 0.1;
  NormWeights() = default;
  NormWeights(double r, double d) : rho(r), delta(d) {
    if (!(r > 0.0) || !(d > 0.0)) throw std::invalid_argument("NormWeights: rho, delta must be positive");
  }
};

// Error taxonomy shared by the numeric modules. Every failure carries enough
// payload to reproduce it (the offending mode, the iteration trace, ...).

struct ResonanceError : std::runtime_error {
  std::vector<int> mode;
  double divisor;
  ResonanceError(std::string msg, std::vector<int> n, double div)
      : std::runtime_error(std::move(msg)), mode(std::move(n)), divisor(div) {}
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PrecisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShiftTooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InversionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NormOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// t * w reduced mod 1 without losing the fractional part when |t * w| is
/// huge.  Splits the product with an FMA so both halves are exact, then
/// reduces each half separately (fmod is exact in IEEE arithmetic).
inline double mul_mod1(double t, double w) {
  double p = t * w;
  double e = std::fma(t, w, -p);  // exact residual of the product
  double frac = std::fmod(std::fmod(p, 1.0) + std::fmod(e, 1.0), 1.0);
  return frac;
}

inline double sqr(double x) { return x * x; }

// Standard exp-based smooth step on [0, 1]: 0 at t <= 0, 1 at t >= 1, C^inf.
inline double bump_sigma(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double bump_sigma_d1(double t) { return t > 0.0 ? bump_sigma(t) / (t * t) : 0.0; }
inline double bump_sigma_d2(double t) {
  if (t <= 0.0) return 0.0;
  double s = bump_sigma(t);
  return s / (t * t * t * t) - 2.0 * s / (t * t * t);
}

inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = bump_sigma(t), b = bump_sigma(1.0 - t);
  return a / (a + b);
}

inline double smooth_step_d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double a = bump_sigma(t), b = bump_sigma(1.0 - t);
  double ap = bump_sigma_d1(t), bp = -bump_sigma_d1(1.0 - t);
  double den = a + b;
  return (ap * b - a * bp) / (den * den);
}

inline double smooth_step_d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double a = bump_sigma(t), b = bump_sigma(1.0 - t);
  double ap = bump_sigma_d1(t), bp = -bump_sigma_d1(1.0 - t);
  double app = bump_sigma_d2(t), bpp = bump_sigma_d2(1.0 - t);
  double den = a + b;
  double n1 = ap * b - a * bp;
  double n1p = app * b - a * bpp;
  return (n1p * den - 2.0 * n1 * (ap + bp)) / (den * den * den);
}

}  // namespace kam

#endif  // KAMLAB_COMMON_HPP
