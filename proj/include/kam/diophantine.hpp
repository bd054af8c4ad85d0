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

#ifndef KAMLAB_DIOPHANTINE_HPP
#define KAMLAB_DIOPHANTINE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "kam/common.hpp"

namespace kam::dio {

/// A recorded near-resonance |<k, omega>| at its evaluation value.
struct Witness {
  std::vector<int64_t> k;
  double value;  // |<k, omega>| as evaluated at construction time
};

/// Frequency vector with optional near-resonance witnesses.
struct FrequencyVector {
  std::vector<double> omega;
  std::vector<Witness> witnesses;
  int dim() const { return static_cast<int>(omega.size()); }
};

/// DC(kappa, tau) parameters plus the finite enumeration horizon: all
/// verdicts here are "up to N_check", never a true Diophantine certificate.
struct DiophantineParams {
  double kappa;
  double tau;
  int64_t n_check;
  DiophantineParams(double k, double t, int64_t n) : kappa(k), tau(t), n_check(n) {
    if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("DiophantineParams: kappa in (0,1)");
    if (!(n >= 1)) throw std::invalid_argument("DiophantineParams: n_check >= 1");
  }
};

struct SmallDivisor {
  std::vector<int64_t> k;
  double value;
};

/// min_{0 < ||k||_inf <= N} |<k, omega>| with a realizing k (sign-normalized
/// so the first nonzero component is positive).  Exhaustive over the box;
/// the coordinate of largest |omega_i| is solved by rounding instead of
/// scanned, which does not change the minimum.  Throws BudgetError when the
/// remaining (2N+1)^(d-1) enumeration exceeds `budget` points.
SmallDivisor small_divisor_min(const std::vector<double>& omega, int64_t N,
                               int64_t budget = 400'000'000);

struct DiophantineVerdict {
  bool holds;
  std::optional<SmallDivisor> violation;
};

/// Checks |<k, omega>| >= kappa / ||k||_inf^tau for all 0 < ||k||_inf <= N_check.
DiophantineVerdict is_diophantine_up_to(const std::vector<double>& omega,
                                        const DiophantineParams& p,
                                        int64_t budget = 400'000'000);

struct ExponentEstimate {
  double gamma_hat;   // least-squares slope of -log m*(N) against log N
  double residual;    // rms residual of the fit
  bool divergent;     // an exact resonance was hit (reported as +inf)
  std::vector<std::pair<int64_t, double>> table;  // (N, m*(N))
};

ExponentEstimate uniform_exponent_estimate(const std::vector<double>& omega,
                                           const std::vector<int64_t>& n_list,
                                           int64_t budget = 400'000'000);

/// One stage of a Liouville construction: the next witness must satisfy
/// |q1 F1 + q2 F2| < bound(k) with bound either ||k||_inf^-N (power law),
/// e^{-|q1| - |q2|} (the super-Liouville variant), or a fixed value.
struct LiouvilleTarget {
  enum class Kind { PowerLaw, Exponential, Value } kind = Kind::PowerLaw;
  double exponent = 10.0;     // the N of ||k||^-N (power-law case)
  double value = 1e-12;       // fixed bound (value case)
  int64_t min_scale = 1;      // require ||k||_inf >= min_scale
  int64_t min_component = 1;  // require min(|q1|, |q2|) >= min_component
};

/// Builds a rationally independent pair (F1, F2) close to `seed` (within
/// `budget_1` on the first component; the second component is fixed to
/// seed[1]) whose continued-fraction tail realizes every scheduled target.
/// Witnesses are stored on the result.  Throws PrecisionError when a target
/// falls under the double-precision floor.
FrequencyVector build_liouville_pair(const std::vector<double>& seed,
                                     const std::vector<LiouvilleTarget>& schedule,
                                     double budget_1);

/// Picks (q1, q2) with |q1|, |q2| > A + Delta and
/// |q1 F1 + q2 F2| < eta * min(|q1|^-2s, |q2|^-2s), preferring stored
/// witnesses and falling back to convergent enumeration up to `budget`.
std::pair<int64_t, int64_t> resonance_pick(const FrequencyVector& pair, double A,
                                           double Delta, int s, double eta,
                                           int64_t budget = 2'000'000);

/// Re-evaluates every stored witness; returns the max |recorded - recomputed|.
double witness_recheck_error(const FrequencyVector& v);

}  // namespace kam::dio

#endif  // KAMLAB_DIOPHANTINE_HPP
