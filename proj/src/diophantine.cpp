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

#include "kam/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kam::dio {

namespace {

double dot(const std::vector<double>& omega, const std::vector<int64_t>& k) {
  double s = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) s += static_cast<double>(k[i]) * omega[i];
  return s;
}

void normalize_sign(std::vector<int64_t>& k) {
  for (int64_t v : k) {
    if (v > 0) return;
    if (v < 0) break;
  }
  for (int64_t& v : k) v = -v;
}

// Odometer over the non-pivot coordinates of the box [-N, N]^{d-1}; the
// pivot coordinate (largest |omega_i|) is solved by rounding.
struct BoxWalk {
  int d, pivot;
  int64_t N;
  std::vector<int64_t> k;  // full index, pivot slot managed by the caller
  std::vector<int> others;
  bool done = false;

  BoxWalk(int dim, int piv, int64_t n) : d(dim), pivot(piv), N(n), k(dim, 0) {
    for (int i = 0; i < d; ++i)
      if (i != pivot) others.push_back(i);
    for (int i : others) k[i] = -N;
  }
  void advance() {
    for (std::size_t j = 0; j < others.size(); ++j) {
      int i = others[j];
      if (k[i] < N) {
        ++k[i];
        return;
      }
      k[i] = -N;
    }
    done = true;
  }
};

int pivot_coordinate(const std::vector<double>& omega) {
  int piv = 0;
  for (std::size_t i = 1; i < omega.size(); ++i)
    if (std::abs(omega[i]) > std::abs(omega[piv])) piv = static_cast<int>(i);
  if (omega[piv] == 0.0) throw std::invalid_argument("frequency vector is zero");
  return piv;
}

void check_budget(int d, int64_t N, int64_t budget) {
  double points = 1.0;
  for (int i = 0; i < d - 1; ++i) points *= static_cast<double>(2 * N + 1);
  if (points > static_cast<double>(budget))
    throw BudgetError("lattice enumeration exceeds budget; lower N or raise the budget");
}

}  // namespace

SmallDivisor small_divisor_min(const std::vector<double>& omega, int64_t N, int64_t budget) {
  const int d = static_cast<int>(omega.size());
  if (d < 2) throw std::invalid_argument("small_divisor_min: need d >= 2");
  if (N < 1) throw std::invalid_argument("small_divisor_min: need N >= 1");
  check_budget(d, N, budget);
  const int piv = pivot_coordinate(omega);
  const double wp = omega[piv];

  SmallDivisor best;
  best.value = std::numeric_limits<double>::infinity();

  for (BoxWalk walk(d, piv, N); !walk.done; walk.advance()) {
    double s = 0.0;
    bool others_zero = true;
    for (int i = 0; i < d; ++i) {
      if (i == piv) continue;
      s += static_cast<double>(walk.k[i]) * omega[i];
      if (walk.k[i] != 0) others_zero = false;
    }
    double root = -s / wp;
    int64_t r = static_cast<int64_t>(std::llround(root));
    for (int64_t cand : {r - 1, r, r + 1, int64_t{1}, int64_t{-1}}) {
      if (cand < -N || cand > N) continue;
      if (others_zero && cand == 0) continue;
      walk.k[piv] = cand;
      double v = std::abs(dot(omega, walk.k));
      if (v < best.value) {
        best.value = v;
        best.k = walk.k;
      }
    }
    walk.k[piv] = 0;
  }
  normalize_sign(best.k);
  best.value = std::abs(dot(omega, best.k));
  return best;
}

DiophantineVerdict is_diophantine_up_to(const std::vector<double>& omega,
                                        const DiophantineParams& p, int64_t budget) {
  const int d = static_cast<int>(omega.size());
  if (d < 2) throw std::invalid_argument("is_diophantine_up_to: need d >= 2");
  check_budget(d, p.n_check, budget);
  const int piv = pivot_coordinate(omega);
  const double wp = omega[piv];
  const int64_t N = p.n_check;

  // keep the violation of smallest ||k||_inf so the witness is meaningful
  std::optional<SmallDivisor> best;
  int64_t best_norm = N + 1;
  for (BoxWalk walk(d, piv, N); !walk.done; walk.advance()) {
    double s = 0.0;
    int64_t others_max = 0;
    for (int i = 0; i < d; ++i) {
      if (i == piv) continue;
      s += static_cast<double>(walk.k[i]) * omega[i];
      others_max = std::max<int64_t>(others_max, std::llabs(walk.k[i]));
    }
    double root = -s / wp;
    int64_t r = static_cast<int64_t>(std::llround(root));
    int64_t clamped = std::clamp(r, -others_max, others_max);
    for (int64_t cand : {r - 1, r, r + 1, clamped, int64_t{1}, int64_t{-1}}) {
      if (cand < -N || cand > N) continue;
      if (others_max == 0 && cand == 0) continue;
      walk.k[piv] = cand;
      int64_t kn = std::max<int64_t>(others_max, std::llabs(cand));
      if (kn == 0 || kn >= best_norm) continue;
      double v = std::abs(dot(omega, walk.k));
      if (v < p.kappa / std::pow(static_cast<double>(kn), p.tau)) {
        SmallDivisor viol;
        viol.k = walk.k;
        normalize_sign(viol.k);
        viol.value = std::abs(dot(omega, viol.k));
        best = viol;
        best_norm = kn;
      }
    }
    walk.k[piv] = 0;
  }
  if (best) return {false, best};
  return {true, std::nullopt};
}

ExponentEstimate uniform_exponent_estimate(const std::vector<double>& omega,
                                           const std::vector<int64_t>& n_list,
                                           int64_t budget) {
  ExponentEstimate est;
  est.divergent = false;
  for (int64_t N : n_list) {
    SmallDivisor m = small_divisor_min(omega, N, budget);
    est.table.emplace_back(N, m.value);
    if (m.value == 0.0) est.divergent = true;
  }
  if (est.divergent) {
    est.gamma_hat = std::numeric_limits<double>::infinity();
    est.residual = 0.0;
    return est;
  }
  // least squares of  -log m*(N)  against  log N
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(est.table.size());
  for (const auto& [N, m] : est.table) {
    double x = std::log(static_cast<double>(N)), y = -std::log(m);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  est.gamma_hat = (denom == 0.0) ? 0.0 : (n * sxy - sx * sy) / denom;
  double b = (sy - est.gamma_hat * sx) / n;
  double rss = 0.0;
  for (const auto& [N, m] : est.table)
    rss += sqr(-std::log(m) - est.gamma_hat * std::log(static_cast<double>(N)) - b);
  est.residual = std::sqrt(rss / n);
  return est;
}

namespace {

struct Convergents {
  // p/q convergents of a continued fraction being built term by term
  double p_prev = 1.0, q_prev = 0.0;  // p_{-1}, q_{-1}
  double p = 0.0, q = 1.0;            // after a_0
  bool started = false;

  void push(double a) {
    if (!started) {
      p = a;
      q = 1.0;
      started = true;
      return;
    }
    double pn = a * p + p_prev;
    double qn = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
  }
};

double eval_cf(const std::vector<double>& a) {
  double x = a.back();
  for (int i = static_cast<int>(a.size()) - 2; i >= 0; --i) x = a[i] + 1.0 / x;
  return x;
}

double target_bound(const LiouvilleTarget& t, double q1, double q2) {
  double kn = std::max(std::abs(q1), std::abs(q2));
  switch (t.kind) {
    case LiouvilleTarget::Kind::Exponential:
      return std::exp(-(std::abs(q1) + std::abs(q2)));
    case LiouvilleTarget::Kind::Value:
      return t.value;
    default:
      return std::pow(kn, -t.exponent);
  }
}

}  // namespace

FrequencyVector build_liouville_pair(const std::vector<double>& seed,
                                     const std::vector<LiouvilleTarget>& schedule,
                                     double budget_1) {
  if (seed.size() != 2 || seed[1] == 0.0)
    throw std::invalid_argument("build_liouville_pair: seed must be 2d with seed[1] != 0");
  if (schedule.empty())
    throw std::invalid_argument("build_liouville_pair: empty schedule");
  const double F2 = seed[1];
  const double rho = seed[0] / F2;

  // Successive witness scales would have to grow like q^N, which dies in
  // double precision after one stage.  Instead one deep continued-fraction
  // gap is placed at the largest requested scale and every scheduled bound
  // is certified on that single near-resonance.
  int64_t scale_needed = 1, component_needed = 1;
  for (const auto& t : schedule) {
    scale_needed = std::max(scale_needed, t.min_scale);
    component_needed = std::max(component_needed, t.min_component);
  }

  for (double margin = 16.0; margin <= 16.0 * 64 * 64; margin *= 64.0) {
    // continued fraction of the seed ratio, deep enough that switching to
    // the Liouville tail moves F1 by less than budget_1
    std::vector<double> a;
    {
      double x = rho;
      Convergents probe;
      for (int i = 0; i < 40; ++i) {
        double ai = std::floor(x);
        if (i > 0 && ai < 1.0) ai = 1.0;
        probe.push(ai);
        if (probe.q > 4.0 * std::abs(F2) / std::max(budget_1, 1e-300) &&
            probe.q >= static_cast<double>(scale_needed))
          break;
        a.push_back(ai);
        if (probe.q > 1e7) break;  // double-precision CF digits exhausted
        double frac = x - ai;
        if (frac <= 1e-12) break;
        x = 1.0 / frac;
      }
      if (a.empty()) a.push_back(std::floor(rho));
    }

    Convergents cv;
    for (double ai : a) cv.push(ai);
    while (std::max(std::abs(cv.p), std::abs(cv.q)) < static_cast<double>(scale_needed) ||
           std::min(std::abs(cv.p), std::abs(cv.q)) < static_cast<double>(component_needed)) {
      a.push_back(1.0);
      cv.push(1.0);
    }

    const double q1 = cv.q, q2 = -cv.p;
    double required = std::numeric_limits<double>::infinity();
    for (const auto& t : schedule) required = std::min(required, target_bound(t, q1, q2));
    const double fp_floor = 8.0 * std::numeric_limits<double>::epsilon() *
                            (std::abs(q1 * rho * F2) + std::abs(q2 * F2) + 1.0);
    if (required < fp_floor)
      throw PrecisionError(
          "build_liouville_pair: requested bound below the double-precision floor; "
          "extended precision would be needed");

    // |q F1 - p F2| ~ |F2| / q_next; grow the gap until the bound holds
    double an = std::ceil(margin * std::abs(F2) / (required * cv.q));
    if (an < 2.0) an = 2.0;
    if (an * cv.q + cv.q_prev > 4.0e15)
      throw PrecisionError("build_liouville_pair: convergents exceed exact integer range");
    a.push_back(an);
    a.push_back(2.0);  // finite tail terminator

    double alpha = eval_cf(a);
    double F1 = alpha * F2;
    if (std::abs(F1 - seed[0]) > budget_1) continue;  // tail moved too far; retry

    std::vector<int64_t> k = {static_cast<int64_t>(q1), static_cast<int64_t>(q2)};
    double v = std::abs(static_cast<double>(k[0]) * F1 + static_cast<double>(k[1]) * F2);
    bool all_hold = true;
    for (const auto& t : schedule)
      if (!(v < target_bound(t, q1, q2))) { all_hold = false; break; }
    if (!all_hold) continue;  // rounding ate the margin; retry deeper

    FrequencyVector out;
    out.omega = {F1, F2};
    for (std::size_t stage = 0; stage < schedule.size(); ++stage) out.witnesses.push_back({k, v});
    return out;
  }
  throw PrecisionError("build_liouville_pair: could not realize the schedule in doubles");
}

std::pair<int64_t, int64_t> resonance_pick(const FrequencyVector& pair, double A,
                                           double Delta, int s, double eta, int64_t budget) {
  if (pair.dim() != 2) throw std::invalid_argument("resonance_pick: need a 2d pair");
  auto bound = [&](double q1, double q2) {
    return eta * std::min(std::pow(std::abs(q1), -2.0 * s), std::pow(std::abs(q2), -2.0 * s));
  };
  auto admissible = [&](double q1, double q2, double v) {
    return std::abs(q1) > A + Delta && std::abs(q2) > A + Delta && v < bound(q1, q2);
  };

  for (const auto& w : pair.witnesses) {
    double q1 = static_cast<double>(w.k[0]), q2 = static_cast<double>(w.k[1]);
    if (admissible(q1, q2, w.value)) return {w.k[0], w.k[1]};
  }

  // fall back to the convergents of F1/F2
  const double F1 = pair.omega[0], F2 = pair.omega[1];
  double x = F1 / F2;
  Convergents cv;
  for (int i = 0; i < 64; ++i) {
    double ai = std::floor(x);
    if (i > 0 && ai < 1.0) ai = 1.0;
    cv.push(ai);
    if (cv.q > static_cast<double>(budget)) break;
    if (cv.q >= 1.0 && cv.p != 0.0) {
      double q1 = cv.q, q2 = -cv.p;
      double v = std::abs(q1 * F1 + q2 * F2);
      if (admissible(q1, q2, v))
        return {static_cast<int64_t>(q1), static_cast<int64_t>(q2)};
    }
    double frac = x - ai;
    if (frac <= 1e-14) break;
    x = 1.0 / frac;
  }
  throw NotFoundError(
      "resonance_pick: no admissible (q1, q2); the pair is insufficiently Liouville "
      "for the requested (A, s, eta)");
}

double witness_recheck_error(const FrequencyVector& v) {
  double worst = 0.0;
  for (const auto& w : v.witnesses) {
    double val = std::abs(dot(v.omega, w.k));
    worst = std::max(worst, std::abs(val - w.value));
  }
  return worst;
}

}  // namespace kam::dio
