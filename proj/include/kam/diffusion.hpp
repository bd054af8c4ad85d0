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

#ifndef KAMLAB_DIFFUSION_HPP
#define KAMLAB_DIFFUSION_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kam/common.hpp"
#include "kam/diophantine.hpp"

namespace kam::drift {

/// Smooth monotone profile: 0 below -1, 1 above 0.
double zeta_profile(double x);
double zeta_profile_d1(double x);

/// Interlaced geometric cover of (0, inf): a_n = growth^n,
/// b_n = growth^{n+1+overlap}, indices n_lo..n_hi.
struct CoverSpec {
  int n_lo = 0, n_hi = 0;
  double growth = 0.0, overlap = 0.0;
  std::vector<double> a, b;      // outer intervals I_n, index shifted by -n_lo
  std::vector<double> ap, bp;    // inner intervals I'_n
  std::vector<double> u;         // margins u_n for the triples starting at 3n

  int index_of(int n) const { return n - n_lo; }
  bool has(int n) const { return n >= n_lo && n <= n_hi; }
  /// u_n is stored for triple indices n with 3n-2 .. 3n+3 inside the range.
  bool has_u(int n) const;
  double u_of(int n) const;
};

CoverSpec build_cover(int n_lo, int n_hi, double growth, double overlap = 0.5,
                      double inner_margin = 0.15);

/// The three plateau functions f_1, f_2, f_3 with Liouville plateau pairs.
struct BumpFunctions {
  CoverSpec cover;
  std::array<double, 3> omega;                 // omega_1..omega_3
  double eps = 0.0;
  int s = 0;
  double eta = 0.0;
  bool gevrey_schedule = false;
  struct Plateau {
    int n;                  // triple index
    std::array<double, 3> fbar;   // plateau constants for f_1, f_2, f_3 at stage n
    std::array<double, 3> bound;  // the (B_eta)-style bound that was enforced
  };
  std::vector<Plateau> plateaus;
  // Liouville pairs per interval family, keyed by triple index:
  // on I_{3n}: (F1, F2); on I_{3n+1}: (F1, F3); on I_{3n-1}: (F2, F3).
  std::vector<dio::FrequencyVector> pair12, pair13, pair23;

  double f(int i, double x) const;       // i in {1, 2, 3}
  double f_d1(int i, double x) const;
  /// active coordinate pair (i1, i2) and Liouville vector on interval m
  struct ActivePair {
    int i1, i2;
    const dio::FrequencyVector* freqs;
  };
  std::optional<ActivePair> active_pair(int m) const;
};

BumpFunctions build_bumps(const CoverSpec& cover, const std::array<double, 3>& omega,
                          double eps, int s, double eta, bool gevrey = false);

/// H_0(phi, r) = <omega0, r> + f_1(r_4) r_1 + f_2(r_4) r_2 + f_3(r_4) r_3.
struct DriftModel {
  std::array<double, 4> omega0;
  BumpFunctions bumps;
  double energy(std::span<const double> r) const;
  std::array<double, 4> gradient(std::span<const double> r) const;  // d_r H_0
};

DriftModel assemble_H0(BumpFunctions bumps, const std::array<double, 4>& omega0);

/// Exact symplectic kick from a(r_4) sin(2 pi (q1 psi_{i1} + q2 psi_{i2})).
struct Kick {
  int interval = 0;                     // index m of the interval I_m
  int i1 = 1, i2 = 2;                   // kicked action coordinates (1-based)
  int64_t q1 = 0, q2 = 0;
  double a_lo = 0, a_rise = 0, a_fall = 0, a_hi = 0;  // profile nodes
  double resonance_value = 0.0;         // |q1 F1 + q2 F2| on the plateau
  double cs_norm = 0.0;                 // grid C^s estimate of H0 o U - H0
  double profile(double x) const;       // the plateau function a
  double profile_d1(double x) const;
};

struct State {
  std::array<double, 4> phi;  // angles mod 1
  std::array<double, 4> r;
};

State apply_kick(const Kick& k, const State& p);
State apply_kick_inverse(const Kick& k, const State& p);
/// Jacobian determinant of the kick at p (finite differences).
double kick_jacobian_det(const Kick& k, const State& p, double h = 1e-6);

Kick build_kick(const DriftModel& model, int interval, double A, double Delta, int s,
                double eps, int grid = 4000);

/// Grid C^s estimate of H0 o U_1 o ... o U_m - H0 over the kicked region.
double composed_perturbation_norm(const DriftModel& model, const std::vector<Kick>& kicks,
                                  int s, int grid = 4000);

/// Exact flow of H0 o U_1 o ... o U_m at time t (no numerical integration).
State exact_flow(const DriftModel& model, const std::vector<Kick>& kicks, const State& p,
                 double t);

struct OrbitTrace {
  std::vector<double> t;
  std::vector<State> states;
  std::vector<double> energy;
  std::array<double, 4> sup_forward{};   // running max |r_i| over t > 0
  std::array<double, 4> sup_backward{};  // over t < 0
  double r4_drift = 0.0;
  double energy_drift = 0.0;
};

struct DiffusionVerdict {
  bool escaped_forward = false;
  bool escaped_backward = false;
  int i1 = 0, i2 = 0;          // realized coordinates (1-based)
  double t_hit_forward = 0.0;
  double t_hit_backward = 0.0;
  double T_used = 0.0;
};

struct DiffusionResult {
  OrbitTrace trace;
  DiffusionVerdict verdict;
};

/// Samples the exact orbit over [-T, T]; T <= 0 picks the sufficient time
/// from the resonance value of the active kick.
DiffusionResult diffusion_experiment(const DriftModel& model, const std::vector<Kick>& kicks,
                                     const State& p, double A, double T, double dt,
                                     int max_samples = 20000);

struct ScheduleStage {
  double eps;
  double A;
  int interval;
};

struct ScheduleReport {
  std::vector<Kick> kicks;
  double cumulative_norm = 0.0;
  std::vector<DiffusionVerdict> verdicts;
};

/// One kick per stage with per-stage norm < eps_k; verdicts run against the
/// cumulative kick list.
ScheduleReport gdelta_schedule(const DriftModel& model, const std::vector<ScheduleStage>& stages,
                               double Delta, int s, double dt = 0.0);

}  // namespace kam::drift

#endif  // KAMLAB_DIFFUSION_HPP
