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

#ifndef KAMLAB_COUNTERTERM_HPP
#define KAMLAB_COUNTERTERM_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "kam/bnf.hpp"
#include "kam/centered.hpp"
#include "kam/series.hpp"

namespace kam::ct {

/// Even C^inf plateau profile: l = 1 on [-1/4, 1/4], l = 0 off (-1/2, 1/2),
/// 0 <= l <= 1, with two analytic derivatives.
class Mollifier {
 public:
  double operator()(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  /// Checks the plateau/support/range conditions on a uniform grid.
  bool check_profile(int grid = 1000) const;
};

/// Fourier cut-off  (P f)^(n) = f^(n) l(<n, omega> |n|^tau / kappa), n != 0;
/// the n = 0 stratum is removed.
Series cutoff_P(const Series& f, const std::vector<double>& omega, double kappa,
                double tau, const Mollifier& l);

/// u with <omega, d_phi u> = f - P(f) - M(f) and M(u) = 0:
/// u^(n) = f^(n) (1 - l_n) / (2 pi i <n, omega>).  Throws ResonanceError on an
/// exact resonance outside the full-cut region.
Series solve_L(const Series& f, const std::vector<double>& omega, double kappa,
               double tau, const Mollifier& l);

/// Split of a centered Hamiltonian by (r-c)-degree:
///   a + <B, r-c> + 1/2 <r-c, F (r-c)> + G,  G in O^3(r-c).
struct Decomposition {
  int d = 0;
  CenteredSeries a;                 // (r-c)-degree 0
  std::vector<CenteredSeries> B;    // d entries, degree-1 coefficients
  std::vector<CenteredSeries> F;    // d*d row-major, (phi, c) matrix entries
  CenteredSeries G;                 // O^3(r-c)
  std::vector<double> omega;
};

Decomposition decompose(const CenteredSeries& H, const std::vector<double>& omega);
CenteredSeries recompose(const Decomposition& dec);

/// The mean defect  M_f = M(B - F d_phi L a)  as d polynomials in c.
std::vector<Series> mean_defect(const Decomposition& dec, double kappa, double tau,
                                const Mollifier& l);

/// Element of the near-identity class
///   W(phi, r) = (phi + Phi(phi, c), r + R1(phi, c) + R2(phi, c)(r - c)).
struct EMap {
  int d = 0;
  std::vector<Series> Phi;  // d entries on the centered carrier, alpha == 0
  std::vector<Series> R1;   // d entries
  std::vector<Series> R2;   // d*d row-major
  static EMap identity(int d, int N, int q);
  bool is_identity() const;
  /// W o Z (apply Z first).
  static EMap compose(const EMap& W, const EMap& Z, const NormWeights& w);
  /// Pointwise image of (theta, r) at numeric c.
  void evaluate(std::span<const double> theta, std::span<const double> r,
                std::span<const double> c, std::span<double> phi_out,
                std::span<double> r_out) const;
  double deviation_norm(const NormWeights& w) const;  // [W - id] proxy
};

struct AdjustResult {
  std::vector<Series> Lambda;  // counter-term increment, polynomials in c
  Decomposition dec;           // adjusted decomposition (F unchanged)
  double X_norm;               // Neumann proxy ||X||
};

/// Lemma-8.4-style counter-term: Lambda = sum_m X^m Y zeroes the mean defect
/// of H + <Lambda, .> o W.  Throws ShiftTooLargeError when ||X|| > 1/2.
AdjustResult counter_term_adjust(const Decomposition& dec, const EMap& W,
                                 double kappa, double tau, const Mollifier& l,
                                 const NormWeights& w);

struct MachineConfig {
  double kappa = 0.05;
  double tau = 2.0;
  double h = 0.04;          // h_n = h 2^{-n-1}
  NormWeights w{0.10, 0.30};
  bnf::Workspace ws{16, 6};
  int n_max = 10;
  double tol = 1e-12;
  int flat_sign = +1;       // +1: P(B + F d_psi u0); -1: the literal variant
  double chop_rel = 1e-16;  // weighted relative chop per step, 0 disables
  double divisor_floor = 1e-13;
  int seed_order = 4;       // order of the normal-form preconjugation
};

struct StepResult {
  EMap Z;
  CenteredSeries H_next;      // conjugated Hamiltonian, class terms only
  Decomposition dec;          // its decomposition
  CenteredSeries flat;        // the new flat contribution g''
  CenteredSeries ledger_out;  // g o Z + g''
  Series gamma_inc;           // additive constant absorbed this step (c-polynomial)
};

/// One homological step (Lemma-8.3 shape): requires mean_defect ~ 0.
StepResult kam_step(const Decomposition& dec, const CenteredSeries& ledger,
                    double kappa, double tau, const Mollifier& l,
                    const NormWeights& w, int flat_sign = +1,
                    double divisor_floor = 1e-13);

struct StepRecord {
  int n;
  double h_n, rho_n, delta_n;
  double eps;          // pseudo-norm of H_n
  double zeta;         // Hessian + flat norm proxy
  double eta;          // [W - id] proxy
  double nu;           // step-bound proxy xi^-5 zeta^5 (eps + zeta eps + eta eps)
  double ledger_norm;
};

struct IterationTrace {
  std::vector<StepRecord> steps;
};

struct DivergenceError : std::runtime_error {
  IterationTrace trace;
  DivergenceError(const std::string& m, IterationTrace t)
      : std::runtime_error(m), trace(std::move(t)) {}
};

/// Model preconditioned for the machine: conjugated to its normal form
/// through the seed order, with the polynomial seed split off.
struct PreparedModel {
  Series H;                   // model after the normal-form conjugation
  Series H_raw;               // original model (torus verification flows this)
  bnf::NormalForm nf;         // seed normal form and generating series
  std::vector<double> omega0;
  MachineConfig cfg;
};

PreparedModel prepare_model(const Series& H, const MachineConfig& cfg);

struct CounterTermResult {
  std::vector<Series> Lambda;  // accumulated counter term, polynomials in c
  EMap W;                      // composed change of variables
  CenteredSeries ledger;       // accumulated flat part g
  Series Gamma;                // accumulated additive constant, polynomial in c
  IterationTrace trace;
  bool converged = false;
  int steps = 0;
  double final_eps = 0.0;
  std::vector<double> omega;
};

/// Prop-8.5-style loop: alternates counter_term_adjust and kam_step on the
/// h_n = h 2^{-n-1} schedule until the pseudo-norm drops under tol.
CounterTermResult kam_iterate(const PreparedModel& model, const std::vector<double>& omega);

/// Evaluates the accumulated counter term of `res` at numeric c, including
/// the -d_r N^q(c) part carried by the seed:  Lambda_total(c, omega).
std::vector<double> lambda_at(const PreparedModel& model, const CounterTermResult& res,
                              std::span<const double> c);

struct FrequencySolution {
  std::vector<double> omega;   // Omega(c)
  double residual;             // ||Omega + Lambda(c, Omega)||_inf
  int evaluations;
  CounterTermResult run;       // machine output at the solved omega
};

/// Newton iteration on omega with a frozen finite-difference Jacobian of
/// Lambda(c, .); seeded at d_r N^q(c).
FrequencySolution frequency_map_solve(const PreparedModel& model,
                                      std::span<const double> c,
                                      double fd_step = 1e-7, int max_newton = 30,
                                      double target = 1e-13);

struct TorusVerification {
  bool diophantine_certified = false;
  double ledger_norm = 0.0;
  double max_distance = 0.0;       // orbit distance to the embedded torus
  double max_energy_drift = 0.0;
  std::vector<double> rotation;    // least-squares rotation vector
  double rotation_gap = 0.0;       // ||rotation - Omega(c)||_inf
  bool verified = false;           // distance under tolerance
  double distance_tol = 1e-6;
};

/// Embeds the torus r = c through the composed change and integrates the
/// original Hamiltonian flow from `n_points` torus points for time T.
TorusVerification torus_extract_and_verify(const PreparedModel& model,
                                           const FrequencySolution& sol,
                                           std::span<const double> c, double T,
                                           double dt, int n_points = 10,
                                           double distance_tol = 1e-6,
                                           int64_t n_check = 1000);

struct FamilyPoint {
  double s;
  std::vector<double> c;
  std::vector<double> omega;
  double omega_gap;    // ||Omega - omega0||_inf
  double angle_gap;    // angle(Omega, omega0)
  bool solved;
  std::string error;
};

struct FamilyScan {
  std::vector<FamilyPoint> points;
  std::vector<double> mu_fit;  // polynomial fit of <Omega, omega0>/|omega0|^2
};

/// Solves the frequency map along c = s * gamma for each s in the grid.
FamilyScan degenerate_family(const PreparedModel& model, const std::vector<double>& gamma,
                             const std::vector<double>& s_grid, bool fit_mu = false,
                             int mu_degree = 3);

}  // namespace kam::ct

#endif  // KAMLAB_COUNTERTERM_HPP
