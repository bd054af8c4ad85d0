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

#ifndef KAMLAB_BNF_HPP
#define KAMLAB_BNF_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "kam/centered.hpp"
#include "kam/diophantine.hpp"
#include "kam/series.hpp"

namespace kam::bnf {

/// Workspace cutoffs fixed per pipeline run; products and compositions
/// project onto them.
struct Workspace {
  int N;
  int q;
};

/// Reads omega0 off the degree-1 part of H; throws ValidationError when the
/// linear part is angle-dependent or a constant term is present.
std::vector<double> extract_omega0(const Series& H);

/// Mean Hessian  M_0 = d^2/dr^2 of M(H)  at r = 0, row-major d x d.
std::vector<double> mean_hessian(const Series& H);

/// Degree-by-degree Birkhoff normal form to order q:
///   H(psi, r + d_psi f(psi, r)) = N(r) + O^{q+1}(r),  M(f) = 0.
struct NormalForm {
  Series N;        // angle-free polynomial in r, degree <= q
  Series f;        // mean-zero generating series in O^2(r)
  Series beyond;   // the O^{q+1}(r) part of H o Z_f within the workspace
  int q = 0;
  double residual_norm = 0.0;  // majorant of `beyond`
};

NormalForm birkhoff_normal_form(const Series& H, int q, const Workspace& ws,
                                const NormWeights& w, double divisor_floor = 1e-13);

/// Two-variable normal form:
///   H(psi, r + d_psi f) = Gamma(c) + <Omega(c), r - c> + O^2(r - c).
struct CenteredNormalForm {
  Series Gamma;               // polynomial in c
  std::vector<Series> Omega;  // d polynomials in c, Omega(0) = omega0
  CenteredSeries f;           // generating series, mean-zero gauge
  CenteredSeries F;           // the O^2(r - c) remainder of the conjugated H
  int q = 0;
};

CenteredNormalForm centered_normal_form(const Series& H, int q, const Workspace& ws,
                                        const NormWeights& w, double divisor_floor = 1e-13);

/// H o Z for the exact symplectic Z generated by <psi, r> + S(psi, r),
/// S in O^2(r):  phi = psi + d_r S(psi, r), s = r + d_psi S(psi, r).
Series conjugate_by_generating(const Series& H, const Series& S, const Workspace& ws,
                               const NormWeights& w);

/// Pointwise evaluation of the same Z (fixed-point solve in psi).
struct GeneratingMapPoint {
  std::vector<double> phi_out;
  std::vector<double> r_out;
};
GeneratingMapPoint evaluate_generating_map(const Series& S, std::span<const double> phi,
                                           std::span<const double> r, double tol = 1e-14);

struct InvarianceReport {
  double max_coeff_deviation;  // between N_{HoZ} and N_H through degree q
};
InvarianceReport bnf_invariance_check(const Series& H, const Series& Zgen, int q,
                                      const Workspace& ws, const NormWeights& w,
                                      double divisor_floor = 1e-13);

struct TransversalityRecord {
  std::vector<int> k;
  std::vector<double> u;  // maximizing unit direction
  double sigma;           // attained max_{0<=j<=p} |d_t^j f_k(t u)|_{t=0}
  int p;
};

TransversalityRecord transversality(const Series& N, const std::vector<int>& k, int p,
                                    int grid = 512, uint64_t seed = 12345);

struct DegeneracyReport {
  int j = 0;                                   // degeneracy index
  std::vector<std::vector<double>> gamma;      // orthonormal null directions
  int gradient_rank = 0;                       // rank of the coefficient matrix
  std::vector<TransversalityRecord> transversality;
  std::optional<std::vector<double>> mu;       // Ruessmann profile, when extracted
  std::optional<std::vector<double>> M0;       // mean Hessian, row-major, when known
};

DegeneracyReport degeneracy_detect(const Series& N, double tol);

struct MuExtractError : std::runtime_error {
  double residual;
  MuExtractError(const std::string& m, double r) : std::runtime_error(m), residual(r) {}
};

struct MuExtract {
  std::vector<double> mu;  // mu(t) = mu[0] + mu[1] t + ...
  double residual;
};

/// Fits mu so that  d_r N(c) = mu(<c, omega0>) omega0  degree by degree;
/// throws MuExtractError when the residual exceeds tol.
MuExtract russmann_mu_extract(const Series& N, int q, double tol);

struct DensityResult {
  double fraction;    // Monte-Carlo share of non-Diophantine Omega(c)
  double half_width;  // 95% confidence half width
  int samples;
};

DensityResult diophantine_density(const std::vector<Series>& Omega, double eta,
                                  const dio::DiophantineParams& p, int samples,
                                  uint64_t seed);

struct LiouvilleTruncatedBnf {
  NormalForm nf;          // of the |k| <= Qn/q truncation
  double remainder_norm;  // majorant of the discarded tail at the shrunk width
  double hessian_gap;     // max-abs entry of d^2 N(0) - M_0
  int64_t fourier_cut;    // the applied cut Qn/q
};

/// Lemma-9.1-style pipeline: checks the small-divisor floor over |k| <= Qn,
/// truncates, and runs the normal form on the truncation.
LiouvilleTruncatedBnf liouville_truncated_bnf(const Series& H, int64_t Qn, double gamma,
                                              int q, const Workspace& ws,
                                              const NormWeights& w, double rho_shrunk);

}  // namespace kam::bnf

#endif  // KAMLAB_BNF_HPP
