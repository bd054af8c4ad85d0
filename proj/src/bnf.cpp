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

#include "kam/bnf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace kam::bnf {

namespace {

double dot_nk(const std::vector<double>& omega, std::span<const int16_t> n, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += omega[i] * n[i];
  return s;
}

int norm_inf16(std::span<const int16_t> n, int d) {
  int m = 0;
  for (int i = 0; i < d; ++i) m = std::max(m, std::abs(static_cast<int>(n[i])));
  return m;
}

/// Solves  <omega0, d_psi u> = -V(rhs)  with M(u) = 0 on the carrier of rhs.
Series homological_solve(const Series& rhs, const std::vector<double>& omega0,
                         double divisor_floor) {
  const int d = rhs.angle_dim(), dr = rhs.action_dim();
  Series u(d, dr, rhs.fourier_cutoff(), rhs.degree_cutoff());
  std::vector<int> n(d), alpha(dr);
  for (const auto& [k, z] : rhs.coeffs()) {
    std::span<const int16_t> nv(k.v.data(), static_cast<std::size_t>(d));
    int ninf = norm_inf16(nv, d);
    if (ninf == 0) continue;  // mean part stays with N / Gamma
    double div = dot_nk(omega0, nv, d);
    if (std::abs(div) < divisor_floor * ninf) {
      std::vector<int> witness(nv.begin(), nv.end());
      throw ResonanceError("homological_solve: small divisor under the floor", witness,
                           div);
    }
    for (int i = 0; i < d; ++i) n[i] = k.v[i];
    for (int i = 0; i < dr; ++i) alpha[i] = k.v[d + i];
    // u_hat = -rhs_hat / (2 pi i <n, omega0>)
    u.add_raw(n, alpha, -z / (Complex(0.0, kTwoPi) * div));
  }
  u.finalize();
  return u;
}

}  // namespace

std::vector<double> extract_omega0(const Series& H) {
  const int d = H.angle_dim();
  if (H.action_dim() != d) throw ValidationError("extract_omega0: expects a plain series");
  std::vector<double> omega(d, 0.0);
  std::vector<int> zn(d, 0), alpha(d, 0);
  for (const auto& [k, z] : H.coeffs()) {
    int deg = Series::degree_of(d, d, k);
    if (deg > 1) continue;
    bool mean_mode = true;
    for (int i = 0; i < d; ++i)
      if (k.v[i] != 0) { mean_mode = false; break; }
    if (!mean_mode)
      throw ValidationError("Hamiltonian has an angle-dependent part of degree <= 1 in r");
    if (deg == 0)
      throw ValidationError("Hamiltonian has a constant term");
    (void)z;
  }
  for (int i = 0; i < d; ++i) {
    alpha.assign(d, 0);
    alpha[i] = 1;
    omega[i] = H.coeff(zn, alpha).real();
  }
  return omega;
}

std::vector<double> mean_hessian(const Series& H) {
  const int d = H.angle_dim();
  std::vector<double> M(d * d, 0.0);
  std::vector<int> zn(d, 0), alpha(d, 0);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      alpha.assign(d, 0);
      alpha[i] += 1;
      alpha[j] += 1;
      double c = H.coeff(zn, alpha).real();
      double v = (i == j) ? 2.0 * c : c;
      M[i * d + j] = v;
      M[j * d + i] = v;
    }
  }
  return M;
}

NormalForm birkhoff_normal_form(const Series& H, int q, const Workspace& ws,
                                const NormWeights& w, double divisor_floor) {
  const int d = H.angle_dim();
  std::vector<double> omega0 = extract_omega0(H);

  const int qws = std::max(ws.q, q + 1);
  Series Hw = H.projected(ws.N, qws);
  Series f(d, d, ws.N, qws);
  NormalForm out;
  out.q = q;
  out.N = Series(d, d, ws.N, qws);

  for (int j = 1; j <= q; ++j) {
    Series comp = Hw;
    if (!f.empty()) {
      std::vector<std::pair<int, Series>> shift;
      for (int i = 0; i < d; ++i) shift.emplace_back(d + i, f.differentiated_angle(i));
      comp = compose_shift(Hw, shift, w);
    }
    Series stratum = comp.degree_slice(j, j);
    Series Nj = stratum.mean();
    out.N += Nj;
    if (j == 1) continue;  // degree-1 part is <omega0, r> by the precondition
    Series fj = homological_solve(stratum - Nj, omega0, divisor_floor);
    f += fj;
  }

  // final composition for the generating series actually kept
  Series comp = Hw;
  if (!f.empty()) {
    std::vector<std::pair<int, Series>> shift;
    for (int i = 0; i < d; ++i) shift.emplace_back(d + i, f.differentiated_angle(i));
    comp = compose_shift(Hw, shift, w);
  }
  out.f = f;
  out.beyond = comp.degree_slice(q + 1, -1);
  out.residual_norm = out.beyond.majorant_norm(w);
  // everything below degree q+1 must coincide with N; fold the tiny mismatch
  // (roundoff of the homological cancellations) into the residual as well
  Series low = comp.degree_slice(0, q) - out.N;
  out.residual_norm += low.majorant_norm(w);
  return out;
}

CenteredNormalForm centered_normal_form(const Series& H, int q, const Workspace& ws,
                                        const NormWeights& w, double divisor_floor) {
  const int d = H.angle_dim();
  std::vector<double> omega0 = extract_omega0(H);

  const int qws = std::max(ws.q, q + 1);
  CenteredSeries Hc = recenter(H.projected(ws.N, qws));
  CenteredSeries f(d, ws.N, qws, qws);

  auto conjugated = [&](const CenteredSeries& gen) {
    if (gen.data().empty()) return Hc;
    std::vector<std::pair<int, Series>> shift;
    for (int i = 0; i < d; ++i) shift.emplace_back(d + i, gen.data().differentiated_angle(i));
    return CenteredSeries(compose_shift(Hc.data(), shift, w), qws);
  };

  for (int j = 2; j <= q; ++j) {
    CenteredSeries comp = conjugated(f);
    Series stratum = comp.data().degree_slice(j, j);
    // only the affine-in-(r-c) portion enters the homological equation
    CenteredSeries strat(stratum, qws);
    Series affine = strat.rc_slice(0, 1).data();
    Series mean_part = affine.mean();
    Series fj = homological_solve(affine - mean_part, omega0, divisor_floor);
    f.data() += fj;
  }

  CenteredSeries final_comp = conjugated(f);
  CenteredNormalForm out;
  out.q = q;
  out.f = f;
  out.F = CenteredSeries(final_comp.data(), qws).rc_slice(2, -1);

  // Gamma and Omega are the angle means of the affine strata through degree q
  CenteredSeries affine_mean(final_comp.data().degree_slice(0, q).mean(), qws);
  out.Gamma = c_polynomial_to_plain(affine_mean.rc_slice(0, 0));
  out.Omega.reserve(d);
  for (int i = 0; i < d; ++i) {
    // strip one power of (r-c)_i from the linear stratum
    Series lin = affine_mean.rc_slice(1, 1).data().differentiated_action(i)
                     .action_degree_slice(0, d, 0, 0);
    out.Omega.push_back(c_polynomial_to_plain(CenteredSeries(lin, qws)));
  }
  return out;
}

Series conjugate_by_generating(const Series& H, const Series& S, const Workspace& ws,
                               const NormWeights& w) {
  const int d = H.angle_dim();
  Series Hw = H.projected(ws.N, ws.q);
  Series Sw = S.projected(ws.N, ws.q);

  // action shift: K(psi, r) = H(psi, r + d_psi S(psi, r))
  std::vector<std::pair<int, Series>> act;
  for (int i = 0; i < d; ++i) act.emplace_back(d + i, Sw.differentiated_angle(i));
  Series K = compose_shift(Hw, act, w);

  // angle inversion: psi = phi + W(phi, r) inverts phi = psi + d_r S(psi, r)
  std::vector<std::pair<int, Series>> ang;
  for (int i = 0; i < d; ++i) ang.emplace_back(i, Sw.differentiated_action(i));
  std::vector<Series> W = invert_near_identity(ang, w);
  std::vector<std::pair<int, Series>> sub;
  for (int i = 0; i < d; ++i) sub.emplace_back(i, W[i]);
  return compose_shift(K, sub, w);
}

GeneratingMapPoint evaluate_generating_map(const Series& S, std::span<const double> phi,
                                           std::span<const double> r, double tol) {
  const int d = S.angle_dim();
  std::vector<Series> dSr, dSpsi;
  dSr.reserve(d);
  dSpsi.reserve(d);
  for (int i = 0; i < d; ++i) {
    dSr.push_back(S.differentiated_action(i));
    dSpsi.push_back(S.differentiated_angle(i));
  }
  std::vector<double> psi(phi.begin(), phi.end());
  std::vector<double> rv(r.begin(), r.end());
  for (int it = 0; it < 200; ++it) {
    double delta = 0.0;
    std::vector<double> next(d);
    for (int i = 0; i < d; ++i) {
      next[i] = phi[i] - dSr[i].evaluate(psi, rv);
      delta = std::max(delta, std::abs(next[i] - psi[i]));
    }
    psi = std::move(next);
    if (delta < tol) break;
  }
  GeneratingMapPoint out;
  out.phi_out = psi;
  out.r_out.resize(d);
  for (int i = 0; i < d; ++i) out.r_out[i] = rv[i] + dSpsi[i].evaluate(psi, rv);
  return out;
}

InvarianceReport bnf_invariance_check(const Series& H, const Series& Zgen, int q,
                                      const Workspace& ws, const NormWeights& w,
                                      double divisor_floor) {
  NormalForm base = birkhoff_normal_form(H, q, ws, w, divisor_floor);
  Series HZ = conjugate_by_generating(H, Zgen, ws, w);
  NormalForm moved = birkhoff_normal_form(HZ, q, ws, w, divisor_floor);
  Series diff = moved.N - base.N;
  return {diff.degree_slice(0, q).max_abs_coeff()};
}

namespace {

// monomial enumeration of an angle-free polynomial: map alpha -> row
std::map<std::vector<int>, int> monomial_rows(const Series& P, int d) {
  std::map<std::vector<int>, int> rows;
  for (const auto& [k, z] : P.coeffs()) {
    (void)z;
    std::vector<int> alpha(d);
    for (int i = 0; i < d; ++i) alpha[i] = k.v[d + i];
    rows.emplace(alpha, 0);
  }
  int idx = 0;
  for (auto& [a, r] : rows) r = idx++;
  return rows;
}

std::vector<Series> gradient(const Series& N, int d) {
  std::vector<Series> g;
  g.reserve(d);
  for (int i = 0; i < d; ++i) g.push_back(N.differentiated_action(i));
  return g;
}

}  // namespace

DegeneracyReport degeneracy_detect(const Series& N, double tol) {
  const int d = N.angle_dim();
  auto grad = gradient(N, d);
  Series all = grad[0];
  for (int i = 1; i < d; ++i) all += grad[i];  // union of supports
  auto rows = monomial_rows(all, d);
  if (rows.empty()) throw ValidationError("degeneracy_detect: zero gradient");

  Eigen::MatrixXd M(static_cast<int>(rows.size()), d);
  M.setZero();
  std::vector<int> zn(d, 0);
  for (const auto& [alpha, row] : rows)
    for (int i = 0; i < d; ++i) M(row, i) = grad[i].coeff(zn, alpha).real();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  DegeneracyReport rep;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol * std::max(1.0, smax)) ++rep.j;
  rep.gradient_rank = d - rep.j;
  for (int i = d - rep.j; i < d; ++i) {
    std::vector<double> g(d);
    for (int r = 0; r < d; ++r) g[r] = svd.matrixV()(r, i);
    rep.gamma.push_back(std::move(g));
  }
  return rep;
}

TransversalityRecord transversality(const Series& N, const std::vector<int>& k, int p,
                                    int grid, uint64_t seed) {
  const int d = N.angle_dim();
  double kn = 0.0;
  for (int v : k) kn += static_cast<double>(v) * v;
  kn = std::sqrt(kn);
  if (kn == 0.0) throw std::invalid_argument("transversality: k must be nonzero");

  // f_k(r) = <k/|k|, dN(r)>
  Series fk(d, d, N.fourier_cutoff(), N.degree_cutoff());
  auto grad = gradient(N, d);
  for (int i = 0; i < d; ++i) fk += (k[i] / kn) * grad[i];

  // d_t^j f_k(t u)|_0 = j! * [f_k]_j(u)
  std::vector<Series> strata;
  for (int j = 0; j <= p; ++j) strata.push_back(fk.degree_slice(j, j));
  std::vector<double> zero_phi(d, 0.0);
  auto objective = [&](const std::vector<double>& u) {
    double best = 0.0;
    double fact = 1.0;
    for (int j = 0; j <= p; ++j) {
      if (j > 0) fact *= j;
      best = std::max(best, fact * std::abs(strata[j].evaluate(zero_phi, u)));
    }
    return best;
  };

  std::vector<std::vector<double>> candidates;
  if (d == 2) {
    for (int i = 0; i < grid; ++i) {
      double th = kTwoPi * i / grid;
      candidates.push_back({std::cos(th), std::sin(th)});
    }
  } else if (d == 3) {
    const double ga = kTwoPi * (1.0 - 1.0 / 1.6180339887498949);
    for (int i = 0; i < grid; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / grid;
      double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      candidates.push_back({rad * std::cos(ga * i), rad * std::sin(ga * i), z});
    }
  } else {
    Rng rng(seed);
    std::normal_distribution<double> g;
    for (int i = 0; i < grid; ++i) {
      std::vector<double> u(d);
      double nn = 0.0;
      for (auto& x : u) { x = g(rng); nn += x * x; }
      nn = std::sqrt(nn);
      for (auto& x : u) x /= nn;
      candidates.push_back(std::move(u));
    }
  }
  for (int i = 0; i < d; ++i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    candidates.push_back(e);
  }
  std::vector<double> kn_dir(d);
  for (int i = 0; i < d; ++i) kn_dir[i] = k[i] / kn;
  candidates.push_back(kn_dir);

  std::vector<double> best_u;
  double best = -1.0;
  for (const auto& u : candidates) {
    double v = objective(u);
    if (v > best) { best = v; best_u = u; }
  }

  // local refinement: projected coordinate ascent with shrinking step
  double step = 2.0 / std::max(grid, 8);
  for (int iter = 0; iter < 60; ++iter) {
    bool improved = false;
    for (int i = 0; i < d; ++i) {
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> u = best_u;
        u[i] += sgn * step;
        double nn = 0.0;
        for (double x : u) nn += x * x;
        nn = std::sqrt(nn);
        for (double& x : u) x /= nn;
        double v = objective(u);
        if (v > best) { best = v; best_u = u; improved = true; }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1e-10) break;
  }

  TransversalityRecord rec;
  rec.k = k;
  rec.u = best_u;
  rec.sigma = best;
  rec.p = p;
  return rec;
}

MuExtract russmann_mu_extract(const Series& N, int q, double tol) {
  const int d = N.angle_dim();
  std::vector<double> omega0 = extract_omega0(N);
  double wn2 = std::inner_product(omega0.begin(), omega0.end(), omega0.begin(), 0.0);
  if (wn2 == 0.0) throw std::invalid_argument("russmann_mu_extract: omega0 == 0");

  // powers of <c, omega0> as angle-free polynomials
  Series u(d, d, 0, q);
  {
    std::vector<int> zn(d, 0), alpha(d, 0);
    for (int i = 0; i < d; ++i) {
      alpha.assign(d, 0);
      alpha[i] = 1;
      u.set(zn, alpha, omega0[i]);
    }
  }
  std::vector<Series> upow;
  upow.push_back(Series::constant(d, 0, q, 1.0));
  for (int m = 1; m < q; ++m) upow.push_back(mul(upow.back(), u, 0, q));

  auto grad = gradient(N, d);
  Series all = grad[0];
  for (int i = 1; i < d; ++i) all += grad[i];
  for (int m = 0; m < q; ++m) all += upow[m];
  auto rows = monomial_rows(all, d);

  const int R = static_cast<int>(rows.size());
  Eigen::MatrixXd A(R * d, q);
  Eigen::VectorXd b(R * d);
  A.setZero();
  b.setZero();
  for (const auto& [alpha, row] : rows) {
    for (int i = 0; i < d; ++i) {
      b(row * d + i) = grad[i].coeff(std::vector<int>(d, 0), alpha).real();
      for (int m = 0; m < q; ++m)
        A(row * d + i, m) = omega0[i] * upow[m].coeff(std::vector<int>(d, 0), alpha).real();
    }
  }
  Eigen::VectorXd mu = A.colPivHouseholderQr().solve(b);
  double residual = (A * mu - b).lpNorm<Eigen::Infinity>();
  if (residual > tol)
    throw MuExtractError("russmann_mu_extract: gradient is not parallel to omega0 "
                         "(not (d-1)-degenerate)", residual);
  MuExtract out;
  out.mu.assign(mu.data(), mu.data() + mu.size());
  out.residual = residual;
  return out;
}

DensityResult diophantine_density(const std::vector<Series>& Omega, double eta,
                                  const dio::DiophantineParams& p, int samples,
                                  uint64_t seed) {
  if (samples < 1000)
    throw std::invalid_argument("diophantine_density: need at least 10^3 samples");
  const int d = static_cast<int>(Omega.size());
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> zero_phi(d, 0.0);
  int bad = 0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> c(d);
    double nn;
    do {
      nn = 0.0;
      for (auto& x : c) { x = unif(rng); nn += x * x; }
    } while (nn > 1.0);
    for (auto& x : c) x *= eta;
    std::vector<double> w(d);
    for (int i = 0; i < d; ++i) w[i] = Omega[i].evaluate(zero_phi, c);
    if (!dio::is_diophantine_up_to(w, p).holds) ++bad;
  }
  double f = static_cast<double>(bad) / samples;
  return {f, 1.96 * std::sqrt(std::max(f * (1.0 - f), 1.0 / samples) / samples),
          samples};
}

LiouvilleTruncatedBnf liouville_truncated_bnf(const Series& H, int64_t Qn, double gamma,
                                              int q, const Workspace& ws,
                                              const NormWeights& w, double rho_shrunk) {
  std::vector<double> omega0 = extract_omega0(H);
  auto sd = dio::small_divisor_min(omega0, Qn);
  double floor_gamma = std::pow(static_cast<double>(Qn), -gamma);
  if (sd.value < floor_gamma) {
    std::vector<int> witness(sd.k.begin(), sd.k.end());
    throw ResonanceError("liouville_truncated_bnf: divisor floor violated on |k| <= Qn",
                         witness, sd.value);
  }

  int64_t cut = std::max<int64_t>(1, Qn / q);
  Series Htr = H.truncated_fourier(static_cast<int>(cut));
  Series tail = H - Htr;
  LiouvilleTruncatedBnf out;
  out.fourier_cut = cut;
  out.remainder_norm = tail.majorant_norm(NormWeights(rho_shrunk, w.delta));
  out.nf = birkhoff_normal_form(Htr, q, ws, w);

  auto M0 = mean_hessian(H);
  auto NH = mean_hessian(out.nf.N);
  double gap = 0.0;
  for (std::size_t i = 0; i < M0.size(); ++i) gap = std::max(gap, std::abs(M0[i] - NH[i]));
  out.hessian_gap = gap;
  return out;
}

}  // namespace kam::bnf
