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

#include "kam/counterterm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include <Eigen/Dense>

#include "kam/integrator.hpp"

namespace kam::ct {

double Mollifier::operator()(double x) const {
  double ax = std::abs(x);
  if (ax <= 0.25) return 1.0;
  if (ax >= 0.5) return 0.0;
  return smooth_step((0.5 - ax) * 4.0);
}

double Mollifier::d1(double x) const {
  double ax = std::abs(x);
  if (ax <= 0.25 || ax >= 0.5) return 0.0;
  double sgn = x > 0.0 ? 1.0 : -1.0;
  return smooth_step_d1((0.5 - ax) * 4.0) * (-4.0) * sgn;
}

double Mollifier::d2(double x) const {
  double ax = std::abs(x);
  if (ax <= 0.25 || ax >= 0.5) return 0.0;
  return smooth_step_d2((0.5 - ax) * 4.0) * 16.0;
}

bool Mollifier::check_profile(int grid) const {
  const Mollifier& l = *this;
  for (int i = 0; i <= grid; ++i) {
    double x = -0.75 + 1.5 * i / grid;
    double v = l(x);
    if (v < 0.0 || v > 1.0) return false;
    if (std::abs(x) <= 0.25 && v != 1.0) return false;
    if (std::abs(x) >= 0.5 && v != 0.0) return false;
    if (std::abs(l(x) - l(-x)) != 0.0) return false;
  }
  return true;
}

// ---------- cut-off and the inverse of the derivation -----------------

namespace {

int norm_inf_key(const Series::Key& k, int d) {
  int m = 0;
  for (int i = 0; i < d; ++i) m = std::max(m, std::abs(static_cast<int>(k.v[i])));
  return m;
}

double dot_key(const std::vector<double>& omega, const Series::Key& k, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += omega[i] * k.v[i];
  return s;
}

std::vector<int> key_n_vec(const Series::Key& k, int d) {
  return std::vector<int>(k.v.begin(), k.v.begin() + d);
}

}  // namespace

Series cutoff_P(const Series& f, const std::vector<double>& omega, double kappa,
                double tau, const Mollifier& l) {
  const int d = f.angle_dim(), dr = f.action_dim();
  Series out(d, dr, f.fourier_cutoff(), f.degree_cutoff());
  std::vector<int> n(d), alpha(dr);
  for (const auto& [k, z] : f.coeffs()) {
    int ninf = norm_inf_key(k, d);
    if (ninf == 0) continue;  // sum over n != 0 only
    double arg = dot_key(omega, k, d) * std::pow(static_cast<double>(ninf), tau) / kappa;
    double ln = l(arg);
    if (ln == 0.0) continue;
    for (int i = 0; i < d; ++i) n[i] = k.v[i];
    for (int i = 0; i < dr; ++i) alpha[i] = k.v[d + i];
    out.add_raw(n, alpha, z * ln);
  }
  out.finalize();
  return out;
}

Series solve_L(const Series& f, const std::vector<double>& omega, double kappa,
               double tau, const Mollifier& l) {
  const int d = f.angle_dim(), dr = f.action_dim();
  Series out(d, dr, f.fourier_cutoff(), f.degree_cutoff());
  std::vector<int> n(d), alpha(dr);
  for (const auto& [k, z] : f.coeffs()) {
    int ninf = norm_inf_key(k, d);
    if (ninf == 0) continue;  // M(u) = 0
    double div = dot_key(omega, k, d);
    double arg = div * std::pow(static_cast<double>(ninf), tau) / kappa;
    double ln = l(arg);
    if (ln == 1.0) continue;  // fully cut mode, nothing to invert
    if (div == 0.0)
      throw ResonanceError("solve_L: exact resonance outside the cut plateau",
                           key_n_vec(k, d), 0.0);
    for (int i = 0; i < d; ++i) n[i] = k.v[i];
    for (int i = 0; i < dr; ++i) alpha[i] = k.v[d + i];
    out.add_raw(n, alpha, z * (1.0 - ln) / (Complex(0.0, kTwoPi) * div));
  }
  out.finalize();
  return out;
}

// ---------- centered carrier helpers ----------------------------------

namespace {

Series unit_rc(int d, int i, int N, int q) {
  Series s(d, 2 * d, N, q);
  std::vector<int> zn(d, 0), alpha(2 * d, 0);
  alpha[i] = 1;
  s.set(zn, alpha, 1.0);
  return s;
}

Series unit_c(int d, int i, int N, int q) {
  Series s(d, 2 * d, N, q);
  std::vector<int> zn(d, 0), alpha(2 * d, 0);
  alpha[d + i] = 1;
  s.set(zn, alpha, 1.0);
  return s;
}

/// Maps a plain polynomial in r onto the c block of the centered carrier.
Series plain_poly_to_c(const Series& p, int N, int q) {
  const int d = p.angle_dim();
  Series out(d, 2 * d, N, q);
  std::vector<int> n(d), alpha(2 * d, 0);
  for (const auto& [k, z] : p.coeffs()) {
    for (int i = 0; i < d; ++i) {
      n[i] = k.v[i];
      alpha[d + i] = k.v[d + i];
    }
    out.add_raw(n, alpha, z);
  }
  out.finalize();
  return out;
}

Series grad_phi(const Series& f, int i) { return f.differentiated_angle(i); }

/// (F v)_k = sum_l F_kl v_l on the centered carrier.
std::vector<Series> mat_vec(const std::vector<Series>& F, const std::vector<Series>& v,
                            int d, int N, int q) {
  std::vector<Series> out;
  out.reserve(d);
  for (int k = 0; k < d; ++k) {
    Series acc(d, 2 * d, N, q);
    for (int l = 0; l < d; ++l) acc += mul(F[k * d + l], v[l], N, q);
    out.push_back(std::move(acc));
  }
  return out;
}

}  // namespace

Decomposition decompose(const CenteredSeries& H, const std::vector<double>& omega) {
  const int d = H.dim();
  const int N = H.data().fourier_cutoff(), q = H.q_tot();
  Decomposition dec;
  dec.d = d;
  dec.omega = omega;
  dec.a = H.rc_slice(0, 0);
  CenteredSeries lin = H.rc_slice(1, 1);
  CenteredSeries quad = H.rc_slice(2, 2);
  dec.B.reserve(d);
  for (int i = 0; i < d; ++i)
    dec.B.emplace_back(lin.data().differentiated_action(i), H.q_r());
  dec.F.reserve(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      dec.F.emplace_back(
          quad.data().differentiated_action(i).differentiated_action(j), H.q_r());
  dec.G = H.rc_slice(3, -1);
  (void)N;
  (void)q;
  return dec;
}

CenteredSeries recompose(const Decomposition& dec) {
  const int d = dec.d;
  const Series& a = dec.a.data();
  const int N = a.fourier_cutoff(), q = a.degree_cutoff();
  Series acc = a;
  for (int i = 0; i < d; ++i) acc += mul(dec.B[i].data(), unit_rc(d, i, N, q), N, q);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Series m = mul(dec.F[i * d + j].data(), unit_rc(d, i, N, q), N, q);
      acc += 0.5 * mul(m, unit_rc(d, j, N, q), N, q);
    }
  acc += dec.G.data();
  return CenteredSeries(acc, dec.a.q_r());
}

std::vector<Series> mean_defect(const Decomposition& dec, double kappa, double tau,
                                const Mollifier& l) {
  const int d = dec.d;
  const Series& a = dec.a.data();
  const int N = a.fourier_cutoff(), q = a.degree_cutoff();
  Series La = solve_L(a, dec.omega, kappa, tau, l);
  std::vector<Series> dLa;
  dLa.reserve(d);
  for (int i = 0; i < d; ++i) dLa.push_back(grad_phi(La, i));
  std::vector<Series> FdLa;
  {
    std::vector<Series> Fm;
    Fm.reserve(d * d);
    for (const auto& f : dec.F) Fm.push_back(f.data());
    FdLa = mat_vec(Fm, dLa, d, N, q);
  }
  std::vector<Series> out;
  out.reserve(d);
  for (int k = 0; k < d; ++k) {
    Series mk = (dec.B[k].data() - FdLa[k]).mean();
    out.push_back(c_polynomial_to_plain(CenteredSeries(mk, dec.a.q_r())));
  }
  return out;
}

// ---------- the E class ------------------------------------------------

EMap EMap::identity(int d, int N, int q) {
  EMap e;
  e.d = d;
  e.Phi.assign(d, Series(d, 2 * d, N, q));
  e.R1.assign(d, Series(d, 2 * d, N, q));
  e.R2.assign(d * d, Series(d, 2 * d, N, q));
  return e;
}

bool EMap::is_identity() const {
  for (const auto& s : Phi)
    if (!s.empty()) return false;
  for (const auto& s : R1)
    if (!s.empty()) return false;
  for (const auto& s : R2)
    if (!s.empty()) return false;
  return true;
}

EMap EMap::compose(const EMap& W, const EMap& Z, const NormWeights& w) {
  const int d = W.d;
  const int N = W.Phi[0].fourier_cutoff(), q = W.Phi[0].degree_cutoff();
  EMap out = EMap::identity(d, N, q);

  std::vector<std::pair<int, Series>> ang;
  for (int i = 0; i < d; ++i) ang.emplace_back(i, Z.Phi[i]);
  auto through = [&](const Series& f) {
    if (f.empty()) return f;
    return compose_shift(f, ang, w);
  };

  for (int k = 0; k < d; ++k) out.Phi[k] = Z.Phi[k] + through(W.Phi[k]);
  std::vector<Series> R2W(d * d);
  for (int i = 0; i < d * d; ++i) R2W[i] = through(W.R2[i]);
  for (int k = 0; k < d; ++k) {
    Series r1 = Z.R1[k] + through(W.R1[k]);
    for (int j = 0; j < d; ++j) r1 += mul(R2W[k * d + j], Z.R1[j], N, q);
    out.R1[k] = std::move(r1);
    for (int j = 0; j < d; ++j) {
      Series r2 = Z.R2[k * d + j] + R2W[k * d + j];
      for (int l = 0; l < d; ++l) r2 += mul(R2W[k * d + l], Z.R2[l * d + j], N, q);
      out.R2[k * d + j] = std::move(r2);
    }
  }
  return out;
}

void EMap::evaluate(std::span<const double> theta, std::span<const double> r,
                    std::span<const double> c, std::span<double> phi_out,
                    std::span<double> r_out) const {
  std::vector<double> x(2 * d, 0.0);
  for (int i = 0; i < d; ++i) {
    x[i] = r[i] - c[i];
    x[d + i] = c[i];
  }
  for (int k = 0; k < d; ++k) {
    phi_out[k] = theta[k] + Phi[k].evaluate(theta, x);
    double v = r[k] + R1[k].evaluate(theta, x);
    for (int j = 0; j < d; ++j) v += R2[k * d + j].evaluate(theta, x) * (r[j] - c[j]);
    r_out[k] = v;
  }
}

double EMap::deviation_norm(const NormWeights& w) const {
  double m = 0.0;
  for (const auto& s : Phi) m = std::max(m, s.majorant_norm(w));
  for (const auto& s : R1) m = std::max(m, s.majorant_norm(w));
  for (const auto& s : R2) m = std::max(m, s.majorant_norm(w));
  return m;
}

// ---------- counter-term adjustment ------------------------------------

AdjustResult counter_term_adjust(const Decomposition& dec, const EMap& W, double kappa,
                                 double tau, const Mollifier& l, const NormWeights& w) {
  const int d = dec.d;
  const Series& a = dec.a.data();
  const int N = a.fourier_cutoff(), q = a.degree_cutoff();

  // Y = M(-B + F d_phi L a)
  Series La = solve_L(a, dec.omega, kappa, tau, l);
  std::vector<Series> dLa(d);
  for (int i = 0; i < d; ++i) dLa[i] = grad_phi(La, i);
  std::vector<Series> Fm(d * d);
  for (int i = 0; i < d * d; ++i) Fm[i] = dec.F[i].data();
  std::vector<Series> FdLa = mat_vec(Fm, dLa, d, N, q);
  std::vector<Series> Y(d);
  for (int k = 0; k < d; ++k) Y[k] = (FdLa[k] - dec.B[k].data()).mean();

  // X = -M(tR2 - F J),  J_{lj} = d_phi_l L R1_j
  std::vector<Series> X(d * d, Series(d, 2 * d, N, q));
  bool have_w = !W.is_identity();
  if (have_w) {
    std::vector<Series> J(d * d);
    for (int j = 0; j < d; ++j) {
      Series LR1 = solve_L(W.R1[j], dec.omega, kappa, tau, l);
      for (int ll = 0; ll < d; ++ll) J[ll * d + j] = grad_phi(LR1, ll);
    }
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j) {
        Series fj(d, 2 * d, N, q);
        for (int ll = 0; ll < d; ++ll) fj += mul(Fm[k * d + ll], J[ll * d + j], N, q);
        X[k * d + j] = (fj - W.R2[j * d + k]).mean();
      }
  }

  double xn = 0.0;
  for (int k = 0; k < d; ++k) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) row += X[k * d + j].majorant_norm(w);
    xn = std::max(xn, row);
  }
  if (xn > 0.5)
    throw ShiftTooLargeError("counter_term_adjust: Neumann proxy ||X|| > 1/2");

  // Lambda = sum_m X^m Y; X is O(c) so the sum is finite on the carrier
  std::vector<Series> Lambda = Y, v = Y;
  for (int m = 1; m <= q + 1; ++m) {
    std::vector<Series> nv = mat_vec(X, v, d, N, q);
    bool all_empty = true;
    for (int k = 0; k < d; ++k) {
      if (!nv[k].empty()) all_empty = false;
      Lambda[k] += nv[k];
    }
    v = std::move(nv);
    if (all_empty) break;
  }

  // adjusted decomposition per (8.27)-(8.28): F and G untouched
  AdjustResult out;
  out.X_norm = xn;
  out.dec = dec;
  Series a_new = dec.a.data();
  for (int i = 0; i < d; ++i) {
    Series shift = unit_c(d, i, N, q);
    if (have_w) shift += W.R1[i];
    a_new += mul(Lambda[i], shift, N, q);
  }
  out.dec.a = CenteredSeries(a_new, dec.a.q_r());
  for (int k = 0; k < d; ++k) {
    Series b_new = dec.B[k].data() + Lambda[k];
    if (have_w)
      for (int j = 0; j < d; ++j) b_new += mul(W.R2[j * d + k], Lambda[j], N, q);
    out.dec.B[k] = CenteredSeries(b_new, dec.B[k].q_r());
  }
  out.Lambda.reserve(d);
  for (int k = 0; k < d; ++k)
    out.Lambda.push_back(c_polynomial_to_plain(CenteredSeries(Lambda[k], q)));
  return out;
}

// ---------- one KAM step ------------------------------------------------

StepResult kam_step(const Decomposition& dec, const CenteredSeries& ledger, double kappa,
                    double tau, const Mollifier& l, const NormWeights& w, int flat_sign,
                    double divisor_floor) {
  (void)divisor_floor;
  const int d = dec.d;
  const Series& a = dec.a.data();
  const int N = a.fourier_cutoff(), q = a.degree_cutoff();
  const std::vector<double>& omega = dec.omega;

  {
    auto defect = mean_defect(dec, kappa, tau, l);
    double dn = 0.0, scale = 1.0;
    for (const auto& m : defect) dn = std::max(dn, m.max_abs_coeff());
    for (const auto& b : dec.B) scale = std::max(scale, b.data().max_abs_coeff());
    if (dn > 1e-9 * scale)
      throw ValidationError("kam_step: mean defect not zero; adjust the counter term first");
  }

  // homological pair: u0 kills a, u1 kills B + F d_psi u0
  Series u0 = -1.0 * solve_L(a, omega, kappa, tau, l);
  std::vector<Series> du0(d);
  for (int i = 0; i < d; ++i) du0[i] = grad_phi(u0, i);
  std::vector<Series> Fm(d * d);
  for (int i = 0; i < d * d; ++i) Fm[i] = dec.F[i].data();
  std::vector<Series> Fdu0 = mat_vec(Fm, du0, d, N, q);

  std::vector<Series> u1(d);
  for (int k = 0; k < d; ++k)
    u1[k] = -1.0 * solve_L(dec.B[k].data() + Fdu0[k], omega, kappa, tau, l);

  // flat part of the step
  Series h_flat = cutoff_P(a, omega, kappa, tau, l);
  for (int k = 0; k < d; ++k) {
    Series arg = dec.B[k].data() + static_cast<double>(flat_sign) * Fdu0[k];
    h_flat += mul(cutoff_P(arg, omega, kappa, tau, l), unit_rc(d, k, N, q), N, q);
  }

  // action shift v_k = d_psi_k u0 + sum_j d_psi_k u1_j (r-c)_j
  std::vector<std::pair<int, Series>> act;
  for (int k = 0; k < d; ++k) {
    Series v = du0[k];
    for (int j = 0; j < d; ++j)
      v += mul(grad_phi(u1[j], k), unit_rc(d, j, N, q), N, q);
    act.emplace_back(d + k, std::move(v));
  }

  // total Hamiltonian through the change
  Series T = recompose(dec).data() + ledger.data();
  Series omega_rc(d, 2 * d, N, q);
  {
    std::vector<int> zn(d, 0), alpha(2 * d, 0);
    for (int i = 0; i < d; ++i) {
      alpha.assign(2 * d, 0);
      alpha[i] = 1;
      omega_rc.set(zn, alpha, omega[i]);
    }
  }
  T += omega_rc;
  Series T1 = compose_shift(T, act, w);

  // angle inversion psi = phi + winv(phi, c)
  std::vector<std::pair<int, Series>> ang_fwd;
  for (int k = 0; k < d; ++k) ang_fwd.emplace_back(k, u1[k]);
  std::vector<Series> winv = invert_near_identity(ang_fwd, w);
  std::vector<std::pair<int, Series>> ang;
  for (int k = 0; k < d; ++k) ang.emplace_back(k, winv[k]);
  Series T2 = compose_shift(T1, ang, w);

  // ledger through the full change, new flat part through the angles only
  Series led2(d, 2 * d, N, q);
  if (!ledger.data().empty())
    led2 = compose_shift(compose_shift(ledger.data(), act, w), ang, w);
  Series flat_new = h_flat.empty() ? h_flat : compose_shift(h_flat, ang, w);

  StepResult out;
  Series ledger_out = led2 + flat_new;
  Series Hn = T2 - omega_rc - ledger_out;
  // the (n = 0, alpha = 0) stratum is the additive constant gamma(c)
  Series gamma_stratum = Hn.action_degree_slice(0, d, 0, 0).mean();
  Hn -= gamma_stratum;
  out.gamma_inc = c_polynomial_to_plain(CenteredSeries(gamma_stratum, q));
  out.H_next = CenteredSeries(Hn, q);
  out.dec = decompose(out.H_next, omega);
  out.flat = CenteredSeries(flat_new, q);
  out.ledger_out = CenteredSeries(ledger_out, q);

  // Z in E form: Phi = winv, R_i = coefficients of the action shift at psi(phi)
  out.Z = EMap::identity(d, N, q);
  for (int k = 0; k < d; ++k) {
    out.Z.Phi[k] = winv[k];
    out.Z.R1[k] = du0[k].empty() ? du0[k] : compose_shift(du0[k], ang, w);
    for (int j = 0; j < d; ++j) {
      Series g = grad_phi(u1[j], k);
      out.Z.R2[k * d + j] = g.empty() ? g : compose_shift(g, ang, w);
    }
  }
  return out;
}

// ---------- the full iteration -----------------------------------------

namespace {

double pseudo_norm(const Decomposition& dec, double kappa, double tau, const Mollifier& l,
                   const NormWeights& w) {
  double m = dec.a.data().majorant_norm(w);
  Series La = solve_L(dec.a.data(), dec.omega, kappa, tau, l);
  for (int i = 0; i < dec.d; ++i) m = std::max(m, grad_phi(La, i).majorant_norm(w));
  for (int k = 0; k < dec.d; ++k) {
    m = std::max(m, dec.B[k].data().majorant_norm(w));
    Series Lb = solve_L(dec.B[k].data(), dec.omega, kappa, tau, l);
    for (int i = 0; i < dec.d; ++i) m = std::max(m, grad_phi(Lb, i).majorant_norm(w));
  }
  return m;
}

Series chop_series(const Series& s, const NormWeights& w, double rel) {
  if (rel <= 0.0 || s.empty()) return s;
  double norm = s.majorant_norm(w);
  if (norm == 0.0) return s;
  return s.chopped(w, rel * norm);
}

}  // namespace

PreparedModel prepare_model(const Series& H, const MachineConfig& cfg) {
  PreparedModel out;
  out.cfg = cfg;
  out.H_raw = H;
  out.omega0 = bnf::extract_omega0(H);
  out.nf = bnf::birkhoff_normal_form(H, cfg.seed_order, cfg.ws, cfg.w, cfg.divisor_floor);
  Series conj = out.nf.f.empty()
                    ? H.projected(cfg.ws.N, cfg.ws.q)
                    : bnf::conjugate_by_generating(H, out.nf.f, cfg.ws, cfg.w);
  // through degree q the conjugate equals N by construction; keeping the
  // computed low-degree strata would only retain their roundoff junk and
  // break the exact c-support bookkeeping downstream
  out.H = out.nf.N.projected(cfg.ws.N, cfg.ws.q) + conj.degree_slice(cfg.seed_order + 1, -1);
  return out;
}

CounterTermResult kam_iterate(const PreparedModel& model, const std::vector<double>& omega) {
  const MachineConfig& cfg = model.cfg;
  const int d = model.H.angle_dim();
  const int N = cfg.ws.N, q = cfg.ws.q;
  const Mollifier l;

  if (!(cfg.h < std::min(cfg.w.rho, cfg.w.delta)))
    throw std::invalid_argument("kam_iterate: need h < min(rho, delta)");

  // seed subtraction: H~ = H - N^q(c) - <dN^q(c), r - c>
  CenteredSeries Hc = recenter(model.H.projected(N, q));
  Series Ht = Hc.data() - plain_poly_to_c(model.nf.N, N, q);
  for (int i = 0; i < d; ++i) {
    Series dN = plain_poly_to_c(model.nf.N.differentiated_action(i), N, q);
    Ht -= mul(dN, unit_rc(d, i, N, q), N, q);
  }

  CounterTermResult res;
  res.omega = omega;
  res.Lambda.assign(d, Series(d, d, 0, q));
  res.Gamma = Series(d, d, 0, q);
  res.W = EMap::identity(d, N, q);
  res.ledger = CenteredSeries(d, N, q, q);

  CenteredSeries Hwork(Ht, q);
  double rho_n = cfg.w.rho, delta_n = cfg.w.delta;
  double eps_prev = std::numeric_limits<double>::infinity();
  int nondecreasing = 0;

  for (int n = 0; n < cfg.n_max; ++n) {
    const double h_n = cfg.h * std::pow(2.0, -n - 1);
    NormWeights wn(rho_n, delta_n);
    Decomposition dec = decompose(Hwork, omega);
    double eps = pseudo_norm(dec, cfg.kappa, cfg.tau, l, wn);

    StepRecord rec;
    rec.n = n;
    rec.h_n = h_n;
    rec.rho_n = rho_n;
    rec.delta_n = delta_n;
    rec.eps = eps;
    double fnorm = 0.0;
    for (const auto& f : dec.F) fnorm = std::max(fnorm, f.majorant_norm(wn));
    rec.ledger_norm = res.ledger.majorant_norm(wn);
    rec.zeta = fnorm + rec.ledger_norm + 1.0;
    rec.eta = res.W.deviation_norm(wn);
    double xi = cfg.kappa * std::pow(h_n, (cfg.tau + 1.0) + d);
    rec.nu = std::pow(xi, -5.0) * std::pow(rec.zeta, 5.0) *
             (eps + rec.zeta * eps + rec.eta * eps);
    res.trace.steps.push_back(rec);

    if (eps < cfg.tol) {
      res.converged = true;
      res.steps = n;
      res.final_eps = eps;
      return res;
    }
    if (eps >= eps_prev) {
      if (++nondecreasing >= 2)
        throw DivergenceError("kam_iterate: pseudo-norm non-decreasing for two steps",
                              res.trace);
    } else {
      nondecreasing = 0;
    }
    eps_prev = eps;

    AdjustResult adj = counter_term_adjust(dec, res.W, cfg.kappa, cfg.tau, l, wn);
    for (int i = 0; i < d; ++i) res.Lambda[i] += adj.Lambda[i];

    StepResult st = kam_step(adj.dec, res.ledger, cfg.kappa, cfg.tau, l, wn,
                             cfg.flat_sign, cfg.divisor_floor);
    res.Gamma += st.gamma_inc;
    res.W = EMap::compose(res.W, st.Z, wn);
    res.ledger = st.ledger_out;
    Hwork = CenteredSeries(chop_series(st.H_next.data(), wn, cfg.chop_rel), q);

    rho_n -= h_n;
    delta_n -= h_n;
  }

  // budget exhausted: record the last pseudo-norm and report non-convergence
  NormWeights wn(rho_n, delta_n);
  Decomposition dec = decompose(Hwork, omega);
  res.final_eps = pseudo_norm(dec, cfg.kappa, cfg.tau, l, wn);
  res.converged = res.final_eps < cfg.tol;
  res.steps = cfg.n_max;
  return res;
}

std::vector<double> lambda_at(const PreparedModel& model, const CounterTermResult& res,
                              std::span<const double> c) {
  const int d = model.H.angle_dim();
  std::vector<double> out(d);
  std::vector<double> zero_phi(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double machine = res.Lambda[i].evaluate(zero_phi, c);
    double seed = model.nf.N.differentiated_action(i).evaluate(zero_phi, c);
    out[i] = machine - seed;
  }
  return out;
}

FrequencySolution frequency_map_solve(const PreparedModel& model, std::span<const double> c,
                                      double fd_step, int max_newton, double target) {
  const int d = model.H.angle_dim();
  std::vector<double> zero_phi(d, 0.0);

  auto seed = [&] {
    std::vector<double> w(d);
    for (int i = 0; i < d; ++i)
      w[i] = model.nf.N.differentiated_action(i).evaluate(zero_phi, c);
    return w;
  }();

  int evals = 0;
  CounterTermResult last;
  auto psi = [&](const std::vector<double>& omega) {
    last = kam_iterate(model, omega);
    ++evals;
    auto lam = lambda_at(model, last, c);
    Eigen::VectorXd r(d);
    for (int i = 0; i < d; ++i) r(i) = omega[i] + lam[i];
    return r;
  };

  std::vector<double> omega = seed;
  Eigen::VectorXd r = psi(omega);

  // frozen finite-difference Jacobian of omega + Lambda(c, omega)
  Eigen::MatrixXd J(d, d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> wp = omega;
    wp[j] += fd_step;
    Eigen::VectorXd rp = psi(wp);
    for (int i = 0; i < d; ++i) J(i, j) = (rp(i) - r(i)) / fd_step;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);

  double best = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_newton && best > target; ++it) {
    Eigen::VectorXd step = lu.solve(r);
    for (int i = 0; i < d; ++i) omega[i] -= step(i);
    r = psi(omega);
    double now = r.lpNorm<Eigen::Infinity>();
    if (now >= best && now < 1e-10) break;  // stagnation at the floor
    best = std::min(best, now);
  }

  FrequencySolution sol;
  sol.omega = omega;
  sol.residual = r.lpNorm<Eigen::Infinity>();
  sol.evaluations = evals;
  sol.run = std::move(last);
  return sol;
}

TorusVerification torus_extract_and_verify(const PreparedModel& model,
                                           const FrequencySolution& sol,
                                           std::span<const double> c, double T, double dt,
                                           int n_points, double distance_tol,
                                           int64_t n_check) {
  const int d = model.H.angle_dim();
  TorusVerification rep;
  rep.distance_tol = distance_tol;

  dio::DiophantineParams cert(model.cfg.kappa, model.cfg.tau, n_check);
  rep.diophantine_certified = dio::is_diophantine_up_to(sol.omega, cert).holds;
  rep.ledger_norm = sol.run.ledger.majorant_norm(model.cfg.w);

  // embedding theta -> Z_f(W(theta, c))
  auto embed = [&](std::span<const double> theta, std::span<double> phi_out,
                   std::span<double> r_out) {
    std::vector<double> rc(c.begin(), c.end());
    std::vector<double> phi_mid(d), r_mid(d);
    sol.run.W.evaluate(theta, rc, c, phi_mid, r_mid);
    if (model.nf.f.empty()) {
      std::copy(phi_mid.begin(), phi_mid.end(), phi_out.begin());
      std::copy(r_mid.begin(), r_mid.end(), r_out.begin());
      return;
    }
    auto pt = bnf::evaluate_generating_map(model.nf.f, phi_mid, r_mid);
    std::copy(pt.phi_out.begin(), pt.phi_out.end(), phi_out.begin());
    std::copy(pt.r_out.begin(), pt.r_out.end(), r_out.begin());
  };

  // gradient fields of the raw model
  std::vector<Series> dHr(d), dHphi(d);
  for (int i = 0; i < d; ++i) {
    dHr[i] = model.H_raw.differentiated_action(i);
    dHphi[i] = model.H_raw.differentiated_angle(i);
  }
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    std::span<const double> phi(y.data(), d), r(y.data() + d, d);
    for (int i = 0; i < d; ++i) {
      dy[i] = dHr[i].evaluate(phi, r);
      dy[d + i] = -dHphi[i].evaluate(phi, r);
    }
  };

  // distance from a state to the embedded torus via a short theta search
  auto torus_distance = [&](const std::vector<double>& y, std::vector<double> theta_guess) {
    std::vector<double> th = std::move(theta_guess);
    std::vector<double> phi_t(d), r_t(d);
    auto dist2 = [&](const std::vector<double>& th_try) {
      embed(th_try, phi_t, r_t);
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        double da = std::remainder(phi_t[i] - y[i], 1.0);
        double dr = r_t[i] - y[d + i];
        s += da * da + dr * dr;
      }
      return s;
    };
    double f0 = dist2(th);
    double step = 1e-3;
    for (int it = 0; it < 80; ++it) {
      bool improved = false;
      for (int i = 0; i < d; ++i) {
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> th_try = th;
          th_try[i] += sgn * step;
          double f = dist2(th_try);
          if (f < f0) {
            f0 = f;
            th = th_try;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
      if (step < 1e-12) break;
    }
    return std::sqrt(f0);
  };

  Rng rng(20260809);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double maxdist = 0.0, maxdrift = 0.0;
  std::vector<double> rot_acc(d, 0.0);
  double rot_gap = 0.0;

  for (int p = 0; p < n_points; ++p) {
    std::vector<double> theta0(d);
    for (auto& t : theta0) t = unif(rng);
    std::vector<double> y(2 * d);
    embed(theta0, std::span<double>(y.data(), d), std::span<double>(y.data() + d, d));

    double H0 = model.H_raw.evaluate(std::span<const double>(y.data(), d),
                                     std::span<const double>(y.data() + d, d));
    std::vector<double> t_samples;
    std::vector<std::vector<double>> y_samples;
    double next_sample = 0.0;
    Rk45 integ;
    integ.rtol = 1e-12;
    integ.atol = 1e-13;
    integ.h_max = std::max(dt, 1e-2);
    integ.integrate(rhs, y, 0.0, T, [&](double t, const std::vector<double>& st) {
      if (t >= next_sample) {
        t_samples.push_back(t);
        y_samples.push_back(st);
        next_sample += dt;
      }
    });

    // rotation vector: least-squares slope of the unwrapped angles
    const std::size_t M = t_samples.size();
    double st = 0, stt = 0;
    for (double t : t_samples) { st += t; stt += t * t; }
    for (int i = 0; i < d; ++i) {
      double sy = 0, sty = 0;
      for (std::size_t m = 0; m < M; ++m) {
        sy += y_samples[m][i];
        sty += t_samples[m] * y_samples[m][i];
      }
      double denom = M * stt - st * st;
      double slope = (M * sty - st * sy) / denom;
      rot_acc[i] += slope / n_points;
    }

    // distances along the orbit (subsample to keep the check affordable)
    std::size_t stride = std::max<std::size_t>(1, M / 200);
    for (std::size_t m = 0; m < M; m += stride) {
      double t = t_samples[m];
      std::vector<double> guess(d);
      for (int i = 0; i < d; ++i) guess[i] = theta0[i] + sol.omega[i] * t;
      maxdist = std::max(maxdist, torus_distance(y_samples[m], std::move(guess)));
      double Ht = model.H_raw.evaluate(
          std::span<const double>(y_samples[m].data(), d),
          std::span<const double>(y_samples[m].data() + d, d));
      maxdrift = std::max(maxdrift, std::abs(Ht - H0));
    }
  }

  for (int i = 0; i < d; ++i) rot_gap = std::max(rot_gap, std::abs(rot_acc[i] - sol.omega[i]));
  rep.max_distance = maxdist;
  rep.max_energy_drift = maxdrift;
  rep.rotation = rot_acc;
  rep.rotation_gap = rot_gap;
  rep.verified = maxdist <= distance_tol;
  return rep;
}

FamilyScan degenerate_family(const PreparedModel& model, const std::vector<double>& gamma,
                             const std::vector<double>& s_grid, bool fit_mu, int mu_degree) {
  const int d = model.H.angle_dim();
  FamilyScan scan;
  scan.points.resize(s_grid.size());

  auto solve_point = [&](std::size_t idx) {
    FamilyPoint pt;
    pt.s = s_grid[idx];
    pt.c.resize(d);
    for (int i = 0; i < d; ++i) pt.c[i] = pt.s * gamma[i];
    try {
      auto sol = frequency_map_solve(model, pt.c);
      pt.omega = sol.omega;
      pt.solved = true;
      double gap = 0.0;
      for (int i = 0; i < d; ++i) gap = std::max(gap, std::abs(sol.omega[i] - model.omega0[i]));
      pt.omega_gap = gap;
      double dotp = 0.0, n1 = 0.0, n2 = 0.0;
      for (int i = 0; i < d; ++i) {
        dotp += sol.omega[i] * model.omega0[i];
        n1 += sol.omega[i] * sol.omega[i];
        n2 += model.omega0[i] * model.omega0[i];
      }
      double cosang = std::clamp(dotp / std::sqrt(n1 * n2), -1.0, 1.0);
      pt.angle_gap = std::acos(cosang);
    } catch (const std::exception& e) {
      pt.solved = false;
      pt.error = e.what();
      pt.omega_gap = pt.angle_gap = std::numeric_limits<double>::quiet_NaN();
    }
    return pt;
  };

  std::vector<std::future<FamilyPoint>> futs;
  futs.reserve(s_grid.size());
  for (std::size_t i = 0; i < s_grid.size(); ++i)
    futs.push_back(std::async(std::launch::async, solve_point, i));
  for (std::size_t i = 0; i < s_grid.size(); ++i) scan.points[i] = futs[i].get();

  if (fit_mu) {
    // fit <Omega(c), omega0>/|omega0|^2 against t = <c, omega0>
    double w2 = 0.0;
    for (int i = 0; i < d; ++i) w2 += model.omega0[i] * model.omega0[i];
    std::vector<double> ts, ys;
    for (const auto& pt : scan.points) {
      if (!pt.solved) continue;
      double t = 0.0, y = 0.0;
      for (int i = 0; i < d; ++i) {
        t += pt.c[i] * model.omega0[i];
        y += pt.omega[i] * model.omega0[i];
      }
      ts.push_back(t);
      ys.push_back(y / w2);
    }
    if (static_cast<int>(ts.size()) > mu_degree) {
      double tmax = 1e-300;
      for (double t : ts) tmax = std::max(tmax, std::abs(t));
      Eigen::MatrixXd V(ts.size(), mu_degree + 1);
      Eigen::VectorXd b(ts.size());
      for (std::size_t r = 0; r < ts.size(); ++r) {
        double p = 1.0;
        for (int m = 0; m <= mu_degree; ++m) {
          V(r, m) = p;
          p *= ts[r] / tmax;
        }
        b(r) = ys[r];
      }
      Eigen::VectorXd coef = V.colPivHouseholderQr().solve(b);
      scan.mu_fit.resize(mu_degree + 1);
      double scale = 1.0;
      for (int m = 0; m <= mu_degree; ++m) {
        scan.mu_fit[m] = coef(m) / scale;
        scale *= tmax;
      }
    }
  }
  return scan;
}

}  // namespace kam::ct
