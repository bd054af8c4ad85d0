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

#include "kam/series.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace kam {

namespace {

int norm_inf(std::span<const int> n) {
  int m = 0;
  for (int v : n) m = std::max(m, std::abs(v));
  return m;
}

int norm_1(std::span<const int> n) {
  int m = 0;
  for (int v : n) m += std::abs(v);
  return m;
}

}  // namespace

Series::Series(int angle_dim, int action_dim, int fourier_cutoff, int degree_cutoff)
    : da_(angle_dim), dr_(action_dim), ncut_(fourier_cutoff), qcut_(degree_cutoff) {
  if (angle_dim < 1 || action_dim < 0 || angle_dim + action_dim > kMaxVars)
    throw std::invalid_argument("Series: unsupported dimensions");
  if (fourier_cutoff < 0 || degree_cutoff < 0)
    throw std::invalid_argument("Series: negative cutoff");
}

Series Series::constant(int d, int N, int q, double value) {
  Series s(d, d, N, q);
  std::vector<int> zn(d, 0), za(d, 0);
  if (value != 0.0) s.set(zn, za, Complex(value, 0.0));
  return s;
}

Series::Key Series::pack(int da, int dr, std::span<const int> n, std::span<const int> alpha) {
  Key k;
  assert(static_cast<int>(n.size()) == da && static_cast<int>(alpha.size()) == dr);
  for (int i = 0; i < da; ++i) {
    if (n[i] < INT16_MIN || n[i] > INT16_MAX) throw std::invalid_argument("Series: mode out of range");
    k.v[i] = static_cast<int16_t>(n[i]);
  }
  for (int i = 0; i < dr; ++i) {
    if (alpha[i] < 0 || alpha[i] > INT16_MAX) throw std::invalid_argument("Series: bad exponent");
    k.v[da + i] = static_cast<int16_t>(alpha[i]);
  }
  return k;
}

Series::Key Series::flip(int da, const Key& k) {
  Key m = k;
  for (int i = 0; i < da; ++i) m.v[i] = static_cast<int16_t>(-m.v[i]);
  return m;
}

std::vector<int> Series::key_n(const Key& k) const {
  return std::vector<int>(k.v.begin(), k.v.begin() + da_);
}

std::vector<int> Series::key_alpha(const Key& k) const {
  return std::vector<int>(k.v.begin() + da_, k.v.begin() + da_ + dr_);
}

int Series::degree_of(int da, int dr, const Key& k) {
  int d = 0;
  for (int i = 0; i < dr; ++i) d += k.v[da + i];
  return d;
}

void Series::set(std::span<const int> n, std::span<const int> alpha, Complex z) {
  if (norm_inf(n) > ncut_ || norm_1(alpha) > qcut_)
    throw std::invalid_argument("Series::set: index outside cutoffs");
  Key k = pack(da_, dr_, n, alpha);
  Key m = flip(da_, k);
  if (m == k) z = Complex(z.real(), 0.0);  // n == 0 stratum is real
  if (z == 0.0) {
    c_.erase(k);
    c_.erase(m);
    return;
  }
  c_[k] = z;
  c_[m] = std::conj(z);
}

void Series::add_raw(std::span<const int> n, std::span<const int> alpha, Complex z) {
  if (norm_inf(n) > ncut_ || norm_1(alpha) > qcut_) return;  // projected away
  if (z == 0.0) return;
  c_[pack(da_, dr_, n, alpha)] += z;
}

Complex Series::coeff(std::span<const int> n, std::span<const int> alpha) const {
  if (norm_inf(n) > ncut_ || norm_1(alpha) > qcut_) return 0.0;
  auto it = c_.find(pack(da_, dr_, n, alpha));
  return it == c_.end() ? Complex(0.0) : it->second;
}

void Series::hermitize() {
  for (auto it = c_.begin(); it != c_.end(); ++it) {
    Key m = flip(da_, it->first);
    if (m == it->first) {
      it->second = Complex(it->second.real(), 0.0);
      continue;
    }
    auto jt = c_.find(m);
    if (m < it->first && jt != c_.end()) continue;  // handled from the partner
    Complex b = (jt == c_.end()) ? Complex(0.0) : jt->second;
    Complex avg = 0.5 * (it->second + std::conj(b));
    it->second = avg;
    c_[m] = std::conj(avg);
  }
  prune();
}

void Series::prune() {
  for (auto it = c_.begin(); it != c_.end();) {
    if (it->second == 0.0)
      it = c_.erase(it);
    else
      ++it;
  }
}

bool Series::is_hermitian(double tol) const {
  for (const auto& [k, z] : c_) {
    auto it = c_.find(flip(da_, k));
    Complex b = (it == c_.end()) ? Complex(0.0) : it->second;
    if (std::abs(z - std::conj(b)) > tol * std::max(1.0, std::abs(z))) return false;
  }
  return true;
}

Series& Series::operator+=(const Series& o) {
  if (!same_shape(o)) throw std::invalid_argument("Series: dimension mismatch");
  ncut_ = std::max(ncut_, o.ncut_);
  qcut_ = std::max(qcut_, o.qcut_);
  for (const auto& [k, z] : o.c_) c_[k] += z;
  hermitize();
  return *this;
}

Series& Series::operator-=(const Series& o) {
  if (!same_shape(o)) throw std::invalid_argument("Series: dimension mismatch");
  ncut_ = std::max(ncut_, o.ncut_);
  qcut_ = std::max(qcut_, o.qcut_);
  for (const auto& [k, z] : o.c_) c_[k] -= z;
  hermitize();
  return *this;
}

Series& Series::operator*=(double s) {
  if (s == 0.0) {
    c_.clear();
    return *this;
  }
  for (auto& [k, z] : c_) z *= s;
  return *this;
}

Series mul(const Series& a, const Series& b, int N, int q) {
  if (!a.same_shape(b)) throw std::invalid_argument("Series: dimension mismatch");
  const int da = a.da_, dr = a.dr_;
  Series out(da, dr, N, q);
  for (const auto& [ka, za] : a.c_) {
    for (const auto& [kb, zb] : b.c_) {
      Series::Key k;
      bool keep = true;
      int deg = 0;
      for (int i = 0; i < da; ++i) {
        int n = ka.v[i] + kb.v[i];
        if (std::abs(n) > N) { keep = false; break; }
        k.v[i] = static_cast<int16_t>(n);
      }
      if (!keep) continue;
      for (int i = 0; i < dr; ++i) {
        int e = ka.v[da + i] + kb.v[da + i];
        deg += e;
        k.v[da + i] = static_cast<int16_t>(e);
      }
      if (deg > q) continue;
      out.c_[k] += za * zb;
    }
  }
  out.hermitize();
  return out;
}

Series operator*(const Series& a, const Series& b) {
  return mul(a, b, std::max(a.ncut_, b.ncut_), std::max(a.qcut_, b.qcut_));
}

Series Series::differentiated_angle(int i) const {
  if (i < 0 || i >= da_) throw std::invalid_argument("differentiated_angle: bad index");
  Series out(da_, dr_, ncut_, qcut_);
  const Complex tpi(0.0, kTwoPi);
  for (const auto& [k, z] : c_) {
    if (k.v[i] == 0) continue;
    out.c_[k] = z * tpi * static_cast<double>(k.v[i]);
  }
  out.prune();
  return out;
}

Series Series::differentiated_action(int i) const {
  if (i < 0 || i >= dr_) throw std::invalid_argument("differentiated_action: bad index");
  Series out(da_, dr_, ncut_, qcut_);
  for (const auto& [k, z] : c_) {
    int e = k.v[da_ + i];
    if (e == 0) continue;
    Key m = k;
    m.v[da_ + i] = static_cast<int16_t>(e - 1);
    out.c_[m] += z * static_cast<double>(e);
  }
  out.prune();
  return out;
}

Series Series::mean() const {
  Series out(da_, dr_, ncut_, qcut_);
  for (const auto& [k, z] : c_) {
    bool zero = true;
    for (int i = 0; i < da_; ++i)
      if (k.v[i] != 0) { zero = false; break; }
    if (zero) out.c_[k] = z;
  }
  return out;
}

Series Series::truncated_fourier(int K) const {
  Series out(da_, dr_, ncut_, qcut_);
  for (const auto& [k, z] : c_) {
    int m = 0;
    for (int i = 0; i < da_; ++i) m = std::max(m, std::abs(static_cast<int>(k.v[i])));
    if (m <= K) out.c_[k] = z;
  }
  return out;
}

Series Series::projected(int N, int q) const {
  Series out(da_, dr_, N, q);
  for (const auto& [k, z] : c_) {
    int m = 0;
    for (int i = 0; i < da_; ++i) m = std::max(m, std::abs(static_cast<int>(k.v[i])));
    if (m > N || degree_of(da_, dr_, k) > q) continue;
    out.c_[k] = z;
  }
  return out;
}

Series Series::action_degree_slice(int lo, int hi, int dmin, int dmax) const {
  Series out(da_, dr_, ncut_, qcut_);
  for (const auto& [k, z] : c_) {
    int d = 0;
    for (int i = lo; i < hi; ++i) d += k.v[da_ + i];
    if (d < dmin || (dmax >= 0 && d > dmax)) continue;
    out.c_[k] = z;
  }
  return out;
}

Series Series::degree_slice(int dmin, int dmax) const {
  return action_degree_slice(0, dr_, dmin, dmax);
}

double Series::majorant_norm(const NormWeights& w) const {
  double s = 0.0;
  for (const auto& [k, z] : c_) {
    int n1 = 0;
    for (int i = 0; i < da_; ++i) n1 += std::abs(static_cast<int>(k.v[i]));
    s += std::abs(z) * std::exp(kTwoPi * n1 * w.rho) * std::pow(w.delta, degree_of(da_, dr_, k));
  }
  if (!std::isfinite(s)) throw NormOverflowError("majorant_norm: weights exceed floating range");
  return s;
}

double Series::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [k, z] : c_) m = std::max(m, std::abs(z));
  return m;
}

Series Series::chopped(const NormWeights& w, double eps) const {
  Series out(da_, dr_, ncut_, qcut_);
  for (const auto& [k, z] : c_) {
    int n1 = 0;
    for (int i = 0; i < da_; ++i) n1 += std::abs(static_cast<int>(k.v[i]));
    double weight = std::exp(kTwoPi * n1 * w.rho) * std::pow(w.delta, degree_of(da_, dr_, k));
    if (std::abs(z) * weight >= eps) out.c_[k] = z;
  }
  out.hermitize();
  return out;
}

Complex Series::evaluate_complex(std::span<const double> phi, std::span<const double> x) const {
  assert(static_cast<int>(phi.size()) == da_ && static_cast<int>(x.size()) == dr_);
  Complex s(0.0);
  for (const auto& [k, z] : c_) {
    double arg = 0.0;
    for (int i = 0; i < da_; ++i) arg += k.v[i] * phi[i];
    double mono = 1.0;
    for (int i = 0; i < dr_; ++i) {
      for (int e = 0; e < k.v[da_ + i]; ++e) mono *= x[i];
    }
    s += z * std::polar(mono, kTwoPi * arg);
  }
  return s;
}

double Series::evaluate(std::span<const double> phi, std::span<const double> x) const {
  return evaluate_complex(phi, x).real();
}

namespace {

// One Taylor order of a simultaneous shift: walks multi-exponents beta over
// the shifted variables in graded order, reusing the predecessor's power
// product and derivative.
struct OrderNode {
  std::vector<int> beta;
  Series deriv;  // d^beta f / beta!  (factorial folded in)
  Series power;  // prod s_i^{beta_i}
};

}  // namespace

Series compose_shift(const Series& f, const std::vector<std::pair<int, Series>>& shifts,
                     const NormWeights& w, double tail_tol, int max_order) {
  for (const auto& [var, s] : shifts) {
    if (!f.same_shape(s)) throw std::invalid_argument("compose_shift: dimension mismatch");
    if (var < 0 || var >= f.angle_dim() + f.action_dim())
      throw std::invalid_argument("compose_shift: bad variable index");
  }
  const int m = static_cast<int>(shifts.size());
  const int N = f.fourier_cutoff(), q = f.degree_cutoff();

  Series acc = f;
  if (m == 0) return acc;

  std::vector<OrderNode> level;
  {
    OrderNode root;
    root.beta.assign(m, 0);
    root.deriv = f;
    // root.power deliberately left empty; order-1 children copy the shift
    level.push_back(std::move(root));
  }

  double prev_norm = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int order = 1; order <= max_order; ++order) {
    std::map<std::vector<int>, OrderNode> next;
    for (const auto& node : level) {
      // extend beta by one in every variable >= the last nonzero slot to
      // enumerate each multi-exponent exactly once
      int start = 0;
      for (int i = m - 1; i >= 0; --i)
        if (node.beta[i] > 0) { start = i; break; }
      for (int i = start; i < m; ++i) {
        std::vector<int> beta = node.beta;
        beta[i] += 1;
        if (next.count(beta)) continue;
        OrderNode child;
        child.beta = beta;
        const int var = shifts[i].first;
        Series d = (var < f.angle_dim()) ? node.deriv.differentiated_angle(var)
                                         : node.deriv.differentiated_action(var - f.angle_dim());
        child.deriv = (1.0 / beta[i]) * d;
        if (order == 1)
          child.power = shifts[i].second;
        else
          child.power = mul(node.power, shifts[i].second, N, q);
        if (child.deriv.empty() || child.power.empty()) continue;
        next.emplace(std::move(beta), std::move(child));
      }
    }
    if (next.empty()) return acc;  // polynomial exhaustion: exact composition

    Series contrib(f.angle_dim(), f.action_dim(), N, q);
    level.clear();
    for (auto& [beta, node] : next) {
      contrib += mul(node.deriv, node.power, N, q);
      level.push_back(std::move(node));
    }
    acc += contrib;

    double cn = contrib.majorant_norm(w);
    if (tail_tol > 0.0) {
      if (cn <= tail_tol) return acc;
      if (cn >= prev_norm) {
        if (++stall >= 2) throw ShiftTooLargeError("compose_shift: Taylor orders not decreasing");
      } else {
        stall = 0;
      }
      prev_norm = cn;
    }
  }
  if (tail_tol > 0.0)
    throw ShiftTooLargeError("compose_shift: order budget exhausted above tail tolerance");
  return acc;
}

std::vector<Series> invert_near_identity(const std::vector<std::pair<int, Series>>& f,
                                         const NormWeights& w, double tol, int max_iter) {
  std::vector<Series> g;
  g.reserve(f.size());
  double fscale = 1.0;
  for (const auto& [var, s] : f) {
    (void)var;
    fscale = std::max(fscale, s.majorant_norm(w));
    g.push_back(-1.0 * s);
  }
  const double tail_floor = 0.01 * tol * fscale;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::pair<int, Series>> shift;
    shift.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) shift.emplace_back(f[i].first, g[i]);
    double delta = 0.0, scale = 0.0;
    // deep Taylor tails only matter once the iteration is nearly converged
    double tail = std::max(tail_floor, std::isfinite(prev) ? 1e-3 * prev : tail_floor);
    std::vector<Series> gn;
    gn.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      Series next = -1.0 * compose_shift(f[i].second, shift, w, tail);
      delta = std::max(delta, (next - g[i]).majorant_norm(w));
      scale = std::max(scale, std::max(1.0, next.majorant_norm(w)));
      gn.push_back(std::move(next));
    }
    g = std::move(gn);
    if (delta <= tol * scale) return g;
    if (delta >= prev && delta > 1e3 * tol * scale)
      throw InversionError("invert_near_identity: no contraction");
    prev = delta;
  }
  throw InversionError("invert_near_identity: iteration budget exhausted");
}

std::string Series::to_json() const {
  if (dr_ != da_) throw std::logic_error("Series::to_json: only plain series serialize");
  nlohmann::json j;
  j["d"] = da_;
  j["N"] = ncut_;
  j["q"] = qcut_;
  auto terms = nlohmann::json::array();
  for (const auto& [k, z] : c_) {
    nlohmann::json t;
    t["n"] = key_n(k);
    t["alpha"] = key_alpha(k);
    t["re"] = z.real();
    t["im"] = z.imag();
    terms.push_back(std::move(t));
  }
  j["terms"] = std::move(terms);
  return j.dump();
}

Series Series::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  int d = j.at("d").get<int>();
  int N = j.at("N").get<int>();
  int q = j.at("q").get<int>();
  if (d < 1) throw ValidationError("series: d must be >= 1");
  Series s(d, d, N, q);
  for (const auto& t : j.at("terms")) {
    auto n = t.at("n").get<std::vector<int>>();
    auto alpha = t.at("alpha").get<std::vector<int>>();
    if (static_cast<int>(n.size()) != d || static_cast<int>(alpha.size()) != d)
      throw ValidationError("series term: index arity mismatch");
    if (norm_inf(n) > N)
      throw ValidationError("series term: Fourier index exceeds cutoff N");
    if (norm_1(alpha) > q)
      throw ValidationError("series term: degree exceeds cutoff q");
    for (int a : alpha)
      if (a < 0) throw ValidationError("series term: negative exponent");
    Complex z(t.at("re").get<double>(), t.at("im").get<double>());
    if (z == 0.0) continue;
    Key k = pack(d, d, n, alpha);
    if (s.c_.count(k)) throw ValidationError("series term: duplicate index");
    s.c_[k] = z;
  }
  if (!s.is_hermitian(1e-12))
    throw ValidationError("series: reality invariant violated (coeff(-n) != conj(coeff(n)))");
  s.hermitize();
  return s;
}

}  // namespace kam
