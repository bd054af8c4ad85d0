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

#include "kam/centered.hpp"

#include <cassert>
#include <stdexcept>

namespace kam {

CenteredSeries::CenteredSeries(int d, int fourier_cutoff, int q_r, int q_tot)
    : d_(d), q_r_(q_r), data_(d, 2 * d, fourier_cutoff, q_tot) {
  if (q_r < 0 || q_r > q_tot) throw std::invalid_argument("CenteredSeries: bad q_r");
}

CenteredSeries::CenteredSeries(Series s, int q_r) : q_r_(q_r) {
  if (s.action_dim() != 2 * s.angle_dim())
    throw std::invalid_argument("CenteredSeries: carrier must have action_dim == 2*angle_dim");
  d_ = s.angle_dim();
  data_ = std::move(s);
  if (q_r_ < 0 || q_r_ > data_.degree_cutoff()) q_r_ = data_.degree_cutoff();
  enforce_caps();
}

void CenteredSeries::enforce_caps() {
  if (q_r_ < q_tot()) data_ = data_.action_degree_slice(0, d_, 0, q_r_);
}

CenteredSeries CenteredSeries::rc_slice(int dmin, int dmax) const {
  CenteredSeries out = *this;
  out.data_ = data_.action_degree_slice(0, d_, dmin, dmax);
  return out;
}

CenteredSeries CenteredSeries::c_slice(int dmin, int dmax) const {
  CenteredSeries out = *this;
  out.data_ = data_.action_degree_slice(d_, 2 * d_, dmin, dmax);
  return out;
}

CenteredSeries& CenteredSeries::operator+=(const CenteredSeries& o) {
  data_ += o.data_;
  q_r_ = std::max(q_r_, o.q_r_);
  enforce_caps();
  return *this;
}

CenteredSeries& CenteredSeries::operator-=(const CenteredSeries& o) {
  data_ -= o.data_;
  q_r_ = std::max(q_r_, o.q_r_);
  enforce_caps();
  return *this;
}

CenteredSeries mul(const CenteredSeries& a, const CenteredSeries& b) {
  CenteredSeries out(mul(a.data_, b.data_,
                         std::max(a.data_.fourier_cutoff(), b.data_.fourier_cutoff()),
                         std::max(a.q_tot(), b.q_tot())),
                     std::max(a.q_r_, b.q_r_));
  return out;
}

double CenteredSeries::evaluate(std::span<const double> phi, std::span<const double> r,
                                std::span<const double> c) const {
  assert(static_cast<int>(r.size()) == d_ && static_cast<int>(c.size()) == d_);
  std::vector<double> x(2 * d_);
  for (int i = 0; i < d_; ++i) {
    x[i] = r[i] - c[i];
    x[d_ + i] = c[i];
  }
  return data_.evaluate(phi, x);
}

int CenteredSeries::min_rc_degree() const {
  int best = -1;
  for (const auto& [k, z] : data_.coeffs()) {
    (void)z;
    int deg = 0;
    for (int i = 0; i < d_; ++i) deg += k.v[d_ + i];
    if (best < 0 || deg < best) best = deg;
  }
  return best;
}

int CenteredSeries::min_c_degree() const {
  int best = -1;
  for (const auto& [k, z] : data_.coeffs()) {
    (void)z;
    int deg = 0;
    for (int i = 0; i < d_; ++i) deg += k.v[2 * d_ + i];
    if (best < 0 || deg < best) best = deg;
  }
  return best;
}

namespace {

// binomial table big enough for the degree cutoffs in play
double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

CenteredSeries recenter(const Series& f, int q_r) {
  const int d = f.angle_dim();
  if (f.action_dim() != d) throw std::invalid_argument("recenter: expects a plain series");
  const int q = f.degree_cutoff();
  CenteredSeries out(d, f.fourier_cutoff(), q_r < 0 ? q : q_r, q);

  std::vector<int> n(d), alpha(d), a(d), b(d);
  for (const auto& [k, z] : f.coeffs()) {
    for (int i = 0; i < d; ++i) {
      n[i] = k.v[i];
      alpha[i] = k.v[d + i];
    }
    // r^alpha = prod_i ((r-c)_i + c_i)^{alpha_i}
    //         = sum_{a <= alpha} prod_i C(alpha_i, a_i) (r-c)^a c^{alpha-a}
    std::vector<int> idx(d, 0);
    while (true) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        a[i] = idx[i];
        b[i] = alpha[i] - idx[i];
        w *= binom(alpha[i], idx[i]);
      }
      std::vector<int> ab(2 * d);
      for (int i = 0; i < d; ++i) {
        ab[i] = a[i];
        ab[d + i] = b[i];
      }
      out.data().add_raw(n, ab, w * z);
      int i = 0;
      for (; i < d; ++i) {
        if (idx[i] < alpha[i]) {
          ++idx[i];
          break;
        }
        idx[i] = 0;
      }
      if (i == d) break;
    }
  }
  out.data().finalize();
  out.enforce_caps();
  return out;
}

Series c_polynomial_to_plain(const CenteredSeries& f) {
  const int d = f.dim();
  Series out(d, d, f.data().fourier_cutoff(), f.q_tot());
  std::vector<int> n(d), beta(d);
  for (const auto& [k, z] : f.data().coeffs()) {
    for (int i = 0; i < d; ++i) {
      if (k.v[d + i] != 0)
        throw std::invalid_argument("c_polynomial_to_plain: nonzero (r-c)-degree present");
      n[i] = k.v[i];
      beta[i] = k.v[2 * d + i];
    }
    out.add_raw(n, beta, z);
  }
  out.finalize();
  return out;
}

}  // namespace kam
