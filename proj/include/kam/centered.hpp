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

#ifndef KAMLAB_CENTERED_HPP
#define KAMLAB_CENTERED_HPP

#include <vector>

#include "kam/series.hpp"

namespace kam {

/// Series in the centered monomial basis
///
///   e^{2 pi i <n, phi>} (r - c)^alpha c^beta,
///
/// realized as a kam::Series whose action block stacks [r - c | c].
/// Tracks the two truncation levels of the representation: q_r caps the
/// (r - c)-degree |alpha|, q_tot the joint degree |alpha| + |beta|.
class CenteredSeries {
 public:
  CenteredSeries() = default;
  CenteredSeries(int d, int fourier_cutoff, int q_r, int q_tot);
  CenteredSeries(Series s, int q_r);  // s must have action_dim == 2 * angle_dim

  int dim() const { return d_; }
  int q_r() const { return q_r_; }
  int q_tot() const { return data_.degree_cutoff(); }
  const Series& data() const { return data_; }
  Series& data() { return data_; }

  /// Projection onto |alpha| <= q_r (and the carrier's (N, q_tot)).
  void enforce_caps();

  /// Strata by (r - c)-degree; dmax < 0 means unbounded. The projection to
  /// |alpha| >= j implements membership in O^j(r - c).
  CenteredSeries rc_slice(int dmin, int dmax) const;
  /// Strata by c-degree.
  CenteredSeries c_slice(int dmin, int dmax) const;

  CenteredSeries& operator+=(const CenteredSeries& o);
  CenteredSeries& operator-=(const CenteredSeries& o);
  CenteredSeries& operator*=(double s) { data_ *= s; return *this; }
  friend CenteredSeries operator+(CenteredSeries a, const CenteredSeries& b) { a += b; return a; }
  friend CenteredSeries operator-(CenteredSeries a, const CenteredSeries& b) { a -= b; return a; }
  friend CenteredSeries operator*(double s, CenteredSeries a) { a *= s; return a; }
  friend CenteredSeries mul(const CenteredSeries& a, const CenteredSeries& b);

  double evaluate(std::span<const double> phi, std::span<const double> r,
                  std::span<const double> c) const;
  double majorant_norm(const NormWeights& w) const { return data_.majorant_norm(w); }

  /// Lowest (r - c)-degree present, or -1 when empty.
  int min_rc_degree() const;
  /// Lowest c-degree present, or -1 when empty.
  int min_c_degree() const;

 private:
  int d_ = 0;
  int q_r_ = 0;
  Series data_;
};

/// Taylor re-expansion of the r-monomials of a plain series around c:
/// exact at the polynomial level, f(phi, r) == recenter(f)(phi, r - c, c).
/// q_r < 0 keeps the full (r - c)-degree range.
CenteredSeries recenter(const Series& f, int q_r = -1);

/// Reads a pure c-polynomial (alpha == 0 stratum only) back into a plain
/// series in the action variables.
Series c_polynomial_to_plain(const CenteredSeries& f);

}  // namespace kam

#endif  // KAMLAB_CENTERED_HPP
