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

#ifndef KAMLAB_SERIES_HPP
#define KAMLAB_SERIES_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kam/common.hpp"

namespace kam {

/// Sparse truncated Fourier-Taylor series
///
///   f(phi, x) = sum_{n, alpha} a_{n, alpha} e^{2 pi i <n, phi>} x^alpha
///
/// with phi on the torus T^{da} and x a vector of `dr` polynomial variables.
/// For a plain Hamiltonian x = r (dr == da); the centered representation of
/// the KAM machinery uses dr == 2*da with x = (r - c | c).
///
/// Invariants maintained by every operation:
///  * reality: coeff(-n, alpha) == conj(coeff(n, alpha)),
///  * ||n||_inf <= fourier_cutoff, |alpha| <= degree_cutoff,
///  * exact zeros are not stored.
///
/// Values are immutable after construction in the sense that all operations
/// are pure functions; nothing here mutates shared state, so concurrent use
/// of the same series from several threads is safe.
class Series {
 public:
  static constexpr int kMaxVars = 12;  // angle dims + action dims

  struct Key {
    std::array<int16_t, kMaxVars> v{};
    auto operator<=>(const Key&) const = default;
  };
  using CoeffMap = std::map<Key, Complex>;

  Series() = default;
  Series(int angle_dim, int action_dim, int fourier_cutoff, int degree_cutoff);

  /// Plain series over T^d x R^d.
  static Series make(int d, int fourier_cutoff, int degree_cutoff) {
    return Series(d, d, fourier_cutoff, degree_cutoff);
  }
  static Series constant(int d, int fourier_cutoff, int degree_cutoff, double value);

  int angle_dim() const { return da_; }
  int action_dim() const { return dr_; }
  int fourier_cutoff() const { return ncut_; }
  int degree_cutoff() const { return qcut_; }
  const CoeffMap& coeffs() const { return c_; }
  std::size_t size() const { return c_.size(); }
  bool empty() const { return c_.empty(); }

  /// Stores z at (n, alpha) and conj(z) at (-n, alpha).
  void set(std::span<const int> n, std::span<const int> alpha, Complex z);
  void set(std::initializer_list<int> n, std::initializer_list<int> alpha, Complex z) {
    set(std::span<const int>(n.begin(), n.size()),
        std::span<const int>(alpha.begin(), alpha.size()), z);
  }
  /// Accumulates without touching the mirror index; call finalize() after a
  /// batch of raw adds.
  void add_raw(std::span<const int> n, std::span<const int> alpha, Complex z);
  void finalize() { hermitize(); }

  Complex coeff(std::span<const int> n, std::span<const int> alpha) const;
  Complex coeff(std::initializer_list<int> n, std::initializer_list<int> alpha) const {
    return coeff(std::span<const int>(n.begin(), n.size()),
                 std::span<const int>(alpha.begin(), alpha.size()));
  }

  static Key pack(int da, int dr, std::span<const int> n, std::span<const int> alpha);
  static Key flip(int da, const Key& k);  // n -> -n
  std::vector<int> key_n(const Key& k) const;
  std::vector<int> key_alpha(const Key& k) const;
  static int degree_of(int da, int dr, const Key& k);

  bool same_shape(const Series& o) const { return da_ == o.da_ && dr_ == o.dr_; }

  // -- algebra ---------------------------------------------------------

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double s);
  friend Series operator+(Series a, const Series& b) { a += b; return a; }
  friend Series operator-(Series a, const Series& b) { a -= b; return a; }
  friend Series operator*(double s, Series a) { a *= s; return a; }
  friend Series operator*(Series a, double s) { a *= s; return a; }

  /// Exact coefficient convolution projected onto (N, q); by default the
  /// component-wise max of the operand cutoffs.
  friend Series mul(const Series& a, const Series& b, int N, int q);
  friend Series operator*(const Series& a, const Series& b);

  Series differentiated_angle(int i) const;   // * 2 pi i n_i
  Series differentiated_action(int i) const;  // alpha -> alpha - e_i, * alpha_i
  Series mean() const;                        // keeps the n == 0 stratum
  Series truncated_fourier(int K) const;
  Series projected(int N, int q) const;

  /// Keeps terms whose degree over action variables [lo, hi) lies in
  /// [dmin, dmax]; pass dmax < 0 for "no upper bound".
  Series action_degree_slice(int lo, int hi, int dmin, int dmax) const;
  /// Keeps terms of total action degree in [dmin, dmax].
  Series degree_slice(int dmin, int dmax) const;

  double majorant_norm(const NormWeights& w) const;
  double max_abs_coeff() const;
  /// Drops terms contributing less than eps to the weighted majorant.
  Series chopped(const NormWeights& w, double eps) const;

  double evaluate(std::span<const double> phi, std::span<const double> x) const;
  Complex evaluate_complex(std::span<const double> phi, std::span<const double> x) const;

  bool is_hermitian(double tol) const;

  // JSON round trip, schema {d, N, q, terms:[{n, alpha, re, im}]}.
  // Only plain series (dr == da) serialize; the deserializer rejects
  // reality and cutoff violations.
  std::string to_json() const;
  static Series from_json(const std::string& text);

 private:
  void hermitize();
  void prune();

  int da_ = 0, dr_ = 0;
  int ncut_ = 0, qcut_ = 0;
  CoeffMap c_;

  friend class SeriesBuilder;
};

Series mul(const Series& a, const Series& b, int N, int q);

/// f with the shifted variables:  result(x) = f(x + s(x)), truncated onto
/// f's cutoffs.  `shifts` lists (variable index, shift series); indices
/// 0..da-1 are angles, da..da+dr-1 actions.  Terminates when an order
/// contributes exactly zero (polynomial case) or its weighted norm falls
/// below tail_tol; throws ShiftTooLargeError when orders stop decreasing.
Series compose_shift(const Series& f,
                     const std::vector<std::pair<int, Series>>& shifts,
                     const NormWeights& w, double tail_tol = 0.0,
                     int max_order = 48);

/// Inverse of x -> x + f(x) on the listed variables by fixed-point
/// iteration g <- -f o (id + g); returns g with (id+f)o(id+g) == id up to
/// truncation.  Throws InversionError if the iteration does not contract.
std::vector<Series> invert_near_identity(const std::vector<std::pair<int, Series>>& f,
                                         const NormWeights& w, double tol = 1e-13,
                                         int max_iter = 64);

}  // namespace kam

#endif  // KAMLAB_SERIES_HPP
