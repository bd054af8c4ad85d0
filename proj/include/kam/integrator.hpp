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

#ifndef KAMLAB_INTEGRATOR_HPP
#define KAMLAB_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace kam {

/// Adaptive Dormand-Prince 5(4) integrator.  `rhs(t, y, dydt)` fills the
/// derivative; `observer(t, y)` runs after each accepted step.
class Rk45 {
 public:
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 1.0;

  using Rhs = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;
  using Observer = std::function<void(double, const std::vector<double>&)>;

  void integrate(const Rhs& rhs, std::vector<double>& y, double t0, double t1,
                 const Observer& observer = nullptr) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    const std::size_t n = y.size();
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    double t = t0;
    double h = std::clamp(h_init, h_min, h_max) * dir;
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y5(n);

    if (observer) observer(t, y);
    rhs(t, y, k1);
    while (dir * (t1 - t) > 0.0) {
      if (dir * (t + h - t1) > 0.0) h = t1 - t;
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * a21 * k1[i];
      rhs(t + c2 * h, yt, k2);
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      rhs(t + c3 * h, yt, k3);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      rhs(t + c4 * h, yt, k4);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      rhs(t + c5 * h, yt, k5);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
      rhs(t + h, yt, k6);
      for (std::size_t i = 0; i < n; ++i)
        y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      rhs(t + h, y5, k7);

      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double y4 = y[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                e6 * k6[i] + e7 * k7[i]);
        double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err = std::max(err, std::abs(y5[i] - y4) / sc);
      }
      if (err <= 1.0) {
        t += h;
        y = y5;
        k1 = k7;  // FSAL
        if (observer) observer(t, y);
      }
      double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, 5.0);
      h *= fac;
      if (std::abs(h) < h_min) h = h_min * dir;
      if (std::abs(h) > h_max) h = h_max * dir;
    }
  }
};

}  // namespace kam

#endif  // KAMLAB_INTEGRATOR_HPP
