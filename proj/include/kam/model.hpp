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

#ifndef KAMLAB_MODEL_HPP
#define KAMLAB_MODEL_HPP

#include <array>
#include <optional>
#include <string>

#include "kam/bnf.hpp"
#include "kam/counterterm.hpp"
#include "kam/diffusion.hpp"
#include "kam/series.hpp"

namespace kam::app {

inline constexpr const char* kVersion = "kamlab 0.1.0";

/// Golden 2d frequency pair (1, (1+sqrt 5)/2).
std::vector<double> golden_pair();

struct DriftSpec {
  std::array<double, 4> omega0;
  int n_lo = -3, n_hi = 9;
  double growth = 1.7, overlap = 0.5;
  double eps = 1e-3;
  int s = 2;
  double eta = 1e-7;
  bool gevrey = false;
};

struct ModelFile {
  int d = 0;
  std::vector<double> omega0;
  std::string preset;  // empty when the series came from a file
  // series-based models
  std::optional<Series> H;
  bnf::Workspace ws{16, 6};
  NormWeights weights{0.10, 0.30};
  // drift (diffusion) models
  std::optional<DriftSpec> drift;

  const Series& series() const {
    if (!H) throw ValidationError("model: no Hamiltonian series (drift model?)");
    return *H;
  }
};

/// Presets: integrable-golden, perturbed-golden, degenerate-j1,
/// russmann-type, liouville-kolmogorov, drift-d4.  `eps` scales the
/// perturbation where the preset has one.
ModelFile make_preset(const std::string& name, double eps = 1e-3);

ModelFile parse_model_json(const std::string& text);
ModelFile parse_model(const std::string& path);
std::string model_to_json(const ModelFile& m);

/// FNV-1a over the canonical dump; reports embed it for reproducibility.
std::string config_hash(const std::string& canonical);

/// 17-significant-digit float formatting shared by every CSV writer.
std::string fmt17(double x);

ct::MachineConfig machine_config_for(const ModelFile& m);

}  // namespace kam::app

#endif  // KAMLAB_MODEL_HPP
