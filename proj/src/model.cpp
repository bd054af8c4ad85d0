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

#include "kam/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kam::app {

using nlohmann::json;

std::vector<double> golden_pair() { return {1.0, 0.5 * (1.0 + std::sqrt(5.0))}; }

namespace {

Series quadratic_plus(const std::vector<double>& omega, int N, int q) {
  const int d = static_cast<int>(omega.size());
  Series H = Series::make(d, N, q);
  std::vector<int> zn(d, 0), alpha(d, 0);
  for (int i = 0; i < d; ++i) {
    alpha.assign(d, 0);
    alpha[i] = 1;
    H.set(zn, alpha, Complex(omega[i], 0.0));
    alpha[i] = 2;
    H.set(zn, alpha, Complex(0.5, 0.0));
  }
  return H;
}

void add_cos_term(Series& H, const std::vector<int>& n, const std::vector<int>& alpha,
                  double amp) {
  H.set(n, alpha, Complex(0.5 * amp, 0.0));  // the mirror term comes with set()
}

ModelFile preset_integrable(double) {
  ModelFile m;
  m.d = 2;
  m.omega0 = golden_pair();
  m.H = quadratic_plus(m.omega0, 16, 6);
  return m;
}

ModelFile preset_perturbed(double eps) {
  ModelFile m;
  m.d = 2;
  m.omega0 = golden_pair();
  Series H = quadratic_plus(m.omega0, 16, 6);
  add_cos_term(H, {1, 0}, {0, 2}, eps);  // eps cos(2 pi phi1) r2^2
  m.H = H;
  return m;
}

ModelFile preset_degenerate_j1(double eps) {
  ModelFile m;
  m.d = 2;
  m.omega0 = golden_pair();
  Series H = Series::make(2, 16, 6);
  H.set({0, 0}, {1, 0}, Complex(m.omega0[0], 0.0));
  H.set({0, 0}, {0, 1}, Complex(m.omega0[1], 0.0));
  H.set({0, 0}, {2, 0}, Complex(0.5, 0.0));
  add_cos_term(H, {1, 0}, {2, 0}, eps);  // keeps the r2-direction flat
  m.H = H;
  return m;
}

ModelFile preset_russmann(double eps) {
  ModelFile m;
  m.d = 2;
  m.omega0 = golden_pair();
  const auto& w = m.omega0;
  Series H = Series::make(2, 16, 6);
  H.set({0, 0}, {1, 0}, Complex(w[0], 0.0));
  H.set({0, 0}, {0, 1}, Complex(w[1], 0.0));
  // 1/2 <w, r>^2 so that dN = (1 + <w, r>) w
  H.set({0, 0}, {2, 0}, Complex(0.5 * w[0] * w[0], 0.0));
  H.set({0, 0}, {1, 1}, Complex(w[0] * w[1], 0.0));
  H.set({0, 0}, {0, 2}, Complex(0.5 * w[1] * w[1], 0.0));
  add_cos_term(H, {1, 0}, {2, 0}, eps * w[0] * w[0]);
  add_cos_term(H, {1, 0}, {1, 1}, 2.0 * eps * w[0] * w[1]);
  add_cos_term(H, {1, 0}, {0, 2}, eps * w[1] * w[1]);
  m.H = H;
  return m;
}

ModelFile preset_liouville(double eps) {
  ModelFile m;
  m.d = 2;
  dio::LiouvilleTarget t;
  t.kind = dio::LiouvilleTarget::Kind::Value;
  t.value = 1e-10;
  t.min_scale = 40;
  auto pair = dio::build_liouville_pair({1.22, 1.0}, {t}, 0.05);
  m.omega0 = pair.omega;
  Series H = quadratic_plus(m.omega0, 16, 6);
  // geometric Fourier decay out to mode 12 so the Lemma-9.1 cut bites
  for (int k = 1; k <= 12; ++k) {
    double amp = eps * std::exp(-0.5 * k);
    add_cos_term(H, {k, 0}, {2, 0}, amp);
    add_cos_term(H, {k, 1}, {0, 2}, amp);
  }
  m.H = H;
  m.ws = {20, 6};
  return m;
}

ModelFile preset_drift(double eps) {
  ModelFile m;
  m.d = 4;
  DriftSpec ds;
  ds.omega0 = {1.05, 1.42, 1.83, 0.77};
  ds.eps = eps;
  m.omega0.assign(ds.omega0.begin(), ds.omega0.end());
  m.drift = ds;
  return m;
}

}  // namespace

ModelFile make_preset(const std::string& name, double eps) {
  ModelFile m;
  if (name == "integrable-golden")
    m = preset_integrable(eps);
  else if (name == "perturbed-golden")
    m = preset_perturbed(eps);
  else if (name == "degenerate-j1")
    m = preset_degenerate_j1(eps);
  else if (name == "russmann-type")
    m = preset_russmann(eps);
  else if (name == "liouville-kolmogorov")
    m = preset_liouville(eps);
  else if (name == "drift-d4")
    m = preset_drift(eps);
  else
    throw ValidationError("unknown preset: " + name);
  m.preset = name;
  return m;
}

namespace {

void validate_series_model(const ModelFile& m) {
  auto w = bnf::extract_omega0(m.series());
  if (static_cast<int>(w.size()) != m.d)
    throw ValidationError("model: omega0 arity does not match d");
  for (int i = 0; i < m.d; ++i) {
    if (std::abs(w[i] - m.omega0[i]) > 1e-12 * std::max(1.0, std::abs(w[i]))) {
      std::ostringstream os;
      os << "model: omega0[" << i << "] = " << m.omega0[i]
         << " does not match the degree-1 coefficient " << w[i] << " (alpha = e_" << i + 1
         << ", n = 0)";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

ModelFile parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model: malformed JSON: ") + e.what());
  }
  ModelFile m;
  m.d = j.at("d").get<int>();
  m.omega0 = j.at("omega0").get<std::vector<double>>();
  if (static_cast<int>(m.omega0.size()) != m.d)
    throw ValidationError("model: omega0 arity does not match d");

  if (j.contains("workspace")) {
    m.ws.N = j["workspace"].at("N").get<int>();
    m.ws.q = j["workspace"].at("q").get<int>();
  }
  if (j.contains("weights"))
    m.weights = NormWeights(j["weights"].at("rho").get<double>(),
                            j["weights"].at("delta").get<double>());

  if (j.contains("drift")) {
    DriftSpec ds;
    const auto& dj = j["drift"];
    if (m.d != 4) throw ValidationError("model: drift models need d = 4");
    for (int i = 0; i < 4; ++i) ds.omega0[i] = m.omega0[i];
    const auto& cj = dj.at("cover");
    ds.n_lo = cj.at("n_lo").get<int>();
    ds.n_hi = cj.at("n_hi").get<int>();
    ds.growth = cj.at("growth").get<double>();
    ds.overlap = cj.value("overlap", 0.5);
    ds.eps = dj.value("eps", 1e-3);
    ds.s = dj.value("s", 2);
    ds.eta = dj.value("eta", 1e-7);
    ds.gevrey = dj.value("gevrey", false);
    m.drift = ds;
    return m;
  }

  const auto& hj = j.at("hamiltonian");
  if (hj.contains("preset")) {
    double eps = 1e-3;
    if (hj.contains("params") && hj["params"].contains("eps"))
      eps = hj["params"]["eps"].get<double>();
    ModelFile p = make_preset(hj["preset"].get<std::string>(), eps);
    p.ws = m.ws;
    p.weights = m.weights;
    if (j.contains("omega0") && p.preset != "liouville-kolmogorov" &&
        p.preset != "drift-d4") {
      // presets own their omega0; tolerate a matching echo in the file
      for (int i = 0; i < p.d && i < static_cast<int>(m.omega0.size()); ++i)
        if (std::abs(m.omega0[i] - p.omega0[i]) > 1e-12)
          throw ValidationError("model: omega0 does not match the preset");
    }
    return p;
  }
  if (hj.contains("series")) {
    m.H = Series::from_json(hj["series"].dump());
    validate_series_model(m);
    return m;
  }
  throw ValidationError("model: hamiltonian needs either a preset or a series");
}

ModelFile parse_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

std::string model_to_json(const ModelFile& m) {
  json j;
  j["d"] = m.d;
  j["omega0"] = m.omega0;
  j["workspace"] = {{"N", m.ws.N}, {"q", m.ws.q}};
  j["weights"] = {{"rho", m.weights.rho}, {"delta", m.weights.delta}};
  if (m.drift) {
    j["drift"] = {{"cover",
                   {{"n_lo", m.drift->n_lo},
                    {"n_hi", m.drift->n_hi},
                    {"growth", m.drift->growth},
                    {"overlap", m.drift->overlap}}},
                  {"eps", m.drift->eps},
                  {"s", m.drift->s},
                  {"eta", m.drift->eta},
                  {"gevrey", m.drift->gevrey}};
  } else if (!m.preset.empty()) {
    j["hamiltonian"] = {{"preset", m.preset}};
  } else {
    j["hamiltonian"] = {{"series", json::parse(m.series().to_json())}};
  }
  return j.dump(2);
}

std::string config_hash(const std::string& canonical) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

ct::MachineConfig machine_config_for(const ModelFile& m) {
  ct::MachineConfig cfg;
  cfg.w = m.weights;
  cfg.ws = m.ws;
  return cfg;
}

}  // namespace kam::app
