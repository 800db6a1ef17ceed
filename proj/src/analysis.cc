//
// Copyright 2026 The SPDL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "spdl/analysis.h"

#include <algorithm>
#include <cmath>

#include "spdl/error.h"
#include "spdl/gar.h"

namespace spdl {
namespace {

void CheckCommon(const AnalysisParams& p) {
  if (p.f < 0 || p.d < 1) throw InvalidArgument("need f >= 0 and d >= 1");
  if (p.g_norm < 0 || p.sigma_f_sq < 0 || p.sigma_sq < 0 || p.clip < 0 ||
      p.L1 < 0) {
    throw InvalidArgument("analysis parameters must be nonnegative");
  }
}

}  // namespace

double DpNoiseVariance(const AnalysisParams& p) {
  if (!(p.epsilon > 0) || !(p.delta > 0 && p.delta < 1)) {
    throw InvalidArgument("need epsilon > 0 and delta in (0, 1)");
  }
  return 2.0 * p.clip * p.clip * std::log(1.25 / p.delta) /
         (p.epsilon * p.epsilon);
}

bool CheckResiliencePreconditions(const AnalysisParams& p) {
  CheckCommon(p);
  if (p.f == 0) return true;
  const double d = p.d;
  const double scaled = p.g_norm * p.g_norm * std::pow(p.f, -0.75);
  if (!(scaled > 18.0 * d * p.sigma_f_sq)) return false;
  const double c2 = std::sqrt(scaled / (18.0 * d) - p.sigma_f_sq);
  return p.epsilon > std::sqrt(2.0 * p.clip * std::log(1.25 / p.delta)) / c2;
}

double ComputeK(const AnalysisParams& p) {
  CheckCommon(p);
  if (!(p.g_norm > 0)) throw InvalidArgument("g_norm must be positive");
  if (p.f == 0) return 1.0;
  const double coeff = 3.0 * std::sqrt(2.0) * std::pow(p.f, 1.5) *
                       std::sqrt(static_cast<double>(p.d)) / p.g_norm;
  return 1.0 - coeff * (p.sigma_f_sq + DpNoiseVariance(p));
}

double ComputeRegretCoefficient(const AnalysisParams& p) {
  CheckCommon(p);
  if (p.L1 >= 1.0) throw InvalidArgument("L1 must be below 1");
  if (p.f == 0) return 0.0;
  return 6.0 * p.L1 * std::pow(p.f, 1.5) *
         std::sqrt(p.d * (p.sigma_sq + p.sigma_f_sq)) / (1.0 - p.L1);
}

MonteCarloEstimate MonteCarloResilience(const AnalysisParams& p,
                                        const AdversaryStrategy& adversary,
                                        int trials, Rng& rng, int nodes) {
  CheckCommon(p);
  if (trials < 1) throw InvalidArgument("trials must be positive");
  if (!(p.g_norm > 0)) throw InvalidArgument("g_norm must be positive");
  const int n = nodes > 0 ? nodes : std::max(3 * p.f + 1, p.f + 3);
  if (n < p.f + 3) throw InvalidArgument("krum needs n >= f + 3");
  const auto d = static_cast<std::size_t>(p.d);
  const double per_coord = std::sqrt((p.sigma_f_sq + p.sigma_sq) / p.d);
  GradientVector g(std::vector<double>(d, p.g_norm / std::sqrt(p.d)));
  const double g_sq = p.g_norm * p.g_norm;

  std::vector<GradientVector> inputs(n, GradientVector(d));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    for (int i = 0; i < n - p.f; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        inputs[i].values[j] = g.values[j] + per_coord * rng.Gaussian();
      }
    }
    for (int i = n - p.f; i < n; ++i) {
      GradientVector own = g;
      for (double& v : own.values) v += per_coord * rng.Gaussian();
      inputs[i] = adversary.Apply(own, rng);
    }
    const GradientVector h = KrumSelect(inputs, p.f).gradient;
    const double r = Dot(h.values, g.values) / g_sq;
    sum += r;
    sum_sq += r * r;
  }
  MonteCarloEstimate out;
  out.nodes = n;
  out.estimate = sum / trials;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - trials * out.estimate *
                                                             out.estimate) /
                                                    (trials - 1))
                                : 0.0;
  out.std_error = std::sqrt(var / trials);
  return out;
}

}  // namespace spdl
