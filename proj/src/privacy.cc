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

#include "spdl/privacy.h"

#include <cmath>

#include "spdl/error.h"

namespace spdl {

double CalibrateSigma(double clip, std::int64_t rounds, double gamma,
                      double epsilon, double delta) {
  if (!(clip >= 0.0) || !std::isfinite(clip)) {
    throw InvalidArgument("clip norm must be finite and nonnegative");
  }
  if (rounds < 1) throw InvalidArgument("rounds must be at least 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gamma must be positive");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
  const double radicand = 2.0 * std::log(1.25 / delta);
  return clip * static_cast<double>(rounds) * gamma * std::sqrt(radicand) /
         epsilon;
}

DpConfig DpConfig::Calibrated(double epsilon, double delta, double clip,
                              double gamma, std::int64_t rounds,
                              CalibrationMode mode) {
  DpConfig c;
  c.epsilon = epsilon;
  c.delta = delta;
  c.clip = clip;
  c.gamma = gamma;
  c.rounds = rounds;
  c.mode = mode;
  c.sigma = CalibrateSigma(
      clip, mode == CalibrationMode::kWholeRun ? rounds : 1, gamma, epsilon,
      delta);
  return c;
}

void DpConfig::Validate() const {
  const double bound = CalibrateSigma(
      clip, mode == CalibrationMode::kWholeRun ? rounds : 1, gamma, epsilon,
      delta);
  if (!(sigma >= bound)) {
    throw InvalidArgument("sigma " + std::to_string(sigma) +
                          " is below the calibrated bound " +
                          std::to_string(bound));
  }
}

GradientVector ClipGradient(const GradientVector& g, double clip) {
  if (!(clip > 0.0)) throw InvalidArgument("clip norm must be positive");
  if (!AllFinite(g.values)) throw InvalidArgument("non-finite gradient");
  const double norm = Norm(g.values);
  if (norm <= clip) return g;
  GradientVector out = g;
  const double scale = clip / norm;
  for (double& v : out.values) v *= scale;
  return out;
}

GradientVector Perturb(const GradientVector& g, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be nonnegative");
  GradientVector out = g;
  if (sigma == 0.0) return out;
  for (double& v : out.values) v += sigma * rng.Gaussian();
  return out;
}

}  // namespace spdl
