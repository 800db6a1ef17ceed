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

#ifndef SPDL_PRIVACY_H_
#define SPDL_PRIVACY_H_

#include <cstdint>

#include "spdl/learning.h"
#include "spdl/rng.h"

namespace spdl {

// How epsilon is interpreted when deriving sigma. kWholeRun treats epsilon as
// the budget for all T rounds of gradient exchange; kPerRound treats it as
// the budget of a single exchange (T = 1 in the bound).
enum class CalibrationMode { kWholeRun, kPerRound };

struct DpConfig {
  double epsilon = 0.02;
  double delta = 1e-6;
  double clip = 1.0;  // L2 sensitivity bound C, enforced by clipping.
  double gamma = 0.1;
  std::int64_t rounds = 1;
  CalibrationMode mode = CalibrationMode::kWholeRun;
  double sigma = 0.0;

  // Config with sigma set to the smallest value the bound allows.
  static DpConfig Calibrated(double epsilon, double delta, double clip,
                             double gamma, std::int64_t rounds,
                             CalibrationMode mode = CalibrationMode::kWholeRun);

  // Throws InvalidArgument when sigma is below the bound or a field is out
  // of range.
  void Validate() const;
};

// sigma >= C * T * gamma * sqrt(2 ln(1.25 / delta)) / epsilon, returned with
// equality.
double CalibrateSigma(double clip, std::int64_t rounds, double gamma,
                      double epsilon, double delta);

// Scales g onto the L2 ball of radius `clip` when it lies outside.
GradientVector ClipGradient(const GradientVector& g, double clip);

// g + N(0, sigma^2 I). sigma == 0 returns g unchanged without consuming rng.
GradientVector Perturb(const GradientVector& g, double sigma, Rng& rng);

}  // namespace spdl

#endif  // SPDL_PRIVACY_H_
