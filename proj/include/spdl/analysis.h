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

#ifndef SPDL_ANALYSIS_H_
#define SPDL_ANALYSIS_H_

#include <cstdint>

#include "spdl/netsim.h"
#include "spdl/rng.h"

namespace spdl {

struct AnalysisParams {
  int f = 0;                // Byzantine count
  int d = 1;                // gradient dimension
  double g_norm = 1.0;      // true-gradient norm
  double sigma_f_sq = 0.0;  // honest gradient variance bound
  double sigma_sq = 0.0;    // DP noise variance
  double clip = 1.0;
  double epsilon = 1.0;
  double delta = 1e-6;
  double L1 = 0.0;          // Lipschitz constant, must be < 1 for regret
  std::int64_t T = 1;
};

// Resilience preconditions on gradient size and on epsilon. Vacuously true
// for f = 0.
bool CheckResiliencePreconditions(const AnalysisParams& p);

// 1 - (3 sqrt2 f^1.5 sqrt(d) / |g|) (sigma_f^2 + 2 C^2 ln(1.25/delta) / eps^2).
// Returned as-is even when nonpositive.
double ComputeK(const AnalysisParams& p);

// 6 L1 f^1.5 sqrt(d (sigma^2 + sigma_f^2)) / (1 - L1); regret <= rho sqrt(T).
double ComputeRegretCoefficient(const AnalysisParams& p);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int nodes = 0;
};

// Total DP noise variance matching the k formula: 2 C^2 ln(1.25/delta)/eps^2.
double DpNoiseVariance(const AnalysisParams& p);

// Estimates <E h, g> / |g|^2 for Krum over n = max(3f+1, f+3) inputs
// (or `nodes` when positive). Honest inputs are g plus isotropic noise of
// total variance sigma_f^2 + sigma^2; f inputs follow `adversary`, applied
// to a fresh honest-looking sample.
MonteCarloEstimate MonteCarloResilience(const AnalysisParams& p,
                                        const AdversaryStrategy& adversary,
                                        int trials, Rng& rng, int nodes = 0);

}  // namespace spdl

#endif  // SPDL_ANALYSIS_H_
