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

#ifndef SPDL_GAR_H_
#define SPDL_GAR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spdl/learning.h"

namespace spdl {

enum class GarKind { kKrum, kMedian, kAverage };

std::string GarName(GarKind kind);
GarKind ParseGarKind(const std::string& name);

struct GarSpec {
  GarKind kind = GarKind::kKrum;
  int f = 0;  // declared Byzantine count
};

// Dense symmetric n x n matrix, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> entries;
  double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

DistanceMatrix PairwiseSqDistances(std::span<const GradientVector> grads);

// score(i) = sum of the n - f - 2 smallest squared distances from g_i to the
// other inputs.
std::vector<double> KrumScores(std::span<const GradientVector> grads, int f);

struct KrumSelection {
  std::size_t index = 0;
  GradientVector gradient;
};

// Requires n >= f + 3. Ties go to the lowest index.
KrumSelection KrumSelect(std::span<const GradientVector> grads, int f);

// Coordinate-wise median; even counts average the two middle values.
GradientVector MedianAggregate(std::span<const GradientVector> grads);
GradientVector AverageAggregate(std::span<const GradientVector> grads);

GradientVector Aggregate(const GarSpec& spec,
                         std::span<const GradientVector> grads);

}  // namespace spdl

#endif  // SPDL_GAR_H_
