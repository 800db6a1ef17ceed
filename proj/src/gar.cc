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

#include "spdl/gar.h"

#include <algorithm>

#include "spdl/error.h"

namespace spdl {
namespace {

std::size_t CommonDim(std::span<const GradientVector> grads) {
  if (grads.empty()) throw InvalidArgument("aggregation of an empty set");
  const std::size_t d = grads[0].dim();
  for (const auto& g : grads) {
    if (g.dim() != d) {
      throw InvalidArgument("gradients have mismatched dimensions");
    }
  }
  return d;
}

}  // namespace

std::string GarName(GarKind kind) {
  switch (kind) {
    case GarKind::kKrum:
      return "krum";
    case GarKind::kMedian:
      return "median";
    case GarKind::kAverage:
      return "average";
  }
  return "?";
}

GarKind ParseGarKind(const std::string& name) {
  if (name == "krum") return GarKind::kKrum;
  if (name == "median") return GarKind::kMedian;
  if (name == "average") return GarKind::kAverage;
  throw ConfigurationError("unknown aggregation rule '" + name + "'");
}

DistanceMatrix PairwiseSqDistances(std::span<const GradientVector> grads) {
  if (grads.size() < 2) {
    throw InvalidArgument("pairwise distances need at least two gradients");
  }
  CommonDim(grads);
  DistanceMatrix m;
  m.n = grads.size();
  m.entries.assign(m.n * m.n, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      const double d = SquaredDistance(grads[i].values, grads[j].values);
      m.entries[i * m.n + j] = d;
      m.entries[j * m.n + i] = d;
    }
  }
  return m;
}

std::vector<double> KrumScores(std::span<const GradientVector> grads, int f) {
  const std::size_t n = grads.size();
  if (f < 0) throw InvalidArgument("f must be nonnegative");
  if (n < static_cast<std::size_t>(f) + 3) {
    throw InvalidArgument("krum needs n >= f + 3 (n = " + std::to_string(n) +
                          ", f = " + std::to_string(f) + ")");
  }
  const DistanceMatrix m = PairwiseSqDistances(grads);
  const std::size_t neighbours = n - static_cast<std::size_t>(f) - 2;
  std::vector<double> scores(n);
  std::vector<double> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(m.at(i, j));
    }
    std::partial_sort(row.begin(), row.begin() + neighbours, row.end());
    double s = 0.0;
    for (std::size_t k = 0; k < neighbours; ++k) s += row[k];
    scores[i] = s;
  }
  return scores;
}

KrumSelection KrumSelect(std::span<const GradientVector> grads, int f) {
  const std::vector<double> scores = KrumScores(grads, f);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return KrumSelection{best, grads[best]};
}

GradientVector MedianAggregate(std::span<const GradientVector> grads) {
  const std::size_t d = CommonDim(grads);
  const std::size_t n = grads.size();
  GradientVector out(d);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = grads[i].values[j];
    auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(column.begin(), mid, column.end());
    if (n % 2 == 1) {
      out.values[j] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(column.begin(), mid);
      out.values[j] = 0.5 * (lower + upper);
    }
  }
  return out;
}

GradientVector AverageAggregate(std::span<const GradientVector> grads) {
  const std::size_t d = CommonDim(grads);
  GradientVector out(d);
  for (const auto& g : grads) {
    for (std::size_t j = 0; j < d; ++j) out.values[j] += g.values[j];
  }
  const double inv = 1.0 / static_cast<double>(grads.size());
  for (double& v : out.values) v *= inv;
  return out;
}

GradientVector Aggregate(const GarSpec& spec,
                         std::span<const GradientVector> grads) {
  switch (spec.kind) {
    case GarKind::kKrum:
      return KrumSelect(grads, spec.f).gradient;
    case GarKind::kMedian:
      return MedianAggregate(grads);
    case GarKind::kAverage:
      return AverageAggregate(grads);
  }
  throw InvalidArgument("unknown aggregation rule");
}

}  // namespace spdl
