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
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spdl/error.h"
#include "spdl/rng.h"

namespace spdl {
namespace {

std::vector<GradientVector> Scalars(std::initializer_list<double> xs) {
  std::vector<GradientVector> out;
  for (double x : xs) out.push_back(GradientVector(std::vector<double>{x}));
  return out;
}

std::vector<GradientVector> RandomGrads(Rng& rng, std::size_t n,
                                        std::size_t d) {
  std::vector<GradientVector> out(n, GradientVector(d));
  for (auto& g : out) {
    for (double& v : g.values) v = rng.Gaussian();
  }
  return out;
}

// Independent scorer: every distance recomputed, neighbors by full sort.
std::vector<double> BruteForceScores(const std::vector<GradientVector>& g,
                                     int f) {
  const std::size_t n = g.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (std::size_t k = 0; k < g[i].dim(); ++k) {
        const double diff = g[i].values[k] - g[j].values[k];
        s += diff * diff;
      }
      d.push_back(s);
    }
    std::sort(d.begin(), d.end());
    double total = 0;
    for (std::size_t k = 0; k < n - f - 2; ++k) total += d[k];
    scores[i] = total;
  }
  return scores;
}

TEST(GarTest, PairwiseDistances) {
  const auto m = PairwiseSqDistances(Scalars({0, 3}));
  EXPECT_EQ(m.at(0, 1), 9.0);
  EXPECT_EQ(m.at(1, 0), 9.0);
  EXPECT_EQ(m.at(0, 0), 0.0);
  const auto z = PairwiseSqDistances(Scalars({2, 2}));
  EXPECT_EQ(z.entries, std::vector<double>(4, 0.0));

  Rng rng(1, 1);
  const auto g = RandomGrads(rng, 6, 4);
  const auto d = PairwiseSqDistances(g);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        s += (g[i].values[k] - g[j].values[k]) * (g[i].values[k] - g[j].values[k]);
      }
      EXPECT_EQ(d.at(i, j), s);
    }
  }
  EXPECT_THROW(PairwiseSqDistances(Scalars({1})), InvalidArgument);
  std::vector<GradientVector> mixed = {GradientVector(2), GradientVector(3)};
  EXPECT_THROW(PairwiseSqDistances(mixed), InvalidArgument);
}

TEST(GarTest, KrumWorkedExamples) {
  const auto a = Scalars({0.0, 0.1, 0.2, 10.0});
  const auto sa = KrumScores(a, 1);
  EXPECT_NEAR(sa[0], 0.01, 1e-15);
  EXPECT_NEAR(sa[1], 0.01, 1e-15);
  EXPECT_NEAR(sa[2], 0.01, 1e-15);
  EXPECT_NEAR(sa[3], 96.04, 1e-12);
  EXPECT_EQ(KrumSelect(a, 1).index, 0u);
  EXPECT_EQ(KrumSelect(a, 1).gradient.values[0], 0.0);

  const auto b = Scalars({1, 2, 3, 4, 100});
  EXPECT_EQ(KrumScores(b, 1), (std::vector<double>{5, 2, 2, 5, 18625}));
  EXPECT_EQ(KrumSelect(b, 1).index, 1u);
  EXPECT_EQ(KrumSelect(b, 1).gradient.values[0], 2.0);
}

TEST(GarTest, KrumAllEqualPicksFirst) {
  std::vector<GradientVector> g(5, GradientVector(std::vector<double>{1.5, -2.0}));
  const auto s = KrumSelect(g, 2);
  EXPECT_EQ(s.index, 0u);
  EXPECT_EQ(s.gradient, g[0]);
}

TEST(GarTest, KrumRequiresEnoughInputs) {
  EXPECT_THROW(KrumSelect(Scalars({1, 2, 3}), 1), InvalidArgument);
  EXPECT_THROW(KrumSelect(Scalars({1, 2, 3, 4}), -1), InvalidArgument);
  EXPECT_NO_THROW(KrumSelect(Scalars({1, 2, 3, 4}), 1));
}

TEST(GarTest, KrumMatchesBruteForceAndSelectsAnInput) {
  Rng rng(2, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int f = static_cast<int>(rng.Below(4));
    const std::size_t n = f + 3 + rng.Below(12 - (f + 3) + 1);
    const std::size_t d = 1 + rng.Below(8);
    const auto g = RandomGrads(rng, n, d);
    const auto oracle = BruteForceScores(g, f);
    const auto best = static_cast<std::size_t>(
        std::min_element(oracle.begin(), oracle.end()) - oracle.begin());
    const auto got = KrumSelect(g, f);
    ASSERT_EQ(got.index, best) << "trial " << trial;
    ASSERT_EQ(got.gradient, g[best]);
  }
}

TEST(GarTest, KrumScoreMultisetIsPermutationInvariant) {
  Rng rng(3, 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto g = RandomGrads(rng, 9, 3);
    auto before = KrumScores(g, 2);
    for (std::size_t i = g.size(); i > 1; --i) {
      std::swap(g[i - 1], g[rng.Below(i)]);
    }
    auto after = KrumScores(g, 2);
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_NEAR(before[i], after[i], 1e-12 * std::max(1.0, before[i]));
    }
  }
}

TEST(GarTest, KrumNeverSelectsFarOutliers) {
  Rng rng(4, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int f = 1 + static_cast<int>(rng.Below(3));
    const std::size_t n = f + 3 + rng.Below(12 - (f + 3) + 1);
    const std::size_t d = 1 + rng.Below(6);
    const double r = 0.1 + rng.Uniform();
    std::vector<GradientVector> g(n, GradientVector(d));
    for (std::size_t i = 0; i < n - f; ++i) {
      // Uniform in the radius-r ball around the origin (direction times
      // a radius no larger than r).
      double norm = 0;
      for (double& v : g[i].values) {
        v = rng.Gaussian();
        norm += v * v;
      }
      const double scale = r * rng.Uniform() / std::sqrt(norm);
      for (double& v : g[i].values) v *= scale;
    }
    for (std::size_t i = n - f; i < n; ++i) {
      double norm = 0;
      for (double& v : g[i].values) {
        v = rng.Gaussian();
        norm += v * v;
      }
      // Outliers sit on spheres far from the ball and from each other.
      const double dist = (3.0 * (n + 1) * (i - (n - f) + 1) + rng.Uniform()) * r;
      for (double& v : g[i].values) v *= dist / std::sqrt(norm);
    }
    ASSERT_LT(KrumSelect(g, f).index, n - f) << "trial " << trial;
  }
}

TEST(GarTest, KrumTranslationEquivariance) {
  Rng rng(5, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = RandomGrads(rng, 7, 3);
    std::vector<GradientVector> shifted = g;
    // Power-of-two shift keeps the arithmetic exact enough to compare.
    const double c[3] = {4.0, -8.0, 0.5};
    for (auto& v : shifted) {
      for (std::size_t k = 0; k < 3; ++k) v.values[k] += c[k];
    }
    const auto a = KrumSelect(g, 1);
    const auto b = KrumSelect(shifted, 1);
    EXPECT_EQ(a.index, b.index);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(b.gradient.values[k], a.gradient.values[k] + c[k], 1e-12);
    }
  }
}

TEST(GarTest, Median) {
  EXPECT_EQ(MedianAggregate(Scalars({7})).values[0], 7.0);
  EXPECT_EQ(MedianAggregate(Scalars({1, 2, 100})).values[0], 2.0);
  EXPECT_EQ(MedianAggregate(Scalars({1, 2, 4, 100})).values[0], 3.0);
  EXPECT_THROW(MedianAggregate(std::vector<GradientVector>{}), InvalidArgument);

  Rng rng(6, 1);
  const auto g = RandomGrads(rng, 7, 5);
  const auto m = MedianAggregate(g);
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<double> col;
    for (const auto& v : g) col.push_back(v.values[k]);
    std::sort(col.begin(), col.end());
    EXPECT_EQ(m.values[k], col[3]);
  }
}

TEST(GarTest, Average) {
  EXPECT_EQ(AverageAggregate(std::vector<GradientVector>{
                GradientVector(std::vector<double>{0, 0}), GradientVector(std::vector<double>{2, 4})}),
            GradientVector(std::vector<double>{1, 2}));
  std::vector<GradientVector> same(6, GradientVector(std::vector<double>{0.3, -1.1}));
  const auto a = AverageAggregate(same);
  EXPECT_NEAR(a.values[0], 0.3, 1e-15);
  EXPECT_NEAR(a.values[1], -1.1, 1e-15);
  EXPECT_THROW(AverageAggregate(std::vector<GradientVector>{}),
               InvalidArgument);

  Rng rng(7, 1);
  const auto g = RandomGrads(rng, 50, 4);
  const auto avg = AverageAggregate(g);
  for (std::size_t k = 0; k < 4; ++k) {
    // Kahan-compensated reference sum.
    double sum = 0, comp = 0;
    for (const auto& v : g) {
      const double y = v.values[k] - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    EXPECT_NEAR(avg.values[k], sum / 50, 1e-12);
  }
}

TEST(GarTest, NamesAndDispatch) {
  EXPECT_EQ(ParseGarKind("krum"), GarKind::kKrum);
  EXPECT_EQ(ParseGarKind("median"), GarKind::kMedian);
  EXPECT_EQ(ParseGarKind("average"), GarKind::kAverage);
  EXPECT_EQ(GarName(GarKind::kMedian), "median");
  EXPECT_THROW(ParseGarKind("bulyan"), ConfigurationError);
  const auto b = Scalars({1, 2, 3, 4, 100});
  EXPECT_EQ(Aggregate({GarKind::kKrum, 1}, b).values[0], 2.0);
  EXPECT_EQ(Aggregate({GarKind::kMedian, 1}, b).values[0], 3.0);
  EXPECT_EQ(Aggregate({GarKind::kAverage, 1}, b).values[0], 22.0);
}

}  // namespace
}  // namespace spdl
