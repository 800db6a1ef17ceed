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

#include "spdl/learning.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spdl/error.h"
#include "spdl/rng.h"

namespace spdl {
namespace {

Dataset RandomClassification(std::size_t n, std::size_t p, std::size_t K,
                             Rng& rng) {
  std::vector<double> x(n * p);
  std::vector<int> y(n);
  for (double& v : x) v = rng.Gaussian();
  for (auto& l : y) l = static_cast<int>(rng.Below(K));
  return Dataset::Classification(p, K, std::move(x), std::move(y));
}

Dataset RandomRegression(std::size_t n, std::size_t p, Rng& rng) {
  std::vector<double> x(n * p);
  std::vector<double> y(n);
  for (double& v : x) v = rng.Gaussian();
  for (double& v : y) v = rng.Gaussian();
  return Dataset::Regression(p, std::move(x), std::move(y));
}

// Central differences on the scalar loss, step h.
GradientVector NumericGradient(const ModelParams& m, const Dataset& d,
                               const Batch& b, const LossSpec& loss,
                               double h) {
  GradientVector g(m.dim());
  for (std::size_t j = 0; j < m.dim(); ++j) {
    ModelParams up = m;
    ModelParams down = m;
    up.values[j] += h;
    down.values[j] -= h;
    g.values[j] =
        (LossValue(up, d, b, loss) - LossValue(down, d, b, loss)) / (2 * h);
  }
  return g;
}

double RelativeError(const GradientVector& a, const GradientVector& b) {
  double diff = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    diff += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
  }
  return std::sqrt(diff) /
         std::max(1e-8, std::max(Norm(a.values), Norm(b.values)));
}

TEST(LearningTest, LeastSquaresGradientVanishesAtGeneratingWeights) {
  Rng rng(3, 1);
  const std::size_t n = 20, p = 4;
  const std::vector<double> w = {0.5, -1.0, 2.0, 0.25};
  std::vector<double> x(n * p), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0;
    for (std::size_t j = 0; j < p; ++j) {
      x[i * p + j] = rng.Gaussian();
      t += w[j] * x[i * p + j];
    }
    y[i] = t;
  }
  const Dataset d = Dataset::Regression(p, x, y);
  const LossSpec loss{LossKind::kLeastSquares, 1, 0.0};
  const GradientVector g =
      ComputeGradient(ModelParams(w), d, FullBatch(d), loss);
  EXPECT_LT(Norm(g.values), 1e-9);
}

TEST(LearningTest, DuplicatedRecordGivesSameGradient) {
  Rng rng(4, 1);
  const Dataset d = RandomClassification(5, 3, 3, rng);
  const LossSpec loss{LossKind::kSoftmaxCrossEntropy, 3, 0.0};
  ModelParams m(loss.ParamDim(3));
  for (double& v : m.values) v = rng.Gaussian();
  const GradientVector one = ComputeGradient(m, d, Batch{{2}}, loss);
  const GradientVector two = ComputeGradient(m, d, Batch{{2, 2}}, loss);
  for (std::size_t i = 0; i < one.dim(); ++i) {
    EXPECT_DOUBLE_EQ(one.values[i], two.values[i]);
  }
}

TEST(LearningTest, SoftmaxThreeRecordsMatchesFiniteDifference) {
  Rng rng(5, 1);
  const Dataset d = RandomClassification(3, 3, 2, rng);
  const LossSpec loss{LossKind::kSoftmaxCrossEntropy, 2, 0.0};
  ASSERT_EQ(loss.ParamDim(3), 6u);
  ModelParams m(6);
  for (double& v : m.values) v = rng.Gaussian();
  const Batch b = FullBatch(d);
  EXPECT_LT(RelativeError(ComputeGradient(m, d, b, loss),
                          NumericGradient(m, d, b, loss, 1e-5)),
            1e-5);
}

TEST(LearningTest, GradientMatchesFiniteDifferenceOnRandomTrials) {
  Rng rng(6, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const bool softmax = trial % 2 == 0;
    const std::size_t p = 1 + rng.Below(5);
    const std::size_t K = 2 + rng.Below(3);
    const Dataset d = softmax ? RandomClassification(12, p, K, rng)
                              : RandomRegression(12, p, rng);
    const LossSpec loss{softmax ? LossKind::kSoftmaxCrossEntropy
                                : LossKind::kLeastSquares,
                        softmax ? K : 1, rng.Uniform() * 0.1};
    ModelParams m(loss.ParamDim(p));
    for (double& v : m.values) v = rng.Gaussian();
    const Batch b = SampleBatch(d, 1 + rng.Below(12), rng);
    EXPECT_LT(RelativeError(ComputeGradient(m, d, b, loss),
                            NumericGradient(m, d, b, loss, 1e-5)),
              1e-4)
        << "trial " << trial;
  }
}

TEST(LearningTest, GradientErrors) {
  Rng rng(7, 1);
  const Dataset d = RandomClassification(4, 3, 2, rng);
  const LossSpec loss{LossKind::kSoftmaxCrossEntropy, 2, 0.0};
  EXPECT_THROW(ComputeGradient(ModelParams(5), d, FullBatch(d), loss),
               ConfigurationError);
  EXPECT_THROW(ComputeGradient(ModelParams(6), d, Batch{}, loss),
               InvalidArgument);
  EXPECT_THROW(ComputeGradient(ModelParams(6), d, Batch{{9}}, loss),
               InvalidArgument);
}

TEST(LearningTest, SgdUpdateArithmetic) {
  const ModelParams x({1.0, 1.0});
  EXPECT_EQ(SgdUpdate(x, GradientVector(std::vector<double>{2.0, -2.0}), 0.5),
            ModelParams(std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(SgdUpdate(x, GradientVector(std::vector<double>{3.0, 7.0}), 0.0), x);
  EXPECT_EQ(SgdUpdate(x, GradientVector(2), 0.3), x);
  EXPECT_THROW(SgdUpdate(x, GradientVector(3), 0.1), InvalidArgument);
}

TEST(LearningTest, SgdUpdateIsLinearInDelta) {
  Rng rng(8, 1);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams x(6);
    GradientVector d1(6), d2(6), mix(6);
    const double a = rng.Gaussian(), b = rng.Gaussian(), gamma = rng.Uniform();
    for (std::size_t i = 0; i < 6; ++i) {
      x.values[i] = rng.Gaussian();
      d1.values[i] = rng.Gaussian();
      d2.values[i] = rng.Gaussian();
      mix.values[i] = a * d1.values[i] + b * d2.values[i];
    }
    const ModelParams got = SgdUpdate(x, mix, gamma);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(got.values[i],
                x.values[i] - gamma * (a * d1.values[i] + b * d2.values[i]));
    }
  }
}

TEST(LearningTest, TestErrorCases) {
  // Class k lives on axis k; the identity model classifies everything.
  const Dataset d = Dataset::Classification(
      2, 2, {1, 0, 0, 1, 2, 0, 0, 3}, {0, 1, 0, 1});
  const LossSpec loss{LossKind::kSoftmaxCrossEntropy, 2, 0.0};
  EXPECT_EQ(TestError(ModelParams(std::vector<double>{1, 0, 0, 1}), d, loss), 0.0);
  EXPECT_EQ(TestError(ModelParams(4), d, loss), 0.5);
  EXPECT_EQ(Predict(ModelParams(4), d.features(1), loss), 0);
  const LossSpec ls{LossKind::kLeastSquares, 1, 0.0};
  EXPECT_THROW(TestError(ModelParams(2), d, ls), UnsupportedOperation);
}

TEST(LearningTest, TestErrorInvariantUnderClassPermutation) {
  Rng rng(9, 1);
  const std::size_t p = 3, K = 3;
  const Dataset d = RandomClassification(40, p, K, rng);
  const LossSpec loss{LossKind::kSoftmaxCrossEntropy, K, 0.0};
  ModelParams m(p * K);
  for (double& v : m.values) v = rng.Gaussian();
  const int perm[3] = {2, 0, 1};
  ModelParams pm(p * K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      pm.values[perm[k] * p + j] = m.values[k * p + j];
    }
  }
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.features(i)) x.push_back(v);
    y.push_back(perm[d.label(i)]);
  }
  const Dataset pd = Dataset::Classification(p, K, x, y);
  const double e = TestError(m, d, loss);
  EXPECT_GE(e, 0.0);
  EXPECT_LE(e, 1.0);
  EXPECT_EQ(e, TestError(pm, pd, loss));
}

TEST(LearningTest, SampleBatchProperties) {
  Rng rng(10, 1);
  const Dataset d = RandomClassification(10, 2, 2, rng);
  Rng a(1, 2);
  const Batch full = SampleBatch(d, 10, a);
  std::vector<std::size_t> sorted = full.indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_THROW(SampleBatch(d, 0, a), InvalidArgument);
  EXPECT_THROW(SampleBatch(d, 11, a), InvalidArgument);
}

TEST(LearningTest, SampleBatchSameSeedSameBatch) {
  Rng rng(11, 1);
  const Dataset d = RandomClassification(30, 2, 2, rng);
  Rng a(77, 3), b(77, 3);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(SampleBatch(d, 7, a).indices, SampleBatch(d, 7, b).indices);
  }
}

TEST(LearningTest, SampleBatchSizeOneIsUniform) {
  Rng rng(12, 1);
  const Dataset d = RandomClassification(10, 2, 2, rng);
  Rng r(5, 9);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[SampleBatch(d, 1, r).indices[0]];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
  // 9 degrees of freedom; P(chi2 > 21.67) = 0.01.
  EXPECT_LT(chi2, 21.67);
}

TEST(LearningTest, DatasetValidation) {
  EXPECT_THROW(Dataset::Classification(2, 2, {1, 2, 3}, {0, 1}),
               InvalidArgument);
  EXPECT_THROW(Dataset::Classification(2, 2, {1, 2}, {2}), InvalidArgument);
  EXPECT_THROW(Dataset::Classification(1, 2, {NAN}, {0}), InvalidArgument);
  EXPECT_THROW(Dataset::Classification(1, 2, {}, {}), InvalidArgument);
}

}  // namespace
}  // namespace spdl
