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

#ifndef SPDL_LEARNING_H_
#define SPDL_LEARNING_H_

#include <cstddef>
#include <span>
#include <vector>

#include "spdl/rng.h"

namespace spdl {

// Flat model weight vector x. For softmax regression the layout is K rows
// of p weights (row k scores class k).
struct ModelParams {
  std::vector<double> values;

  ModelParams() = default;
  explicit ModelParams(std::size_t dim) : values(dim, 0.0) {}
  explicit ModelParams(std::vector<double> v) : values(std::move(v)) {}
  std::size_t dim() const { return values.size(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// A gradient g, a perturbed gradient, or an aggregate Delta.
struct GradientVector {
  std::vector<double> values;

  GradientVector() = default;
  explicit GradientVector(std::size_t dim) : values(dim, 0.0) {}
  explicit GradientVector(std::vector<double> v) : values(std::move(v)) {}
  std::size_t dim() const { return values.size(); }
  friend bool operator==(const GradientVector&,
                         const GradientVector&) = default;
};

double Dot(std::span<const double> a, std::span<const double> b);
double SquaredNorm(std::span<const double> a);
double Norm(std::span<const double> a);
double SquaredDistance(std::span<const double> a, std::span<const double> b);
bool AllFinite(std::span<const double> a);

// Row-major feature matrix with one integer class label and one real target
// per record. Classification sets target = label; regression uses K = 1.
class Dataset {
 public:
  Dataset() = default;

  static Dataset Classification(std::size_t feature_dim,
                                std::size_t num_classes,
                                std::vector<double> features,
                                std::vector<int> labels);
  static Dataset Regression(std::size_t feature_dim,
                            std::vector<double> features,
                            std::vector<double> targets);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * feature_dim_, feature_dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  double target(std::size_t i) const { return targets_[i]; }

  Dataset Subset(std::span<const std::size_t> indices) const;
  // Concatenation of datasets sharing a layout.
  static Dataset Concat(std::span<const Dataset> parts);

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t feature_dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<double> targets_;
};

struct Batch {
  std::vector<std::size_t> indices;
  std::size_t size() const { return indices.size(); }
};

enum class LossKind { kSoftmaxCrossEntropy, kLeastSquares };

struct LossSpec {
  LossKind kind = LossKind::kSoftmaxCrossEntropy;
  std::size_t num_classes = 2;
  double l2 = 0.0;

  // Number of model weights for `feature_dim` input features.
  std::size_t ParamDim(std::size_t feature_dim) const;
};

// Mean loss over the batch plus (l2 / 2) * ||x||^2.
double LossValue(const ModelParams& model, const Dataset& data,
                 const Batch& batch, const LossSpec& loss);

// Gradient of LossValue with respect to the model.
GradientVector ComputeGradient(const ModelParams& model, const Dataset& data,
                               const Batch& batch, const LossSpec& loss);

ModelParams SgdUpdate(const ModelParams& x, const GradientVector& delta,
                      double gamma);

// argmax_k of the class scores; ties go to the lowest class index.
int Predict(const ModelParams& model, std::span<const double> features,
            const LossSpec& loss);

// Fraction of misclassified records. Softmax models only.
double TestError(const ModelParams& model, const Dataset& testset,
                 const LossSpec& loss);

// Uniform sample of `size` distinct record positions.
Batch SampleBatch(const Dataset& data, std::size_t size, Rng& rng);
Batch FullBatch(const Dataset& data);

}  // namespace spdl

#endif  // SPDL_LEARNING_H_
