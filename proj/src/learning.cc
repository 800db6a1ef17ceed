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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spdl/error.h"

namespace spdl {
namespace {

void CheckModel(const ModelParams& model, const Dataset& data,
                const LossSpec& loss) {
  if (loss.kind == LossKind::kSoftmaxCrossEntropy &&
      loss.num_classes != data.num_classes()) {
    throw ConfigurationError("loss has " + std::to_string(loss.num_classes) +
                             " classes, dataset has " +
                             std::to_string(data.num_classes()));
  }
  const std::size_t expected = loss.ParamDim(data.feature_dim());
  if (model.dim() != expected) {
    throw ConfigurationError("model dimension " + std::to_string(model.dim()) +
                             " does not match expected " +
                             std::to_string(expected));
  }
}

void CheckBatch(const Dataset& data, const Batch& batch) {
  if (batch.indices.empty()) throw InvalidArgument("empty batch");
  for (std::size_t i : batch.indices) {
    if (i >= data.size()) {
      throw InvalidArgument("batch index " + std::to_string(i) +
                            " out of range for dataset of size " +
                            std::to_string(data.size()));
    }
  }
}

// Class scores W a for one record.
void Scores(std::span<const double> w, std::span<const double> a,
            std::size_t num_classes, std::vector<double>& out) {
  const std::size_t p = a.size();
  out.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    out[k] = Dot(w.subspan(k * p, p), a);
  }
}

// Softmax in place; returns log-sum-exp of the input scores.
double SoftmaxInPlace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

}  // namespace

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double SquaredNorm(std::span<const double> a) { return Dot(a, a); }

double Norm(std::span<const double> a) { return std::sqrt(SquaredNorm(a)); }

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool AllFinite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

Dataset Dataset::Classification(std::size_t feature_dim,
                                std::size_t num_classes,
                                std::vector<double> features,
                                std::vector<int> labels) {
  if (feature_dim == 0 || num_classes == 0) {
    throw InvalidArgument("dataset needs positive feature and class counts");
  }
  if (labels.empty()) throw InvalidArgument("dataset must be nonempty");
  if (features.size() != labels.size() * feature_dim) {
    throw InvalidArgument("feature buffer does not match record count");
  }
  if (!AllFinite(features)) throw InvalidArgument("non-finite feature");
  Dataset d;
  d.feature_dim_ = feature_dim;
  d.num_classes_ = num_classes;
  d.targets_.reserve(labels.size());
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InvalidArgument("label " + std::to_string(y) + " out of range");
    }
    d.targets_.push_back(static_cast<double>(y));
  }
  d.features_ = std::move(features);
  d.labels_ = std::move(labels);
  return d;
}

Dataset Dataset::Regression(std::size_t feature_dim,
                            std::vector<double> features,
                            std::vector<double> targets) {
  if (feature_dim == 0) throw InvalidArgument("feature_dim must be positive");
  if (targets.empty()) throw InvalidArgument("dataset must be nonempty");
  if (features.size() != targets.size() * feature_dim) {
    throw InvalidArgument("feature buffer does not match record count");
  }
  if (!AllFinite(features) || !AllFinite(targets)) {
    throw InvalidArgument("non-finite value in regression dataset");
  }
  Dataset d;
  d.feature_dim_ = feature_dim;
  d.num_classes_ = 1;
  d.labels_.assign(targets.size(), 0);
  d.features_ = std::move(features);
  d.targets_ = std::move(targets);
  return d;
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset d;
  d.feature_dim_ = feature_dim_;
  d.num_classes_ = num_classes_;
  d.features_.reserve(indices.size() * feature_dim_);
  for (std::size_t i : indices) {
    if (i >= size()) throw InvalidArgument("subset index out of range");
    auto row = features(i);
    d.features_.insert(d.features_.end(), row.begin(), row.end());
    d.labels_.push_back(labels_[i]);
    d.targets_.push_back(targets_[i]);
  }
  return d;
}

Dataset Dataset::Concat(std::span<const Dataset> parts) {
  if (parts.empty()) throw InvalidArgument("nothing to concatenate");
  Dataset d;
  d.feature_dim_ = parts[0].feature_dim_;
  d.num_classes_ = parts[0].num_classes_;
  for (const Dataset& part : parts) {
    if (part.feature_dim_ != d.feature_dim_ ||
        part.num_classes_ != d.num_classes_) {
      throw InvalidArgument("cannot concatenate datasets of different shape");
    }
    d.features_.insert(d.features_.end(), part.features_.begin(),
                       part.features_.end());
    d.labels_.insert(d.labels_.end(), part.labels_.begin(),
                     part.labels_.end());
    d.targets_.insert(d.targets_.end(), part.targets_.begin(),
                      part.targets_.end());
  }
  return d;
}

std::size_t LossSpec::ParamDim(std::size_t feature_dim) const {
  return kind == LossKind::kSoftmaxCrossEntropy ? feature_dim * num_classes
                                                : feature_dim;
}

double LossValue(const ModelParams& model, const Dataset& data,
                 const Batch& batch, const LossSpec& loss) {
  CheckModel(model, data, loss);
  CheckBatch(data, batch);
  double total = 0.0;
  std::vector<double> z;
  for (std::size_t i : batch.indices) {
    auto a = data.features(i);
    if (loss.kind == LossKind::kSoftmaxCrossEntropy) {
      Scores(model.values, a, loss.num_classes, z);
      const double zy = z[static_cast<std::size_t>(data.label(i))];
      total += SoftmaxInPlace(z) - zy;
    } else {
      const double r = Dot(model.values, a) - data.target(i);
      total += 0.5 * r * r;
    }
  }
  return total / static_cast<double>(batch.size()) +
         0.5 * loss.l2 * SquaredNorm(model.values);
}

GradientVector ComputeGradient(const ModelParams& model, const Dataset& data,
                               const Batch& batch, const LossSpec& loss) {
  CheckModel(model, data, loss);
  CheckBatch(data, batch);
  const std::size_t p = data.feature_dim();
  GradientVector g(model.dim());
  std::vector<double> z;
  for (std::size_t i : batch.indices) {
    auto a = data.features(i);
    if (loss.kind == LossKind::kSoftmaxCrossEntropy) {
      Scores(model.values, a, loss.num_classes, z);
      SoftmaxInPlace(z);
      z[static_cast<std::size_t>(data.label(i))] -= 1.0;
      for (std::size_t k = 0; k < loss.num_classes; ++k) {
        double* row = g.values.data() + k * p;
        for (std::size_t j = 0; j < p; ++j) row[j] += z[k] * a[j];
      }
    } else {
      const double r = Dot(model.values, a) - data.target(i);
      for (std::size_t j = 0; j < p; ++j) g.values[j] += r * a[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < g.dim(); ++j) {
    g.values[j] = g.values[j] * inv + loss.l2 * model.values[j];
  }
  return g;
}

ModelParams SgdUpdate(const ModelParams& x, const GradientVector& delta,
                      double gamma) {
  if (x.dim() != delta.dim()) {
    throw InvalidArgument("sgd update: model has dimension " +
                          std::to_string(x.dim()) + ", delta has " +
                          std::to_string(delta.dim()));
  }
  if (!std::isfinite(gamma)) throw InvalidArgument("gamma must be finite");
  ModelParams out = x;
  for (std::size_t j = 0; j < out.dim(); ++j) {
    out.values[j] -= gamma * delta.values[j];
  }
  return out;
}

int Predict(const ModelParams& model, std::span<const double> features,
            const LossSpec& loss) {
  if (loss.kind != LossKind::kSoftmaxCrossEntropy) {
    throw UnsupportedOperation("prediction needs a softmax model");
  }
  std::vector<double> z;
  Scores(model.values, features, loss.num_classes, z);
  // max_element returns the first maximum, i.e. the lowest class index.
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double TestError(const ModelParams& model, const Dataset& testset,
                 const LossSpec& loss) {
  if (loss.kind != LossKind::kSoftmaxCrossEntropy) {
    throw UnsupportedOperation("test error is defined for softmax models only");
  }
  CheckModel(model, testset, loss);
  if (testset.empty()) throw InvalidArgument("empty test set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    if (Predict(model, testset.features(i), loss) != testset.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(testset.size());
}

Batch SampleBatch(const Dataset& data, std::size_t size, Rng& rng) {
  if (size < 1 || size > data.size()) {
    throw InvalidArgument("batch size " + std::to_string(size) +
                          " outside [1, " + std::to_string(data.size()) + "]");
  }
  // Partial Fisher-Yates: the first `size` slots are a uniform sample.
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + rng.Below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(size);
  return Batch{std::move(idx)};
}

Batch FullBatch(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return Batch{std::move(idx)};
}

}  // namespace spdl
