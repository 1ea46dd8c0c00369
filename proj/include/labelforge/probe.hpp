// Copyright 2026 The LabelForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "labelforge/annotation.hpp"
#include "labelforge/embedding.hpp"
#include "labelforge/error.hpp"
#include "labelforge/rng.hpp"

namespace labelforge {

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-2;
  std::size_t batch_size = 128;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || !(learning_rate > 0.0) || !(l2 >= 0.0)) {
      throw Error(ErrorCode::BadConfig, "epochs, batch size and learning rate must be positive");
    }
  }
};

struct TrainMeta {
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  double final_train_loss = 0.0;
  bool constant_predictor = false;
};

/// Logistic regression over embedding features.
template <typename Scalar>
struct BasicProbeModel {
  Vector<Scalar> weights;
  Scalar bias = Scalar(0);
  TrainMeta meta;

  Eigen::Index dim() const { return weights.size(); }
};

using ProbeModel = BasicProbeModel<double>;

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
}

/// Mean binary cross-entropy plus (l2 / 2) * |w|^2. Targets are 0 or 1; the
/// bias is not regularised.
template <typename DerivedX, typename DerivedY, typename DerivedW>
typename DerivedX::Scalar logistic_loss(const Eigen::MatrixBase<DerivedX>& features,
                                        const Eigen::MatrixBase<DerivedY>& targets,
                                        const Eigen::MatrixBase<DerivedW>& weights,
                                        typename DerivedX::Scalar bias,
                                        typename DerivedX::Scalar l2) {
  using Scalar = typename DerivedX::Scalar;
  const Vector<Scalar> logits = (features * weights).array() + bias;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    total += softplus(logits(i)) - targets(i) * logits(i);
  }
  return total / static_cast<Scalar>(logits.size()) + Scalar(0.5) * l2 * weights.squaredNorm();
}

/// Gradient of logistic_loss with respect to (weights, bias).
template <typename DerivedX, typename DerivedY, typename DerivedW>
std::pair<Vector<typename DerivedX::Scalar>, typename DerivedX::Scalar> logistic_gradient(
    const Eigen::MatrixBase<DerivedX>& features, const Eigen::MatrixBase<DerivedY>& targets,
    const Eigen::MatrixBase<DerivedW>& weights, typename DerivedX::Scalar bias,
    typename DerivedX::Scalar l2) {
  using Scalar = typename DerivedX::Scalar;
  Vector<Scalar> residual = (features * weights).array() + bias;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    residual(i) = sigmoid(residual(i)) - targets(i);
  }
  const Scalar m = static_cast<Scalar>(residual.size());
  Vector<Scalar> grad_w = features.transpose() * residual / m + l2 * weights;
  return {std::move(grad_w), residual.sum() / m};
}

/// P(true | x) for every row of `features`.
template <typename Scalar, typename DerivedX>
Vector<Scalar> predict_proba(const BasicProbeModel<Scalar>& model,
                             const Eigen::MatrixBase<DerivedX>& features) {
  if (features.cols() != model.dim()) {
    throw Error(ErrorCode::DimMismatch, "features have " + std::to_string(features.cols()) +
                                            " columns, model expects " +
                                            std::to_string(model.dim()));
  }
  Vector<Scalar> p = (features * model.weights).array() + model.bias;
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = sigmoid(p(i));
  return p;
}

/// Hard label rule: TRUE iff probability >= 0.5 (a tie goes to TRUE).
template <typename Scalar>
constexpr bool hard_label(Scalar probability) {
  return probability >= Scalar(0.5);
}

/// Mini-batch SGD on the regularised logistic loss, starting from zero
/// weights. Batches are drawn from a per-epoch shuffle seeded by
/// config.seed, so a run is reproducible bit for bit. When every target is
/// the same class a constant predictor is returned and `warning` is set.
template <typename DerivedX, typename DerivedY>
BasicProbeModel<typename DerivedX::Scalar> train_probe(const Eigen::MatrixBase<DerivedX>& features,
                                                       const Eigen::MatrixBase<DerivedY>& targets,
                                                       const TrainConfig& config,
                                                       std::string* warning = nullptr) {
  using Scalar = typename DerivedX::Scalar;
  config.validate();
  const Eigen::Index n = features.rows();
  const Eigen::Index dim = features.cols();
  if (n == 0) throw Error(ErrorCode::EmptyTrainingSet, "no labeled rows to train on");
  if (targets.size() != n) throw Error(ErrorCode::DimMismatch, "one target per row required");

  BasicProbeModel<Scalar> model;
  model.weights = Vector<Scalar>::Zero(dim);
  model.meta = TrainMeta{config.epochs, config.learning_rate, config.batch_size, config.l2,
                         config.seed, 0.0, false};

  const Scalar positives = targets.sum();
  if (positives == Scalar(0) || positives == static_cast<Scalar>(n)) {
    // Laplace-smoothed log odds of the only class present.
    const Scalar logit = std::log(static_cast<Scalar>(n) + Scalar(1));
    model.bias = positives == Scalar(0) ? -logit : logit;
    model.meta.constant_predictor = true;
    model.meta.final_train_loss =
        static_cast<double>(logistic_loss(features, targets, model.weights, model.bias, Scalar(0)));
    if (warning) *warning = "SINGLE_CLASS: all training labels are equal; constant predictor";
    return model;
  }

  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto l2 = static_cast<Scalar>(config.l2);
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  RowMatrix<Scalar> xb;
  Vector<Scalar> yb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch >= n) {
      auto [gw, gb] = logistic_gradient(features, targets, model.weights, model.bias, l2);
      model.weights -= lr * gw;
      model.bias -= lr * gb;
      continue;
    }
    rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      xb.resize(len, dim);
      yb.resize(len);
      for (Eigen::Index r = 0; r < len; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = features.row(src);
        yb(r) = targets(src);
      }
      auto [gw, gb] = logistic_gradient(xb, yb, model.weights, model.bias, l2);
      model.weights -= lr * gw;
      model.bias -= lr * gb;
    }
  }
  if (!model.weights.allFinite() || !std::isfinite(model.bias)) {
    throw Error(ErrorCode::BadConfig, "training diverged; lower the learning rate");
  }
  model.meta.final_train_loss =
      static_cast<double>(logistic_loss(features, targets, model.weights, model.bias, l2));
  return model;
}

// ---------------------------------------------------------------------------
// Id-keyed front end over an embedding store
// ---------------------------------------------------------------------------

struct LabeledRows {
  std::vector<std::string> ids;
  RowMatrix<double> features;
  Vector<double> targets;  // 1 = TRUE, 0 = FALSE
};

/// Gathers features and 0/1 targets. Labels must be binary.
LabeledRows gather_labeled(const EmbeddingStore& store,
                           const std::vector<std::pair<std::string, LabelValue>>& labels);

ProbeModel train(const EmbeddingStore& store,
                 const std::vector<std::pair<std::string, LabelValue>>& labels,
                 const TrainConfig& config, std::string* warning = nullptr);

struct Prediction {
  double probability = 0.5;
  LabelValue label = LabelValue::True;
};

/// One prediction per id, aligned with `ids`.
std::vector<Prediction> predict(const ProbeModel& model, const EmbeddingStore& store,
                                const std::vector<std::string>& ids);

/// Fraction of hard labels equal to the given binary labels.
double evaluate(const ProbeModel& model, const EmbeddingStore& store,
                const std::vector<std::pair<std::string, LabelValue>>& labels);

/// Text layout: "key=value" header lines (dim, bias, epochs, learning_rate,
/// batch_size, l2, seed, final_train_loss, constant), a "weights" line, then
/// one weight per line. Values round-trip exactly.
void write_model(std::ostream& out, const ProbeModel& model);
ProbeModel read_model(std::istream& in);

}  // namespace labelforge
