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

#include "labelforge/probe.hpp"

#include <istream>
#include <map>
#include <ostream>

#include "labelforge/text.hpp"

namespace labelforge {

LabeledRows gather_labeled(const EmbeddingStore& store,
                           const std::vector<std::pair<std::string, LabelValue>>& labels) {
  LabeledRows rows;
  rows.ids.reserve(labels.size());
  rows.targets.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& [id, value] = labels[i];
    if (!is_binary(value)) {
      throw Error(ErrorCode::NonBinaryLabel, "label for '" + id + "' is not TRUE/FALSE");
    }
    rows.ids.push_back(id);
    rows.targets(static_cast<Eigen::Index>(i)) = value == LabelValue::True ? 1.0 : 0.0;
  }
  rows.features = store.gather(rows.ids);
  return rows;
}

ProbeModel train(const EmbeddingStore& store,
                 const std::vector<std::pair<std::string, LabelValue>>& labels,
                 const TrainConfig& config, std::string* warning) {
  if (labels.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no labeled images");
  const LabeledRows rows = gather_labeled(store, labels);
  return train_probe(rows.features, rows.targets, config, warning);
}

std::vector<Prediction> predict(const ProbeModel& model, const EmbeddingStore& store,
                                const std::vector<std::string>& ids) {
  if (store.dim() != model.dim()) {
    throw Error(ErrorCode::DimMismatch, "store dimension differs from model dimension");
  }
  const Vector<double> p = predict_proba(model, store.gather(ids));
  std::vector<Prediction> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double prob = p(static_cast<Eigen::Index>(i));
    out[i] = {prob, from_bool(hard_label(prob))};
  }
  return out;
}

double evaluate(const ProbeModel& model, const EmbeddingStore& store,
                const std::vector<std::pair<std::string, LabelValue>>& labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyEvalSet, "nothing to evaluate");
  const LabeledRows rows = gather_labeled(store, labels);
  const Vector<double> p = predict_proba(model, rows.features);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    correct += hard_label(p(i)) == (rows.targets(i) == 1.0);
  }
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

void write_model(std::ostream& out, const ProbeModel& model) {
  out << "dim=" << model.dim() << '\n'
      << "bias=" << format_double(model.bias) << '\n'
      << "epochs=" << model.meta.epochs << '\n'
      << "learning_rate=" << format_double(model.meta.learning_rate) << '\n'
      << "batch_size=" << model.meta.batch_size << '\n'
      << "l2=" << format_double(model.meta.l2) << '\n'
      << "seed=" << model.meta.seed << '\n'
      << "final_train_loss=" << format_double(model.meta.final_train_loss) << '\n'
      << "constant=" << (model.meta.constant_predictor ? 1 : 0) << '\n'
      << "weights\n";
  for (Eigen::Index k = 0; k < model.dim(); ++k) out << format_double(model.weights(k)) << '\n';
}

ProbeModel read_model(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  bool saw_weights = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "weights") {
      saw_weights = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Malformed, "model header line '" + line + "'");
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!saw_weights) throw Error(ErrorCode::Malformed, "model file lacks a weights section");
  auto field = [&](const char* key, auto& out) {
    auto it = header.find(key);
    if (it == header.end() || !parse_number(it->second, out)) {
      throw Error(ErrorCode::Malformed, std::string("model header '") + key + "' missing or bad");
    }
  };
  Eigen::Index dim = 0;
  int constant = 0;
  ProbeModel model;
  field("dim", dim);
  field("bias", model.bias);
  field("epochs", model.meta.epochs);
  field("learning_rate", model.meta.learning_rate);
  field("batch_size", model.meta.batch_size);
  field("l2", model.meta.l2);
  field("seed", model.meta.seed);
  field("final_train_loss", model.meta.final_train_loss);
  field("constant", constant);
  model.meta.constant_predictor = constant != 0;
  if (dim <= 0) throw Error(ErrorCode::Malformed, "model dim must be positive");
  model.weights.resize(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    do {
      if (!std::getline(in, line)) throw Error(ErrorCode::Malformed, "model file truncated");
    } while (split_ws(line).empty());
    if (!parse_number(split_ws(line)[0], model.weights(k)) || !std::isfinite(model.weights(k))) {
      throw Error(ErrorCode::Malformed, "bad weight '" + line + "'");
    }
  }
  return model;
}

}  // namespace labelforge
