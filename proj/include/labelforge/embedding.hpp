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
#include <algorithm>
#include <optional>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/error.hpp"

namespace labelforge {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Cosine of the angle between two vectors. Clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar denom = a.norm() * b.norm();
  if (!(denom > Scalar(0))) throw Error(ErrorCode::ZeroNormVector, "cosine of a zero vector");
  const Scalar c = a.dot(b) / denom;
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Fixed-dimension feature vectors keyed by image id, each tagged with an
/// identity group. Rows are stored contiguously and exposed as Eigen maps.
template <typename Scalar>
class BasicEmbeddingStore {
public:
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using ConstRowMap = Eigen::Map<const RowVector>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  explicit BasicEmbeddingStore(Eigen::Index dim) : dim_(dim) {
    if (dim <= 0) throw Error(ErrorCode::DimMismatch, "embedding dimension must be positive");
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }

  template <typename Derived>
  std::size_t add(std::string image_id, std::string identity_id,
                  const Eigen::MatrixBase<Derived>& vector) {
    if (vector.size() != dim_) {
      throw Error(ErrorCode::DimMismatch, "vector for '" + image_id + "' has " +
                                              std::to_string(vector.size()) + " entries, expected " +
                                              std::to_string(dim_));
    }
    if (!vector.allFinite()) {
      throw Error(ErrorCode::BadValue, "vector for '" + image_id + "' has non-finite entries");
    }
    if (!(vector.squaredNorm() > Scalar(0))) {
      throw Error(ErrorCode::ZeroNormVector, "vector for '" + image_id + "' has zero norm");
    }
    if (lookup_.contains(image_id)) {
      throw Error(ErrorCode::DuplicateId, "embedding for '" + image_id + "' given twice");
    }
    const std::size_t index = ids_.size();
    lookup_.emplace(image_id, index);
    ids_.push_back(std::move(image_id));
    identities_.push_back(std::move(identity_id));
    for (Eigen::Index k = 0; k < dim_; ++k) data_.push_back(vector(k));
    return index;
  }

  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::string& identity(std::size_t index) const { return identities_.at(index); }

  std::optional<std::size_t> find(std::string_view image_id) const {
    auto it = lookup_.find(image_id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  ConstRowMap row(std::size_t index) const {
    return ConstRowMap(data_.data() + index * static_cast<std::size_t>(dim_), dim_);
  }

  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(ids_.size()), dim_);
  }

  /// Gathers rows for `image_ids` into a dense matrix, in the given order.
  RowMatrix<Scalar> gather(const std::vector<std::string>& image_ids) const {
    RowMatrix<Scalar> out(static_cast<Eigen::Index>(image_ids.size()), dim_);
    for (std::size_t r = 0; r < image_ids.size(); ++r) {
      auto i = find(image_ids[r]);
      if (!i) throw Error(ErrorCode::MissingEmbedding, "no embedding for '" + image_ids[r] + "'");
      out.row(static_cast<Eigen::Index>(r)) = row(*i);
    }
    return out;
  }

private:
  Eigen::Index dim_;
  std::vector<Scalar> data_;
  std::vector<std::string> ids_;
  std::vector<std::string> identities_;
  std::map<std::string, std::size_t, std::less<>> lookup_;
};

using EmbeddingStore = BasicEmbeddingStore<double>;

/// Text layout: first line "dim=<D>", then "image_id identity_id f1 ... fD".
EmbeddingStore read_embeddings(std::istream& in, std::string_view source = "<stream>");
EmbeddingStore read_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingStore& store);

}  // namespace labelforge
