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

#include "labelforge/embedding.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "labelforge/text.hpp"

namespace labelforge {

EmbeddingStore read_embeddings(std::istream& in, std::string_view source) {
  const std::string where(source);
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1 || !tokens[0].starts_with("dim=") ||
        !parse_number(tokens[0].substr(4), dim)) {
      throw Error(ErrorCode::Malformed, where + ":" + std::to_string(line_no) +
                                            ": expected 'dim=<D>' header");
    }
    break;
  }
  if (dim <= 0) throw Error(ErrorCode::Malformed, where + ": missing or invalid dim header");

  EmbeddingStore store(dim);
  Eigen::VectorXd v(dim);
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (static_cast<Eigen::Index>(tokens.size()) != dim + 2) {
      throw Error(ErrorCode::DimMismatch, where + ":" + std::to_string(line_no) + ": " +
                                              std::to_string(tokens.size() - 2) +
                                              " features, expected " + std::to_string(dim));
    }
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (!parse_number(tokens[static_cast<std::size_t>(k) + 2], v(k))) {
        throw Error(ErrorCode::BadValue, where + ":" + std::to_string(line_no) + ": feature " +
                                             std::to_string(k + 1) + " is not a number");
      }
    }
    store.add(std::string(tokens[0]), std::string(tokens[1]), v);
  }
  return store;
}

EmbeddingStore read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return read_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << "dim=" << store.dim() << '\n';
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.id(i) << ' ' << store.identity(i);
    const auto r = store.row(i);
    for (Eigen::Index k = 0; k < store.dim(); ++k) out << ' ' << format_double(r(k));
    out << '\n';
  }
}

}  // namespace labelforge
