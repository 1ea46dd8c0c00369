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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "labelforge/annotation.hpp"
#include "labelforge/consistency.hpp"
#include "labelforge/embedding.hpp"

namespace labelforge {

inline constexpr double kDefaultDuplicateThreshold = 0.9;

enum class Verdict { Pending, Duplicate, NearDuplicateRejected };
std::string_view verdict_name(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);

struct CandidatePair {
  std::string image_a;  // image_a < image_b
  std::string image_b;
  double similarity = 0.0;
  std::string identity;
};

/// All same-identity pairs whose cosine similarity reaches `threshold`.
/// Output is ordered by identity, then by (image_a, image_b). Identity groups
/// are scanned exhaustively through one Gram matrix each.
template <typename Scalar>
std::vector<CandidatePair> find_candidate_pairs(const BasicEmbeddingStore<Scalar>& store,
                                                double threshold = kDefaultDuplicateThreshold) {
  if (!(threshold > -1.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::BadThreshold, "threshold must lie in (-1, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < store.size(); ++i) groups[store.identity(i)].push_back(i);

  std::vector<CandidatePair> pairs;
  for (auto& [identity, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end(),
              [&](std::size_t x, std::size_t y) { return store.id(x) < store.id(y); });
    const auto m = static_cast<Eigen::Index>(members.size());
    RowMatrix<Scalar> unit(m, store.dim());
    for (Eigen::Index r = 0; r < m; ++r) {
      unit.row(r) = store.row(members[static_cast<std::size_t>(r)]).normalized();
    }
    const RowMatrix<Scalar> gram = unit * unit.transpose();
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = r + 1; c < m; ++c) {
        const double s = std::clamp(static_cast<double>(gram(r, c)), -1.0, 1.0);
        if (s >= threshold) {
          pairs.push_back({store.id(members[static_cast<std::size_t>(r)]),
                           store.id(members[static_cast<std::size_t>(c)]), s, identity});
        }
      }
    }
  }
  return pairs;
}

struct PairRecord {
  std::uint64_t pair_id = 0;
  CandidatePair pair;
  Verdict verdict = Verdict::Pending;
  std::string reviewer;
  std::string timestamp;
  bool in_arbitration = false;
  std::string conflicting_reviewer;
  Verdict conflicting_verdict = Verdict::Pending;

  /// Counted in conflict statistics.
  bool confirmed() const { return verdict == Verdict::Duplicate && !in_arbitration; }
};

enum class VerdictOutcome { Recorded, Unchanged };

/// Human review queue over candidate pairs. Pair ids start at 1 and follow
/// candidate order.
class PairQueue {
public:
  PairQueue() = default;
  explicit PairQueue(const std::vector<CandidatePair>& candidates);

  /// First verdict on a pending pair is stored. Re-submitting the stored
  /// verdict is a no-op. A different verdict does not overwrite: the pair
  /// moves to arbitration and VERDICT_CONFLICT is thrown.
  VerdictOutcome record_verdict(std::uint64_t pair_id, Verdict verdict, std::string_view reviewer,
                                std::string timestamp = iso8601_now());
  /// Final ruling on a pair in arbitration.
  void resolve_arbitration(std::uint64_t pair_id, Verdict verdict, std::string_view arbiter,
                           std::string timestamp = iso8601_now());

  const PairRecord& get(std::uint64_t pair_id) const;
  const std::vector<PairRecord>& records() const { return records_; }
  std::vector<const PairRecord*> pending() const;
  std::vector<const PairRecord*> arbitration_queue() const;

  /// Columns: pair_id, image_a, image_b, similarity, verdict, reviewer,
  /// timestamp. Pairs in arbitration carry verdict ARBITRATION and a reviewer
  /// column of "name:VERDICT|name:VERDICT".
  void write_tsv(std::ostream& out) const;
  static PairQueue read_tsv(std::istream& in, std::string_view source = "<stream>");
  void save(const std::filesystem::path& path) const;
  static PairQueue load(const std::filesystem::path& path);

private:
  PairRecord& find(std::uint64_t pair_id);
  std::vector<PairRecord> records_;
};

/// Per-attribute tallies over confirmed duplicates; pending, rejected and
/// arbitrated pairs are skipped. A pair whose member is info-not-visible for
/// an attribute leaves that attribute's universe; a pair with an unusable
/// member leaves every attribute's universe.
std::vector<ConflictCounts> attribute_conflicts(std::span<const PairRecord> pairs,
                                                const AnnotationMatrix& matrix);

}  // namespace labelforge
