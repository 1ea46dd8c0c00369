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

#include "labelforge/consistency.hpp"

#include <algorithm>

#include "labelforge/error.hpp"

namespace labelforge {

std::string_view tier_name(ConsistencyTier tier) {
  switch (tier) {
    case ConsistencyTier::High: return "HIGH";
    case ConsistencyTier::Medium: return "MEDIUM";
    case ConsistencyTier::Low: return "LOW";
  }
  return "?";
}

ConsistencyTier consistency_tier(std::size_t n_differences, std::size_t n_images) {
  if (n_images == 0 || n_differences > n_images) {
    throw Error(ErrorCode::BadCounts, "need 0 <= n_d <= n_images and n_images > 0");
  }
  // agreement = (n - d) / n, compared against 19/20 and 17/20 exactly
  const std::size_t agree20 = 20 * (n_images - n_differences);
  if (agree20 >= 19 * n_images) return ConsistencyTier::High;
  if (agree20 <= 17 * n_images) return ConsistencyTier::Low;
  return ConsistencyTier::Medium;
}

std::vector<DisagreementReport> disagreement_counts(const AnnotationMatrix& pass_a,
                                                    const AnnotationMatrix& pass_b) {
  if (pass_a.attributes() != pass_b.attributes() ||
      pass_a.image_count() != pass_b.image_count()) {
    throw Error(ErrorCode::MatrixShapeMismatch, "passes cover different attributes or images");
  }
  std::vector<std::size_t> b_row(pass_a.image_count());
  for (std::size_t i = 0; i < pass_a.image_count(); ++i) {
    auto j = pass_b.find_image(pass_a.image(i).image_id);
    if (!j) {
      throw Error(ErrorCode::MatrixShapeMismatch,
                  "image '" + pass_a.image(i).image_id + "' missing from second pass");
    }
    b_row[i] = *j;
  }

  std::vector<DisagreementReport> out;
  out.reserve(pass_a.attribute_count());
  for (std::size_t a = 0; a < pass_a.attribute_count(); ++a) {
    DisagreementReport r;
    r.attribute = pass_a.attributes()[a];
    for (std::size_t i = 0; i < pass_a.image_count(); ++i) {
      if (pass_a.image(i).unusable || pass_b.image(b_row[i]).unusable) continue;
      const LabelValue va = pass_a.at(i, a);
      const LabelValue vb = pass_b.at(b_row[i], a);
      if (!is_binary(va) || !is_binary(vb)) continue;
      ++r.n_images;
      r.n_d += va != vb;
    }
    r.tier = r.n_images ? consistency_tier(r.n_d, r.n_images) : ConsistencyTier::High;
    out.push_back(std::move(r));
  }
  return out;
}

double expected_random_agreement(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::BadCounts, "frequency outside [0, 1]");
  return 1.0 - 2.0 * f * (1.0 - f);
}

DuplicateConflictStats inconsistency_level(std::size_t n_differ, std::size_t n_p, std::size_t n_n,
                                           std::size_t n_total, std::string attribute) {
  if (n_p + n_n != 2 * n_total) {
    throw Error(ErrorCode::PairCountMismatch,
                "n_p + n_n = " + std::to_string(n_p + n_n) + " but 2 * n_total = " +
                    std::to_string(2 * n_total));
  }
  if (n_differ > n_total) throw Error(ErrorCode::BadCounts, "n_differ exceeds n_total");
  if (n_p == 0 || n_n == 0) {
    throw Error(ErrorCode::DegenerateFrequency,
                "attribute '" + attribute + "' has a single label value over all pairs");
  }
  DuplicateConflictStats s;
  s.attribute = std::move(attribute);
  s.n_differ = n_differ;
  s.n_p = n_p;
  s.n_n = n_n;
  s.n_total = n_total;
  const double f = static_cast<double>(n_p) / static_cast<double>(n_p + n_n);
  s.positive_frequency = f;
  const double expected_differ = 2.0 * f * (1.0 - f) * static_cast<double>(n_total);
  s.p_in = static_cast<double>(n_differ) / expected_differ;
  return s;
}

DuplicateConflictStats inconsistency_level(const ConflictCounts& c) {
  return inconsistency_level(c.n_differ, c.n_p, c.n_n, c.n_total, c.attribute);
}

std::vector<PinRow> pin_report(std::span<const ConflictCounts> counts,
                               std::span<const std::string> exclude) {
  std::vector<PinRow> rows;
  for (const auto& c : counts) {
    if (std::find(exclude.begin(), exclude.end(), c.attribute) != exclude.end()) continue;
    PinRow row{c, std::nullopt};
    if (c.n_p > 0 && c.n_n > 0) row.p_in = inconsistency_level(c).p_in;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PinRow& a, const PinRow& b) {
    if (a.p_in && b.p_in) return *a.p_in > *b.p_in;
    return a.p_in.has_value() && !b.p_in.has_value();
  });
  return rows;
}

}  // namespace labelforge
