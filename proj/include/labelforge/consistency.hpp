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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelforge/annotation.hpp"

namespace labelforge {

// ---------------------------------------------------------------------------
// Two-pass annotator agreement
// ---------------------------------------------------------------------------

enum class ConsistencyTier { High, Medium, Low };
std::string_view tier_name(ConsistencyTier tier);

/// HIGH when agreement >= 95%, LOW when <= 85%, MEDIUM in between. Both
/// boundaries are closed and evaluated in integer arithmetic.
ConsistencyTier consistency_tier(std::size_t n_differences, std::size_t n_images);

struct DisagreementReport {
  std::string attribute;
  std::size_t n_d = 0;       // images where both passes are binary and differ
  std::size_t n_images = 0;  // images where both passes are binary
  ConsistencyTier tier = ConsistencyTier::High;

  double consistency() const {
    return n_images ? 1.0 - static_cast<double>(n_d) / static_cast<double>(n_images) : 1.0;
  }
};

/// Compares two independent passes over the same images and attributes.
/// A cell marked info-not-visible in either pass is left out of that
/// attribute's count, as is every unusable image.
std::vector<DisagreementReport> disagreement_counts(const AnnotationMatrix& pass_a,
                                                    const AnnotationMatrix& pass_b);

// ---------------------------------------------------------------------------
// Duplicate-pair inconsistency
// ---------------------------------------------------------------------------

/// Agreement rate of two labels drawn independently with P(true) = f.
double expected_random_agreement(double positive_frequency);

/// Per-attribute tallies over confirmed duplicate pairs.
struct ConflictCounts {
  std::string attribute;
  std::size_t n_differ = 0;  // pairs whose two values differ
  std::size_t n_p = 0;       // positive labels over both members of every pair
  std::size_t n_n = 0;       // negative labels over both members of every pair
  std::size_t n_total = 0;   // pairs
};

struct DuplicateConflictStats {
  std::string attribute;
  std::size_t n_differ = 0;
  std::size_t n_p = 0;
  std::size_t n_n = 0;
  std::size_t n_total = 0;
  double positive_frequency = 0.0;
  double p_in = 0.0;
};

/// Observed pair disagreements normalised by the disagreements expected if
/// labels were assigned at random with the observed positive frequency f:
///
///   p_in = n_differ / (2 f (1 - f) n_total),   f = n_p / (n_p + n_n)
///
/// 0 means perfectly consistent, 1 means random. Not clamped.
DuplicateConflictStats inconsistency_level(std::size_t n_differ, std::size_t n_p, std::size_t n_n,
                                           std::size_t n_total, std::string attribute = {});
DuplicateConflictStats inconsistency_level(const ConflictCounts& counts);

struct PinRow {
  ConflictCounts counts;
  std::optional<double> p_in;  // empty when every label has the same value
};

/// Rows sorted by p_in, highest first; attributes without a defined p_in
/// trail the list in input order. Attributes named in `exclude` are dropped.
std::vector<PinRow> pin_report(std::span<const ConflictCounts> counts,
                               std::span<const std::string> exclude = {});

}  // namespace labelforge
