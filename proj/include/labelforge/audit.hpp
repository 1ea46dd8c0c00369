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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labelforge/annotation.hpp"

namespace labelforge {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Two-sided standard normal quantile, e.g. 1.959964 for 0.95.
double normal_critical_value(double confidence);

/// Wilson score interval for a binomial proportion, clipped to [0, 1].
Interval wilson_interval(std::size_t successes, std::size_t n, double confidence = 0.95);

struct SamplingPlan {
  std::string attribute;
  LabelValue target_value = LabelValue::True;
  std::vector<std::string> sample_ids;  // draw order
  std::size_t min_per_value = 500;
  std::uint64_t rng_seed = 0;
  std::string generator;
  std::size_t population = 0;
  bool short_population = false;  // population smaller than min_per_value; all taken
};

/// Uniform sample without replacement from the usable images whose current
/// value of `attribute` equals `target`.
SamplingPlan sampling_plan(const AnnotationMatrix& matrix, std::string_view attribute,
                           LabelValue target, std::size_t min_per_value, std::uint64_t seed);

enum class SessionStatus { Open, Reconciling, Closed };
std::string_view session_status_name(SessionStatus s);

enum class Pass { A, B };
std::string_view pass_name(Pass p);

/// Two independent labeling passes over one plan's sample, followed by
/// reconciliation of the images they disagree on.
class AuditSession {
public:
  explicit AuditSession(SamplingPlan plan);

  const SamplingPlan& plan() const { return plan_; }
  SessionStatus status() const { return status_; }

  /// Only while OPEN; a pass may overwrite its own label for an image.
  void record(Pass pass, std::string_view image_id, LabelValue value);
  const std::map<std::string, LabelValue, std::less<>>& labels(Pass pass) const;
  bool pass_complete(Pass pass) const;
  /// Sampled images neither pass has labeled yet for `pass`, in draw order.
  std::vector<std::string> unlabeled(Pass pass) const;

  /// Images both passes labeled and on which they differ, in draw order.
  std::vector<std::string> disagreements() const;

  /// OPEN -> RECONCILING. Both passes must be complete.
  void begin_reconciliation();
  /// Consensus for one disagreement. Starts reconciliation when still OPEN.
  void resolve(std::string_view image_id, LabelValue consensus);
  const std::map<std::string, LabelValue, std::less<>>& resolutions() const { return resolutions_; }

  /// Fixes the consensus and moves to CLOSED. Throws UNRESOLVED_DISAGREEMENTS
  /// naming every disagreement without a resolution.
  void close();
  const std::map<std::string, LabelValue, std::less<>>& consensus() const { return consensus_; }

  void write(std::ostream& out) const;
  static AuditSession read(std::istream& in, std::string_view source = "<stream>");
  void save(const std::filesystem::path& path) const;
  static AuditSession load(const std::filesystem::path& path);

private:
  bool in_sample(std::string_view image_id) const;

  SamplingPlan plan_;
  SessionStatus status_ = SessionStatus::Open;
  std::map<std::string, LabelValue, std::less<>> pass_a_;
  std::map<std::string, LabelValue, std::less<>> pass_b_;
  std::map<std::string, LabelValue, std::less<>> resolutions_;
  std::map<std::string, LabelValue, std::less<>> consensus_;
};

/// One pass of a session as a single-attribute matrix over the images that
/// pass labeled, in draw order.
AnnotationMatrix pass_matrix(const AuditSession& session, Pass pass);

struct StratumError {
  LabelValue original = LabelValue::True;
  std::size_t n = 0;
  std::size_t mismatches = 0;        // includes info-not-visible consensus
  std::size_t info_not_visible = 0;  // consensus was info-not-visible
  double rate = 0.0;
  Interval ci;
};

struct ErrorRateReport {
  std::string attribute;
  std::optional<StratumError> negative;  // original FALSE
  std::optional<StratumError> positive;  // original TRUE
};

/// Error rate of the original labels in one closed session's stratum.
ErrorRateReport error_rates(const AuditSession& session, const AnnotationMatrix& original,
                            double confidence = 0.95);
/// Merges sessions into one report per attribute, in first-seen order.
std::vector<ErrorRateReport> error_rates(std::span<const AuditSession> sessions,
                                         const AnnotationMatrix& original,
                                         double confidence = 0.95);

}  // namespace labelforge
