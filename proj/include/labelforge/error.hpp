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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace labelforge {

enum class ErrorCode {
  // annotation model
  CountMismatch,
  BadValue,
  DuplicateId,
  Malformed,
  IoFailure,
  UnknownImage,
  UnknownAttribute,
  ImageUnusable,
  // consistency
  MatrixShapeMismatch,
  DegenerateFrequency,
  PairCountMismatch,
  BadCounts,
  // duplicates
  DimMismatch,
  ZeroNormVector,
  BadThreshold,
  UnknownPair,
  VerdictConflict,
  // audit
  EmptyPopulation,
  UnresolvedDisagreements,
  SessionNotClosed,
  SessionClosed,
  NotADisagreement,
  IncompletePasses,
  NotInSample,
  // probe
  EmptyTrainingSet,
  EmptyEvalSet,
  NonBinaryLabel,
  BadConfig,
  // workflow
  PoolOverlap,
  EmptySeed,
  NotRunning,
  MissingEmbedding,
  SampleNotFromBin,
  AuditSampleSize,
  BinAlreadyDecided,
  BinNotEligible,
  BinTooLarge,
  IncompleteLabels,
  UnknownBin,
  // service
  UnknownProject,
  UnknownSession,
  UnknownWorkflow,
  ProjectExists,
  AnnotatorBound,
  LeaseNotHeld,
  Validation,
};

/// Stable upper-snake name of a code, e.g. "BAD_VALUE". Used in CLI output
/// and in HTTP error bodies.
std::string_view error_code_name(ErrorCode code);

/// Domain error. Everything the library rejects on purpose is thrown as this;
/// anything else escaping is a bug.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> items = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code), items_(std::move(items)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Offending ids, when the error names a set of them (e.g. unresolved images).
  const std::vector<std::string>& items() const noexcept { return items_; }

private:
  ErrorCode code_;
  std::vector<std::string> items_;
};

}  // namespace labelforge
