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

#include "labelforge/error.hpp"

namespace labelforge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::CountMismatch: return "COUNT_MISMATCH";
    case ErrorCode::BadValue: return "BAD_VALUE";
    case ErrorCode::DuplicateId: return "DUPLICATE_ID";
    case ErrorCode::Malformed: return "MALFORMED";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::UnknownImage: return "UNKNOWN_IMAGE";
    case ErrorCode::UnknownAttribute: return "UNKNOWN_ATTRIBUTE";
    case ErrorCode::ImageUnusable: return "IMAGE_UNUSABLE";
    case ErrorCode::MatrixShapeMismatch: return "MATRIX_SHAPE_MISMATCH";
    case ErrorCode::DegenerateFrequency: return "DEGENERATE_FREQUENCY";
    case ErrorCode::PairCountMismatch: return "PAIR_COUNT_MISMATCH";
    case ErrorCode::BadCounts: return "BAD_COUNTS";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::ZeroNormVector: return "ZERO_NORM_VECTOR";
    case ErrorCode::BadThreshold: return "BAD_THRESHOLD";
    case ErrorCode::UnknownPair: return "UNKNOWN_PAIR";
    case ErrorCode::VerdictConflict: return "VERDICT_CONFLICT";
    case ErrorCode::EmptyPopulation: return "EMPTY_POPULATION";
    case ErrorCode::UnresolvedDisagreements: return "UNRESOLVED_DISAGREEMENTS";
    case ErrorCode::SessionNotClosed: return "SESSION_NOT_CLOSED";
    case ErrorCode::SessionClosed: return "SESSION_CLOSED";
    case ErrorCode::NotADisagreement: return "NOT_A_DISAGREEMENT";
    case ErrorCode::IncompletePasses: return "INCOMPLETE_PASSES";
    case ErrorCode::NotInSample: return "NOT_IN_SAMPLE";
    case ErrorCode::EmptyTrainingSet: return "EMPTY_TRAINING_SET";
    case ErrorCode::EmptyEvalSet: return "EMPTY_EVAL_SET";
    case ErrorCode::NonBinaryLabel: return "NON_BINARY_LABEL";
    case ErrorCode::BadConfig: return "BAD_CONFIG";
    case ErrorCode::PoolOverlap: return "POOL_OVERLAP";
    case ErrorCode::EmptySeed: return "EMPTY_SEED";
    case ErrorCode::NotRunning: return "NOT_RUNNING";
    case ErrorCode::MissingEmbedding: return "MISSING_EMBEDDING";
    case ErrorCode::SampleNotFromBin: return "SAMPLE_NOT_FROM_BIN";
    case ErrorCode::AuditSampleSize: return "AUDIT_SAMPLE_SIZE";
    case ErrorCode::BinAlreadyDecided: return "BIN_ALREADY_DECIDED";
    case ErrorCode::BinNotEligible: return "BIN_NOT_ELIGIBLE";
    case ErrorCode::BinTooLarge: return "BIN_TOO_LARGE";
    case ErrorCode::IncompleteLabels: return "INCOMPLETE_LABELS";
    case ErrorCode::UnknownBin: return "UNKNOWN_BIN";
    case ErrorCode::UnknownProject: return "UNKNOWN_PROJECT";
    case ErrorCode::UnknownSession: return "UNKNOWN_SESSION";
    case ErrorCode::UnknownWorkflow: return "UNKNOWN_WORKFLOW";
    case ErrorCode::ProjectExists: return "PROJECT_EXISTS";
    case ErrorCode::AnnotatorBound: return "ANNOTATOR_BOUND";
    case ErrorCode::LeaseNotHeld: return "LEASE_NOT_HELD";
    case ErrorCode::Validation: return "VALIDATION";
  }
  return "UNKNOWN";
}

}  // namespace labelforge
