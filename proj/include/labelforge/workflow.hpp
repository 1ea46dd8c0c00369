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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "labelforge/annotation.hpp"
#include "labelforge/audit.hpp"
#include "labelforge/embedding.hpp"
#include "labelforge/probe.hpp"

namespace labelforge {

struct WorkflowConfig {
  std::size_t k = 3;
  double subset_fraction = 0.8;
  double target_error = 0.05;
  std::size_t audit_sample_size = 100;
  std::size_t small_bin_threshold = 2000;
  std::size_t max_rounds = 10;
  std::uint64_t seed = 0;
  /// Minimum number of agreeing members for a bin to be audit-eligible.
  /// 0 means k (unanimous bins only).
  std::size_t accept_min_agreement = 0;
  TrainConfig probe;

  void validate() const;
  std::size_t min_agreement() const { return accept_min_agreement ? accept_min_agreement : k; }
};

enum class BinDecision { Undecided, Accepted, ManualLabel, NextRound };
std::string_view bin_decision_name(BinDecision d);

enum class WorkflowStatus { Running, Converged, Exhausted };
std::string_view workflow_status_name(WorkflowStatus s);

struct BinAudit {
  std::vector<std::string> sample_ids;
  std::map<std::string, LabelValue> answers;
  std::size_t mismatches = 0;
  double error = 0.0;
  Interval ci;
};

/// Uncleaned images on which exactly `votes` ensemble members predicted TRUE.
struct AgreementBin {
  std::size_t votes = 0;
  std::vector<std::string> members;  // sorted
  BinDecision decision = BinDecision::Undecided;
  std::optional<BinAudit> audit;
};

/// Ensemble-majority label of a bin; an even split goes to TRUE.
LabelValue majority_label(std::size_t votes, std::size_t k);
bool audit_eligible(std::size_t votes, const WorkflowConfig& config);

/// Images that left the uncleaned pool together, with their estimated error.
struct CleanedBlock {
  std::size_t round = 0;
  std::size_t votes = 0;
  std::size_t size = 0;
  BinDecision decision = BinDecision::Accepted;
  double error = 0.0;  // audited error for ACCEPTED, 0 for MANUAL_LABEL
};

struct BinSummary {
  std::size_t votes = 0;
  std::size_t size = 0;
  BinDecision decision = BinDecision::Undecided;
  std::optional<double> audited_error;
};

struct RoundSummary {
  std::size_t round = 0;
  std::vector<BinSummary> bins;
  std::size_t cleaned = 0;
  std::size_t uncleaned = 0;
};

struct WorkflowState {
  std::string attribute;
  WorkflowConfig config;
  std::size_t round = 0;
  std::map<std::string, LabelValue> cleaned;  // trusted labels
  std::set<std::string> uncleaned;
  std::vector<AgreementBin> bins;  // bins of the current round, index = votes
  std::vector<CleanedBlock> blocks;
  std::vector<RoundSummary> history;  // append-only
  WorkflowStatus status = WorkflowStatus::Running;
};

WorkflowState init_workflow(const std::vector<std::pair<std::string, LabelValue>>& seed_clean,
                            const std::vector<std::string>& uncleaned, std::string attribute,
                            WorkflowConfig config = {});

/// Trains k probes on random subsets of the cleaned pool and splits the
/// uncleaned pool into k + 1 bins by TRUE-vote count. Probes are retrained
/// from scratch every round; member m of round r draws its subset and its
/// SGD order from seeds derived from (config.seed, r, m).
void run_round(WorkflowState& state, const EmbeddingStore& embeddings);

/// Deterministic audit sample of a bin: min(audit_sample_size, size) members.
std::vector<std::string> audit_sample(const WorkflowState& state, std::size_t votes);

/// Records an audit of an eligible bin. `answers` must cover exactly
/// min(audit_sample_size, bin size) bin members. The bin is ACCEPTED when
/// the audited error is within target (members join the cleaned pool with
/// the majority label), otherwise NEXT_ROUND.
const AgreementBin& audit_bin(WorkflowState& state, std::size_t votes,
                              const std::map<std::string, LabelValue>& answers);
/// Same, taking the consensus of a closed audit session.
const AgreementBin& audit_bin(WorkflowState& state, std::size_t votes, const AuditSession& session);

/// Moves a small bin into the cleaned pool with hand-assigned labels.
const AgreementBin& mark_manual(WorkflowState& state, std::size_t votes,
                                const std::map<std::string, LabelValue>& labels);

/// Leaves a bin for the next round.
const AgreementBin& defer_bin(WorkflowState& state, std::size_t votes);

/// Size-weighted error estimate over everything moved by audit or by hand.
double estimated_error(const WorkflowState& state);

/// Re-evaluates and stores the status. CONVERGED once the uncleaned pool is
/// empty and the estimate is within target; EXHAUSTED once max_rounds is
/// reached and every non-empty bin of the last round is decided.
WorkflowStatus check_convergence(WorkflowState& state);

RoundSummary current_summary(const WorkflowState& state);

void save_workflow(const WorkflowState& state, const std::filesystem::path& path);
WorkflowState load_workflow(const std::filesystem::path& path);
std::string workflow_to_json(const WorkflowState& state);
std::string workflow_config_to_json(const WorkflowConfig& config);
/// Partial objects are fine; absent keys keep their defaults. Validated.
WorkflowConfig workflow_config_from_json(std::string_view text);
WorkflowState workflow_from_json(std::string_view text);

}  // namespace labelforge
