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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "labelforge/annotation.hpp"
#include "labelforge/audit.hpp"
#include "labelforge/duplicates.hpp"
#include "labelforge/embedding.hpp"
#include "labelforge/workflow.hpp"

namespace labelforge {

struct ProjectSources {
  std::filesystem::path labels;
  AttributeFormat format = AttributeFormat::CelebaOriginal;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> partition;
  std::optional<std::filesystem::path> identities;
};

/// On-disk project. Layout under the project directory:
///
///   project.json           id and per-attribute guideline text
///   partition.txt          optional split tags (CelebA list_eval_partition)
///   identities.txt         optional identity ids (CelebA identity list)
///   original.txt           labels as ingested (extended format + sidecar)
///   provenance.log         every edit since ingest
///   embeddings.txt         optional feature vectors
///   pairs.tsv              duplicate review queue
///   sessions/<id>.tsv      audit sessions
///   workflows/<id>.json    cleaning workflows
///
/// The current matrix is the original replayed through the provenance log.
class Project {
public:
  static Project create(const std::filesystem::path& dir, const ProjectSources& sources);
  static Project open(const std::filesystem::path& dir);

  const std::string& id() const { return id_; }
  const std::filesystem::path& dir() const { return dir_; }

  const AnnotationMatrix& matrix() const { return matrix_; }
  const AnnotationMatrix& original() const { return original_; }
  const ProvenanceLog& log() const { return log_; }
  const EmbeddingStore* embeddings() const { return embeddings_.get(); }
  const std::map<std::string, std::string>& guidelines() const { return guidelines_; }
  void set_guideline(const std::string& attribute, std::string text);

  // Label edits are appended to the log file as they happen.
  const ProvenanceEntry& apply_label(std::string_view image_id, std::string_view attribute,
                                     LabelValue value, std::string_view source);
  const ProvenanceEntry& mark_unusable(std::string_view image_id, bool unusable,
                                       std::string_view source);

  PairQueue& pairs() { return pairs_; }
  const PairQueue& pairs() const { return pairs_; }
  void save_pairs() const;

  std::map<std::string, AuditSession>& sessions() { return sessions_; }
  const std::map<std::string, AuditSession>& sessions() const { return sessions_; }
  AuditSession& session(const std::string& id);
  std::string add_session(AuditSession session);
  void save_session(const std::string& id) const;

  std::map<std::string, WorkflowState>& workflows() { return workflows_; }
  WorkflowState& workflow(const std::string& id);
  std::string add_workflow(WorkflowState state);
  void save_workflow(const std::string& id) const;

  /// Seed = usable images of `seed_split` with a binary value for
  /// `attribute`, labeled with their current values; uncleaned = every other
  /// usable image with a binary value.
  std::string create_workflow_from_split(const std::string& attribute, Split seed_split,
                                         const WorkflowConfig& config);
  /// Writes a workflow's cleaned labels into the matrix (logged).
  std::size_t apply_workflow(const std::string& id, std::string_view source);

  ExportSummary export_to(const std::filesystem::path& path) const;

private:
  Project() = default;
  void save_meta() const;

  std::string id_;
  std::filesystem::path dir_;
  AnnotationMatrix original_;
  AnnotationMatrix matrix_;
  ProvenanceLog log_;
  std::unique_ptr<EmbeddingStore> embeddings_;
  std::map<std::string, std::string> guidelines_;
  PairQueue pairs_;
  std::map<std::string, AuditSession> sessions_;
  std::map<std::string, WorkflowState> workflows_;
};

}  // namespace labelforge
