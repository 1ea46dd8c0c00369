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

#include "labelforge/project.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "labelforge/error.hpp"

namespace labelforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMeta = "project.json";
constexpr const char* kOriginal = "original.txt";
constexpr const char* kLog = "provenance.log";
constexpr const char* kEmbeddings = "embeddings.txt";
constexpr const char* kPartition = "partition.txt";
constexpr const char* kIdentities = "identities.txt";
constexpr const char* kPairs = "pairs.tsv";

void copy_into(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot copy '" + from.string() + "': " + ec.message());
}

std::string next_id(const std::string& prefix, std::size_t existing,
                    const auto& taken) {
  std::size_t n = existing + 1;
  while (taken.contains(prefix + std::to_string(n))) ++n;
  return prefix + std::to_string(n);
}

}  // namespace

Project Project::create(const fs::path& dir, const ProjectSources& sources) {
  if (fs::exists(dir / kMeta)) {
    throw Error(ErrorCode::ProjectExists, "'" + dir.string() + "' already holds a project");
  }
  // Parse everything before touching the target directory.
  AnnotationMatrix matrix = ingest_attribute_file(sources.labels, sources.format);
  std::unique_ptr<EmbeddingStore> embeddings;
  if (sources.embeddings) embeddings = std::make_unique<EmbeddingStore>(read_embeddings(*sources.embeddings));

  std::error_code ec;
  fs::create_directories(dir / "sessions", ec);
  fs::create_directories(dir / "workflows", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + dir.string() + "'");

  export_cleaned(matrix, dir / kOriginal);
  if (sources.embeddings) copy_into(*sources.embeddings, dir / kEmbeddings);
  if (sources.partition) copy_into(*sources.partition, dir / kPartition);
  if (sources.identities) copy_into(*sources.identities, dir / kIdentities);
  std::ofstream(dir / kLog, std::ios::app);

  Project p;
  p.id_ = fs::absolute(dir).lexically_normal().filename().string();
  if (p.id_.empty()) p.id_ = fs::absolute(dir).lexically_normal().parent_path().filename().string();
  p.dir_ = dir;
  p.save_meta();
  return open(dir);
}

Project Project::open(const fs::path& dir) {
  std::ifstream meta_in(dir / kMeta);
  if (!meta_in) throw Error(ErrorCode::UnknownProject, "no project at '" + dir.string() + "'");
  Project p;
  p.dir_ = dir;
  try {
    const json meta = json::parse(meta_in);
    p.id_ = meta.at("project_id");
    const json guidelines = meta.value("guidelines", json::object());
    for (const auto& [k, v] : guidelines.items()) {
      p.guidelines_[k] = v.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("project.json: ") + e.what());
  }

  p.original_ = ingest_attribute_file(dir / kOriginal, AttributeFormat::Extended);
  if (fs::exists(dir / kPartition)) load_partition(p.original_, dir / kPartition);
  if (fs::exists(dir / kIdentities)) load_identities(p.original_, dir / kIdentities);
  p.log_ = ProvenanceLog::load(dir / kLog);
  p.matrix_ = replay(p.original_, p.log_);
  if (fs::exists(dir / kEmbeddings)) {
    p.embeddings_ = std::make_unique<EmbeddingStore>(read_embeddings(dir / kEmbeddings));
  }
  if (fs::exists(dir / kPairs)) p.pairs_ = PairQueue::load(dir / kPairs);
  for (const auto& entry : fs::directory_iterator(dir / "sessions")) {
    if (entry.path().extension() == ".tsv") {
      p.sessions_.emplace(entry.path().stem().string(), AuditSession::load(entry.path()));
    }
  }
  for (const auto& entry : fs::directory_iterator(dir / "workflows")) {
    if (entry.path().extension() == ".json") {
      p.workflows_.emplace(entry.path().stem().string(), load_workflow(entry.path()));
    }
  }
  return p;
}

void Project::save_meta() const {
  json meta = {{"format", "labelforge-project"},
               {"version", 1},
               {"project_id", id_},
               {"guidelines", guidelines_}};
  std::ofstream out(dir_ / kMeta, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write project.json");
  out << meta.dump(2) << '\n';
}

void Project::set_guideline(const std::string& attribute, std::string text) {
  matrix_.attribute_index(attribute);
  guidelines_[attribute] = std::move(text);
  save_meta();
}

const ProvenanceEntry& Project::apply_label(std::string_view image_id, std::string_view attribute,
                                            LabelValue value, std::string_view source) {
  const auto& entry = labelforge::apply_label(matrix_, log_, image_id, attribute, value, source);
  ProvenanceLog::append_to_file(dir_ / kLog, entry);
  return entry;
}

const ProvenanceEntry& Project::mark_unusable(std::string_view image_id, bool unusable,
                                              std::string_view source) {
  const auto& entry = labelforge::mark_unusable(matrix_, log_, image_id, unusable, source);
  ProvenanceLog::append_to_file(dir_ / kLog, entry);
  return entry;
}

void Project::save_pairs() const { pairs_.save(dir_ / kPairs); }

AuditSession& Project::session(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
  return it->second;
}

std::string Project::add_session(AuditSession session) {
  const std::string id = next_id("s", sessions_.size(), sessions_);
  sessions_.emplace(id, std::move(session));
  save_session(id);
  return id;
}

void Project::save_session(const std::string& id) const {
  sessions_.at(id).save(dir_ / "sessions" / (id + ".tsv"));
}

WorkflowState& Project::workflow(const std::string& id) {
  auto it = workflows_.find(id);
  if (it == workflows_.end()) throw Error(ErrorCode::UnknownWorkflow, "no workflow '" + id + "'");
  return it->second;
}

std::string Project::add_workflow(WorkflowState state) {
  const std::string id = next_id("w", workflows_.size(), workflows_);
  workflows_.emplace(id, std::move(state));
  save_workflow(id);
  return id;
}

void Project::save_workflow(const std::string& id) const {
  labelforge::save_workflow(workflows_.at(id), dir_ / "workflows" / (id + ".json"));
}

std::string Project::create_workflow_from_split(const std::string& attribute, Split seed_split,
                                                const WorkflowConfig& config) {
  const std::size_t a = matrix_.attribute_index(attribute);
  std::vector<std::pair<std::string, LabelValue>> seed;
  std::vector<std::string> rest;
  for (std::size_t i : matrix_.usable_images()) {
    const LabelValue v = matrix_.at(i, a);
    if (!is_binary(v)) continue;
    const auto& id = matrix_.image(i).image_id;
    if (matrix_.split(i) == seed_split) {
      seed.emplace_back(id, v);
    } else {
      rest.push_back(id);
    }
  }
  return add_workflow(init_workflow(seed, rest, attribute, config));
}

std::size_t Project::apply_workflow(const std::string& id, std::string_view source) {
  const WorkflowState& state = workflow(id);
  const std::size_t a = matrix_.attribute_index(state.attribute);
  std::size_t changed = 0;
  for (const auto& [image, label] : state.cleaned) {
    const std::size_t i = matrix_.image_index(image);
    if (matrix_.image(i).unusable || matrix_.at(i, a) == label) continue;
    apply_label(image, state.attribute, label, source);
    ++changed;
  }
  return changed;
}

ExportSummary Project::export_to(const fs::path& path) const { return export_cleaned(matrix_, path); }

}  // namespace labelforge
