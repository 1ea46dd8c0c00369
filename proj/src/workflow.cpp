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

#include "labelforge/workflow.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"
#include "labelforge/error.hpp"
#include "labelforge/rng.hpp"

namespace labelforge {

namespace {

constexpr std::uint64_t kAuditStream = 0xa0d17;
constexpr std::uint64_t kSgdStream = 0x56d0;

AgreementBin& find_bin(WorkflowState& state, std::size_t votes) {
  if (votes >= state.bins.size()) {
    throw Error(ErrorCode::UnknownBin, "no bin with " + std::to_string(votes) + " votes in round " +
                                           std::to_string(state.round));
  }
  return state.bins[votes];
}

AgreementBin& undecided_bin(WorkflowState& state, std::size_t votes) {
  AgreementBin& bin = find_bin(state, votes);
  if (bin.decision != BinDecision::Undecided) {
    throw Error(ErrorCode::BinAlreadyDecided,
                "bin " + std::to_string(votes) + " is " +
                    std::string(bin_decision_name(bin.decision)));
  }
  return bin;
}

void move_to_cleaned(WorkflowState& state, const std::string& id, LabelValue label) {
  state.uncleaned.erase(id);
  state.cleaned.insert_or_assign(id, label);
}

}  // namespace

void WorkflowConfig::validate() const {
  if (k < 2) throw Error(ErrorCode::BadConfig, "ensemble size k must be at least 2");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "subset_fraction must lie in (0, 1]");
  }
  if (!(target_error > 0.0 && target_error < 1.0)) {
    throw Error(ErrorCode::BadConfig, "target_error must lie in (0, 1)");
  }
  if (max_rounds < 1) throw Error(ErrorCode::BadConfig, "max_rounds must be at least 1");
  if (audit_sample_size < 1) throw Error(ErrorCode::BadConfig, "audit_sample_size must be positive");
  if (accept_min_agreement > k) {
    throw Error(ErrorCode::BadConfig, "accept_min_agreement cannot exceed k");
  }
  probe.validate();
}

std::string_view bin_decision_name(BinDecision d) {
  switch (d) {
    case BinDecision::Undecided: return "UNDECIDED";
    case BinDecision::Accepted: return "ACCEPTED";
    case BinDecision::ManualLabel: return "MANUAL_LABEL";
    case BinDecision::NextRound: return "NEXT_ROUND";
  }
  return "?";
}

std::string_view workflow_status_name(WorkflowStatus s) {
  switch (s) {
    case WorkflowStatus::Running: return "RUNNING";
    case WorkflowStatus::Converged: return "CONVERGED";
    case WorkflowStatus::Exhausted: return "EXHAUSTED";
  }
  return "?";
}

LabelValue majority_label(std::size_t votes, std::size_t k) {
  return from_bool(2 * votes >= k);
}

bool audit_eligible(std::size_t votes, const WorkflowConfig& config) {
  const std::size_t agreeing = std::max(votes, config.k - votes);
  return agreeing >= config.min_agreement();
}

WorkflowState init_workflow(const std::vector<std::pair<std::string, LabelValue>>& seed_clean,
                            const std::vector<std::string>& uncleaned, std::string attribute,
                            WorkflowConfig config) {
  config.validate();
  if (seed_clean.empty()) throw Error(ErrorCode::EmptySeed, "cleaned seed set is empty");
  WorkflowState state;
  state.attribute = std::move(attribute);
  state.config = config;
  for (const auto& [id, label] : seed_clean) {
    if (!is_binary(label)) {
      throw Error(ErrorCode::NonBinaryLabel, "seed label for '" + id + "' is not TRUE/FALSE");
    }
    if (!state.cleaned.emplace(id, label).second) {
      throw Error(ErrorCode::DuplicateId, "seed lists '" + id + "' twice");
    }
  }
  std::vector<std::string> overlap;
  for (const auto& id : uncleaned) {
    if (state.cleaned.contains(id)) overlap.push_back(id);
    if (!state.uncleaned.insert(id).second) {
      throw Error(ErrorCode::DuplicateId, "uncleaned pool lists '" + id + "' twice");
    }
  }
  if (!overlap.empty()) {
    throw Error(ErrorCode::PoolOverlap,
                std::to_string(overlap.size()) + " ids are in both pools", std::move(overlap));
  }
  check_convergence(state);
  return state;
}

void run_round(WorkflowState& state, const EmbeddingStore& embeddings) {
  if (state.status != WorkflowStatus::Running) {
    throw Error(ErrorCode::NotRunning, "workflow is " +
                                           std::string(workflow_status_name(state.status)));
  }
  const WorkflowConfig& cfg = state.config;
  if (state.round > 0 && (state.history.empty() || state.history.back().round != state.round)) {
    state.history.push_back(current_summary(state));
  }

  std::vector<std::pair<std::string, LabelValue>> trusted;
  for (const auto& [id, label] : state.cleaned) {
    if (is_binary(label)) trusted.emplace_back(id, label);
  }
  if (trusted.empty()) throw Error(ErrorCode::EmptySeed, "no binary labels in the cleaned pool");
  const LabeledRows pool = gather_labeled(embeddings, trusted);
  const std::vector<std::string> pending(state.uncleaned.begin(), state.uncleaned.end());
  const RowMatrix<double> pending_features = embeddings.gather(pending);

  const auto n = static_cast<std::size_t>(pool.features.rows());
  const std::size_t take =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(cfg.subset_fraction * n)), 1, n);
  const std::uint64_t round_id = state.round + 1;

  auto train_member = [&](std::size_t member) {
    const std::uint64_t member_seed = derive_seed(cfg.seed, round_id, member);
    std::vector<Eigen::Index> rows(n);
    std::iota(rows.begin(), rows.end(), Eigen::Index(0));
    Rng rng(member_seed);
    rng.partial_shuffle(std::span<Eigen::Index>(rows), take);
    rows.resize(take);
    std::sort(rows.begin(), rows.end());
    RowMatrix<double> x(static_cast<Eigen::Index>(take), pool.features.cols());
    Vector<double> y(static_cast<Eigen::Index>(take));
    for (std::size_t r = 0; r < take; ++r) {
      x.row(static_cast<Eigen::Index>(r)) = pool.features.row(rows[r]);
      y(static_cast<Eigen::Index>(r)) = pool.targets(rows[r]);
    }
    TrainConfig probe_cfg = cfg.probe;
    probe_cfg.seed = derive_seed(member_seed, kSgdStream);
    return train_probe(x, y, probe_cfg);
  };

  std::vector<std::future<ProbeModel>> jobs;
  jobs.reserve(cfg.k);
  for (std::size_t m = 0; m < cfg.k; ++m) {
    jobs.push_back(std::async(std::launch::async, train_member, m));
  }
  std::vector<std::size_t> votes(pending.size(), 0);
  for (auto& job : jobs) {
    const ProbeModel model = job.get();
    if (pending.empty()) continue;
    const Vector<double> p = predict_proba(model, pending_features);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      votes[i] += hard_label(p(static_cast<Eigen::Index>(i)));
    }
  }

  state.bins.assign(cfg.k + 1, AgreementBin{});
  for (std::size_t v = 0; v <= cfg.k; ++v) state.bins[v].votes = v;
  for (std::size_t i = 0; i < pending.size(); ++i) state.bins[votes[i]].members.push_back(pending[i]);
  state.round = round_id;
}

std::vector<std::string> audit_sample(const WorkflowState& state, std::size_t votes) {
  if (votes >= state.bins.size()) {
    throw Error(ErrorCode::UnknownBin, "no bin with " + std::to_string(votes) + " votes");
  }
  std::vector<std::string> members = state.bins[votes].members;
  const std::size_t take = std::min(state.config.audit_sample_size, members.size());
  Rng rng(derive_seed(state.config.seed ^ kAuditStream, state.round, votes));
  rng.partial_shuffle(std::span<std::string>(members), take);
  members.resize(take);
  std::sort(members.begin(), members.end());
  return members;
}

const AgreementBin& audit_bin(WorkflowState& state, std::size_t votes,
                              const std::map<std::string, LabelValue>& answers) {
  AgreementBin& bin = undecided_bin(state, votes);
  const WorkflowConfig& cfg = state.config;
  if (!audit_eligible(votes, cfg)) {
    throw Error(ErrorCode::BinNotEligible,
                "bin " + std::to_string(votes) + " lacks the agreement required for an audit");
  }
  const std::size_t expected = std::min(cfg.audit_sample_size, bin.members.size());
  if (expected == 0) throw Error(ErrorCode::AuditSampleSize, "bin is empty");
  std::vector<std::string> foreign;
  for (const auto& [id, _] : answers) {
    if (!std::binary_search(bin.members.begin(), bin.members.end(), id)) foreign.push_back(id);
  }
  if (!foreign.empty()) {
    throw Error(ErrorCode::SampleNotFromBin,
                std::to_string(foreign.size()) + " audited ids are not bin members",
                std::move(foreign));
  }
  if (answers.size() != expected) {
    throw Error(ErrorCode::AuditSampleSize, "audit covers " + std::to_string(answers.size()) +
                                                " members, expected " + std::to_string(expected));
  }

  const LabelValue predicted = majority_label(votes, cfg.k);
  BinAudit audit;
  for (const auto& [id, truth] : answers) {
    audit.sample_ids.push_back(id);
    audit.mismatches += truth != predicted;
  }
  audit.answers = answers;
  audit.error = static_cast<double>(audit.mismatches) / static_cast<double>(answers.size());
  audit.ci = wilson_interval(audit.mismatches, answers.size());

  const bool pass = static_cast<double>(audit.mismatches) <=
                    cfg.target_error * static_cast<double>(answers.size()) + 1e-9;
  bin.audit = std::move(audit);
  if (pass) {
    bin.decision = BinDecision::Accepted;
    for (const auto& id : bin.members) move_to_cleaned(state, id, predicted);
    state.blocks.push_back(
        {state.round, votes, bin.members.size(), BinDecision::Accepted, bin.audit->error});
  } else {
    bin.decision = BinDecision::NextRound;
  }
  check_convergence(state);
  return bin;
}

const AgreementBin& audit_bin(WorkflowState& state, std::size_t votes, const AuditSession& session) {
  if (session.status() != SessionStatus::Closed) {
    throw Error(ErrorCode::SessionNotClosed, "audit session is not closed");
  }
  const std::map<std::string, LabelValue> answers(session.consensus().begin(),
                                                  session.consensus().end());
  return audit_bin(state, votes, answers);
}

const AgreementBin& mark_manual(WorkflowState& state, std::size_t votes,
                                const std::map<std::string, LabelValue>& labels) {
  AgreementBin& bin = undecided_bin(state, votes);
  if (bin.members.size() > state.config.small_bin_threshold) {
    throw Error(ErrorCode::BinTooLarge, "bin " + std::to_string(votes) + " has " +
                                            std::to_string(bin.members.size()) +
                                            " members, manual limit is " +
                                            std::to_string(state.config.small_bin_threshold));
  }
  std::vector<std::string> missing;
  for (const auto& id : bin.members) {
    if (!labels.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::IncompleteLabels,
                std::to_string(missing.size()) + " bin members have no label", std::move(missing));
  }
  if (labels.size() != bin.members.size()) {
    std::vector<std::string> foreign;
    for (const auto& [id, _] : labels) {
      if (!std::binary_search(bin.members.begin(), bin.members.end(), id)) foreign.push_back(id);
    }
    throw Error(ErrorCode::SampleNotFromBin, "labels given for ids outside the bin",
                std::move(foreign));
  }
  for (const auto& id : bin.members) move_to_cleaned(state, id, labels.at(id));
  bin.decision = BinDecision::ManualLabel;
  state.blocks.push_back({state.round, votes, bin.members.size(), BinDecision::ManualLabel, 0.0});
  check_convergence(state);
  return bin;
}

const AgreementBin& defer_bin(WorkflowState& state, std::size_t votes) {
  AgreementBin& bin = undecided_bin(state, votes);
  bin.decision = BinDecision::NextRound;
  check_convergence(state);
  return bin;
}

double estimated_error(const WorkflowState& state) {
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& b : state.blocks) {
    weighted += b.error * static_cast<double>(b.size);
    total += b.size;
  }
  return total ? weighted / static_cast<double>(total) : 0.0;
}

WorkflowStatus check_convergence(WorkflowState& state) {
  WorkflowStatus next = WorkflowStatus::Running;
  if (state.uncleaned.empty()) {
    next = estimated_error(state) <= state.config.target_error ? WorkflowStatus::Converged
                                                                : WorkflowStatus::Exhausted;
  } else if (state.round >= state.config.max_rounds) {
    const bool open = std::any_of(state.bins.begin(), state.bins.end(), [](const AgreementBin& b) {
      return b.decision == BinDecision::Undecided && !b.members.empty();
    });
    if (!open) next = WorkflowStatus::Exhausted;
  }
  state.status = next;
  if (next != WorkflowStatus::Running &&
      (state.history.empty() || state.history.back().round != state.round)) {
    state.history.push_back(current_summary(state));
  }
  return next;
}

RoundSummary current_summary(const WorkflowState& state) {
  RoundSummary s;
  s.round = state.round;
  s.cleaned = state.cleaned.size();
  s.uncleaned = state.uncleaned.size();
  for (const auto& b : state.bins) {
    BinSummary bs{b.votes, b.members.size(), b.decision, std::nullopt};
    if (b.audit) bs.audited_error = b.audit->error;
    s.bins.push_back(bs);
  }
  return s;
}

// ---------------------------------------------------------------------------
// State file
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr int kStateVersion = 1;

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::array<Enum, N>& all,
               std::string_view (*name)(Enum)) {
  for (Enum e : all) {
    if (name(e) == text) return e;
  }
  throw Error(ErrorCode::Malformed, "unknown value '" + text + "' in workflow state");
}

const std::array<BinDecision, 4> kDecisions = {BinDecision::Undecided, BinDecision::Accepted,
                                               BinDecision::ManualLabel, BinDecision::NextRound};
const std::array<WorkflowStatus, 3> kStatuses = {WorkflowStatus::Running, WorkflowStatus::Converged,
                                                 WorkflowStatus::Exhausted};

LabelValue label_from_json(const json& j) {
  auto v = label_from_int(j.get<int>());
  if (!v) throw Error(ErrorCode::Malformed, "bad label in workflow state");
  return *v;
}

json config_json(const WorkflowConfig& c) {
  return {{"k", c.k},
          {"subset_fraction", c.subset_fraction},
          {"target_error", c.target_error},
          {"audit_sample_size", c.audit_sample_size},
          {"small_bin_threshold", c.small_bin_threshold},
          {"max_rounds", c.max_rounds},
          {"seed", c.seed},
          {"accept_min_agreement", c.accept_min_agreement},
          {"probe",
           {{"epochs", c.probe.epochs},
            {"learning_rate", c.probe.learning_rate},
            {"batch_size", c.probe.batch_size},
            {"l2", c.probe.l2},
            {"seed", c.probe.seed}}}};
}

// Missing keys keep their defaults so partial configs are accepted.
WorkflowConfig config_from(const json& j) {
  WorkflowConfig c;
  c.k = j.value("k", c.k);
  c.subset_fraction = j.value("subset_fraction", c.subset_fraction);
  c.target_error = j.value("target_error", c.target_error);
  c.audit_sample_size = j.value("audit_sample_size", c.audit_sample_size);
  c.small_bin_threshold = j.value("small_bin_threshold", c.small_bin_threshold);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.seed = j.value("seed", c.seed);
  c.accept_min_agreement = j.value("accept_min_agreement", c.accept_min_agreement);
  if (j.contains("probe")) {
    const json& p = j.at("probe");
    c.probe.epochs = p.value("epochs", c.probe.epochs);
    c.probe.learning_rate = p.value("learning_rate", c.probe.learning_rate);
    c.probe.batch_size = p.value("batch_size", c.probe.batch_size);
    c.probe.l2 = p.value("l2", c.probe.l2);
    c.probe.seed = p.value("seed", c.probe.seed);
  }
  return c;
}

json summary_json(const RoundSummary& s) {
  json bins = json::array();
  for (const auto& b : s.bins) {
    json jb = {{"votes", b.votes}, {"size", b.size}, {"decision", bin_decision_name(b.decision)}};
    jb["audited_error"] = b.audited_error ? json(*b.audited_error) : json(nullptr);
    bins.push_back(std::move(jb));
  }
  return {{"round", s.round}, {"cleaned", s.cleaned}, {"uncleaned", s.uncleaned}, {"bins", bins}};
}

RoundSummary summary_from(const json& j) {
  RoundSummary s;
  s.round = j.at("round");
  s.cleaned = j.at("cleaned");
  s.uncleaned = j.at("uncleaned");
  for (const auto& jb : j.at("bins")) {
    BinSummary b;
    b.votes = jb.at("votes");
    b.size = jb.at("size");
    b.decision = enum_from(jb.at("decision").get<std::string>(), kDecisions, bin_decision_name);
    if (!jb.at("audited_error").is_null()) b.audited_error = jb.at("audited_error").get<double>();
    s.bins.push_back(b);
  }
  return s;
}

}  // namespace

std::string workflow_config_to_json(const WorkflowConfig& config) {
  return config_json(config).dump();
}

WorkflowConfig workflow_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("workflow config is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "workflow config must be an object");
  WorkflowConfig c;
  try {
    c = config_from(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("workflow config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string workflow_to_json(const WorkflowState& state) {
  json j;
  j["format"] = "labelforge-workflow";
  j["version"] = kStateVersion;
  j["attribute"] = state.attribute;
  j["config"] = config_json(state.config);
  j["round"] = state.round;
  j["status"] = workflow_status_name(state.status);
  json cleaned = json::object();
  for (const auto& [id, v] : state.cleaned) cleaned[id] = to_int(v);
  j["cleaned"] = std::move(cleaned);
  j["uncleaned"] = state.uncleaned;
  json bins = json::array();
  for (const auto& b : state.bins) {
    json jb = {{"votes", b.votes}, {"members", b.members},
               {"decision", bin_decision_name(b.decision)}};
    if (b.audit) {
      json answers = json::object();
      for (const auto& [id, v] : b.audit->answers) answers[id] = to_int(v);
      jb["audit"] = {{"sample", b.audit->sample_ids},
                     {"answers", answers},
                     {"mismatches", b.audit->mismatches},
                     {"error", b.audit->error},
                     {"ci", {b.audit->ci.lo, b.audit->ci.hi}}};
    } else {
      jb["audit"] = nullptr;
    }
    bins.push_back(std::move(jb));
  }
  j["bins"] = std::move(bins);
  json blocks = json::array();
  for (const auto& b : state.blocks) {
    blocks.push_back({{"round", b.round}, {"votes", b.votes}, {"size", b.size},
                      {"decision", bin_decision_name(b.decision)}, {"error", b.error}});
  }
  j["blocks"] = std::move(blocks);
  json history = json::array();
  for (const auto& s : state.history) history.push_back(summary_json(s));
  j["history"] = std::move(history);
  return j.dump(1);
}

WorkflowState workflow_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "labelforge-workflow") {
      throw Error(ErrorCode::Malformed, "not a workflow state file");
    }
    if (j.at("version").get<int>() != kStateVersion) {
      throw Error(ErrorCode::Malformed, "unsupported workflow state version");
    }
    WorkflowState s;
    s.attribute = j.at("attribute");
    s.config = config_from(j.at("config"));
    s.round = j.at("round");
    s.status = enum_from(j.at("status").get<std::string>(), kStatuses, workflow_status_name);
    for (const auto& [id, v] : j.at("cleaned").items()) s.cleaned.emplace(id, label_from_json(v));
    for (const auto& id : j.at("uncleaned")) s.uncleaned.insert(id.get<std::string>());
    for (const auto& jb : j.at("bins")) {
      AgreementBin b;
      b.votes = jb.at("votes");
      b.members = jb.at("members").get<std::vector<std::string>>();
      b.decision = enum_from(jb.at("decision").get<std::string>(), kDecisions, bin_decision_name);
      if (!jb.at("audit").is_null()) {
        const json& ja = jb.at("audit");
        BinAudit a;
        a.sample_ids = ja.at("sample").get<std::vector<std::string>>();
        for (const auto& [id, v] : ja.at("answers").items()) a.answers.emplace(id, label_from_json(v));
        a.mismatches = ja.at("mismatches");
        a.error = ja.at("error");
        a.ci = {ja.at("ci").at(0).get<double>(), ja.at("ci").at(1).get<double>()};
        b.audit = std::move(a);
      }
      s.bins.push_back(std::move(b));
    }
    for (const auto& jb : j.at("blocks")) {
      CleanedBlock b;
      b.round = jb.at("round");
      b.votes = jb.at("votes");
      b.size = jb.at("size");
      b.decision = enum_from(jb.at("decision").get<std::string>(), kDecisions, bin_decision_name);
      b.error = jb.at("error");
      s.blocks.push_back(b);
    }
    for (const auto& js : j.at("history")) s.history.push_back(summary_from(js));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("workflow state: ") + e.what());
  }
}

void save_workflow(const WorkflowState& state, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + tmp.string() + "'");
    out << workflow_to_json(state) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

WorkflowState load_workflow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return workflow_from_json(buf.str());
}

}  // namespace labelforge
