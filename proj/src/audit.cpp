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

#include "labelforge/audit.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "labelforge/error.hpp"
#include "labelforge/rng.hpp"
#include "labelforge/text.hpp"

namespace labelforge {

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::Validation, "confidence must lie in (0, 1)");
  }
  const boost::math::normal standard;
  return boost::math::quantile(standard, 0.5 + confidence / 2.0);
}

Interval wilson_interval(std::size_t successes, std::size_t n, double confidence) {
  if (n == 0 || successes > n) throw Error(ErrorCode::BadCounts, "need 0 <= successes <= n, n > 0");
  const double z = normal_critical_value(confidence);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lo = 0.0;
  if (successes == n) ci.hi = 1.0;
  ci.lo = std::min(ci.lo, p);
  ci.hi = std::max(ci.hi, p);
  return ci;
}

SamplingPlan sampling_plan(const AnnotationMatrix& matrix, std::string_view attribute,
                           LabelValue target, std::size_t min_per_value, std::uint64_t seed) {
  if (!is_binary(target)) {
    throw Error(ErrorCode::Validation, "sampling strata are TRUE or FALSE");
  }
  const std::size_t a = matrix.attribute_index(attribute);
  std::vector<std::string> population;
  for (std::size_t i : matrix.usable_images()) {
    if (matrix.at(i, a) == target) population.push_back(matrix.image(i).image_id);
  }
  if (population.empty()) {
    throw Error(ErrorCode::EmptyPopulation, "no usable image has " + std::string(attribute) + " = " +
                                                std::string(label_name(target)));
  }
  SamplingPlan plan;
  plan.attribute = std::string(attribute);
  plan.target_value = target;
  plan.min_per_value = min_per_value;
  plan.rng_seed = seed;
  plan.generator = std::string(Rng::kName);
  plan.population = population.size();
  plan.short_population = population.size() < min_per_value;
  const std::size_t take = std::min(min_per_value, population.size());
  Rng rng(seed);
  rng.partial_shuffle(std::span<std::string>(population), take);
  population.resize(take);
  plan.sample_ids = std::move(population);
  return plan;
}

std::string_view session_status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::Open: return "OPEN";
    case SessionStatus::Reconciling: return "RECONCILING";
    case SessionStatus::Closed: return "CLOSED";
  }
  return "?";
}

std::string_view pass_name(Pass p) { return p == Pass::A ? "a" : "b"; }

AuditSession::AuditSession(SamplingPlan plan) : plan_(std::move(plan)) {
  std::vector<std::string> sorted = plan_.sample_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::DuplicateId, "sample lists an image twice");
  }
}

bool AuditSession::in_sample(std::string_view image_id) const {
  return std::find(plan_.sample_ids.begin(), plan_.sample_ids.end(), image_id) !=
         plan_.sample_ids.end();
}

void AuditSession::record(Pass pass, std::string_view image_id, LabelValue value) {
  if (status_ == SessionStatus::Closed) throw Error(ErrorCode::SessionClosed, "session is closed");
  if (status_ != SessionStatus::Open) {
    throw Error(ErrorCode::Validation, "passes are frozen once reconciliation starts");
  }
  if (!in_sample(image_id)) {
    throw Error(ErrorCode::NotInSample, "image '" + std::string(image_id) + "' is not in the sample");
  }
  auto& target = pass == Pass::A ? pass_a_ : pass_b_;
  target.insert_or_assign(std::string(image_id), value);
}

const std::map<std::string, LabelValue, std::less<>>& AuditSession::labels(Pass pass) const {
  return pass == Pass::A ? pass_a_ : pass_b_;
}

bool AuditSession::pass_complete(Pass pass) const {
  return labels(pass).size() == plan_.sample_ids.size();
}

std::vector<std::string> AuditSession::unlabeled(Pass pass) const {
  std::vector<std::string> out;
  const auto& done = labels(pass);
  for (const auto& id : plan_.sample_ids) {
    if (!done.contains(id)) out.push_back(id);
  }
  return out;
}

std::vector<std::string> AuditSession::disagreements() const {
  std::vector<std::string> out;
  for (const auto& id : plan_.sample_ids) {
    auto a = pass_a_.find(id);
    auto b = pass_b_.find(id);
    if (a != pass_a_.end() && b != pass_b_.end() && a->second != b->second) out.push_back(id);
  }
  return out;
}

void AuditSession::begin_reconciliation() {
  if (status_ == SessionStatus::Closed) throw Error(ErrorCode::SessionClosed, "session is closed");
  if (status_ == SessionStatus::Reconciling) return;
  std::vector<std::string> missing;
  for (Pass p : {Pass::A, Pass::B}) {
    for (auto& id : unlabeled(p)) missing.push_back(std::string(pass_name(p)) + ":" + id);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::IncompletePasses,
                std::to_string(missing.size()) + " labels still missing", std::move(missing));
  }
  status_ = SessionStatus::Reconciling;
}

void AuditSession::resolve(std::string_view image_id, LabelValue consensus) {
  if (status_ == SessionStatus::Closed) throw Error(ErrorCode::SessionClosed, "session is closed");
  if (status_ == SessionStatus::Open) begin_reconciliation();
  auto a = pass_a_.find(image_id);
  auto b = pass_b_.find(image_id);
  if (a == pass_a_.end() || b == pass_b_.end() || a->second == b->second) {
    throw Error(ErrorCode::NotADisagreement,
                "image '" + std::string(image_id) + "' is not a disagreement");
  }
  resolutions_.insert_or_assign(std::string(image_id), consensus);
}

void AuditSession::close() {
  if (status_ == SessionStatus::Closed) return;
  begin_reconciliation();
  std::vector<std::string> unresolved;
  for (auto& id : disagreements()) {
    if (!resolutions_.contains(id)) unresolved.push_back(id);
  }
  if (!unresolved.empty()) {
    throw Error(ErrorCode::UnresolvedDisagreements,
                std::to_string(unresolved.size()) + " disagreements lack a consensus",
                std::move(unresolved));
  }
  consensus_.clear();
  for (const auto& id : plan_.sample_ids) {
    auto r = resolutions_.find(id);
    consensus_.emplace(id, r != resolutions_.end() ? r->second : pass_a_.at(id));
  }
  status_ = SessionStatus::Closed;
}

// Session file: "key<TAB>value" header lines, a column header, then one row
// per sampled image. Missing labels are written as ".".
void AuditSession::write(std::ostream& out) const {
  out << "# labelforge audit session v1\n";
  out << "attribute\t" << plan_.attribute << '\n';
  out << "value\t" << to_int(plan_.target_value) << '\n';
  out << "seed\t" << plan_.rng_seed << '\n';
  out << "generator\t" << plan_.generator << '\n';
  out << "min_per_value\t" << plan_.min_per_value << '\n';
  out << "population\t" << plan_.population << '\n';
  out << "status\t" << session_status_name(status_) << '\n';
  out << "image_id\tpass_a\tpass_b\tconsensus\n";
  auto cell = [](const auto& map, const std::string& id) -> std::string {
    auto it = map.find(id);
    return it == map.end() ? "." : std::to_string(to_int(it->second));
  };
  for (const auto& id : plan_.sample_ids) {
    const std::string consensus =
        status_ == SessionStatus::Closed ? cell(consensus_, id) : cell(resolutions_, id);
    out << id << '\t' << cell(pass_a_, id) << '\t' << cell(pass_b_, id) << '\t' << consensus
        << '\n';
  }
}

AuditSession AuditSession::read(std::istream& in, std::string_view source) {
  const std::string where(source);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::Malformed, where + ":" + std::to_string(line_no) + ": " + what);
  };
  SamplingPlan plan;
  std::string status_text = "OPEN";
  struct Row { std::string id, a, b, c; };
  std::vector<Row> rows;
  bool in_rows = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("#")) continue;
    const auto f = split_char(line, '\t');
    if (!in_rows) {
      if (f.size() == 4 && f[0] == "image_id") {
        in_rows = true;
        continue;
      }
      if (f.size() != 2) throw fail("expected key<TAB>value");
      const std::string& key = f[0];
      const std::string& val = f[1];
      bool ok = true;
      if (key == "attribute") plan.attribute = val;
      else if (key == "value") {
        auto v = parse_label(val);
        ok = v && is_binary(*v);
        if (ok) plan.target_value = *v;
      } else if (key == "seed") ok = parse_number(val, plan.rng_seed);
      else if (key == "generator") plan.generator = val;
      else if (key == "min_per_value") ok = parse_number(val, plan.min_per_value);
      else if (key == "population") ok = parse_number(val, plan.population);
      else if (key == "status") status_text = val;
      if (!ok) throw fail("bad value for '" + key + "'");
      continue;
    }
    if (f.size() != 4) throw fail("expected 4 columns");
    rows.push_back({f[0], f[1], f[2], f[3]});
  }
  for (const auto& r : rows) plan.sample_ids.push_back(r.id);
  plan.short_population = plan.population < plan.min_per_value;

  AuditSession s(std::move(plan));
  auto label = [&](const std::string& text) -> std::optional<LabelValue> {
    if (text == ".") return std::nullopt;
    auto v = parse_label(text);
    if (!v) throw fail("bad label '" + text + "'");
    return v;
  };
  for (const auto& r : rows) {
    if (auto v = label(r.a)) s.pass_a_.emplace(r.id, *v);
    if (auto v = label(r.b)) s.pass_b_.emplace(r.id, *v);
  }
  if (status_text == "OPEN") {
    s.status_ = SessionStatus::Open;
  } else if (status_text == "RECONCILING") {
    s.status_ = SessionStatus::Reconciling;
    for (const auto& r : rows) {
      if (auto v = label(r.c)) s.resolutions_.emplace(r.id, *v);
    }
  } else if (status_text == "CLOSED") {
    s.status_ = SessionStatus::Reconciling;
    for (const auto& r : rows) {
      auto v = label(r.c);
      if (!v) throw fail("closed session without consensus for '" + r.id + "'");
      const auto a = s.pass_a_.find(r.id);
      const auto b = s.pass_b_.find(r.id);
      if (a != s.pass_a_.end() && b != s.pass_b_.end() && a->second != b->second) {
        s.resolutions_.emplace(r.id, *v);
      }
    }
    s.close();
  } else {
    throw fail("unknown status '" + status_text + "'");
  }
  return s;
}

void AuditSession::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  write(out);
}

AuditSession AuditSession::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return read(in, path.string());
}

ErrorRateReport error_rates(const AuditSession& session, const AnnotationMatrix& original,
                            double confidence) {
  if (session.status() != SessionStatus::Closed) {
    throw Error(ErrorCode::SessionNotClosed, "session for '" + session.plan().attribute +
                                                 "' is " +
                                                 std::string(session_status_name(session.status())));
  }
  const auto& plan = session.plan();
  const std::size_t a = original.attribute_index(plan.attribute);
  StratumError s;
  s.original = plan.target_value;
  for (const auto& [id, consensus] : session.consensus()) {
    const LabelValue orig = original.at(original.image_index(id), a);
    if (orig != plan.target_value) {
      throw Error(ErrorCode::Validation, "image '" + id + "' is not in the " +
                                             std::string(label_name(plan.target_value)) +
                                             " stratum of the original labels");
    }
    ++s.n;
    if (consensus != orig) ++s.mismatches;
    if (consensus == LabelValue::InfoNotVisible) ++s.info_not_visible;
  }
  if (s.n == 0) throw Error(ErrorCode::EmptyPopulation, "session has no samples");
  s.rate = static_cast<double>(s.mismatches) / static_cast<double>(s.n);
  s.ci = wilson_interval(s.mismatches, s.n, confidence);

  ErrorRateReport report;
  report.attribute = plan.attribute;
  (plan.target_value == LabelValue::True ? report.positive : report.negative) = s;
  return report;
}

std::vector<ErrorRateReport> error_rates(std::span<const AuditSession> sessions,
                                         const AnnotationMatrix& original, double confidence) {
  std::vector<ErrorRateReport> out;
  for (const auto& session : sessions) {
    ErrorRateReport one = error_rates(session, original, confidence);
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& r) { return r.attribute == one.attribute; });
    if (it == out.end()) {
      out.push_back(std::move(one));
      continue;
    }
    auto merge = [&](std::optional<StratumError>& into, const std::optional<StratumError>& from) {
      if (!from) return;
      if (into) {
        throw Error(ErrorCode::Validation, "two sessions audit the same stratum of '" +
                                               it->attribute + "'");
      }
      into = from;
    };
    merge(it->negative, one.negative);
    merge(it->positive, one.positive);
  }
  return out;
}

AnnotationMatrix pass_matrix(const AuditSession& session, Pass pass) {
  AnnotationMatrix m({session.plan().attribute});
  const auto& labels = session.labels(pass);
  for (const auto& id : session.plan().sample_ids) {
    auto it = labels.find(id);
    if (it == labels.end()) continue;
    const LabelValue row[] = {it->second};
    m.add_image({id, std::nullopt, false}, row);
  }
  return m;
}

}  // namespace labelforge
