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

#include "labelforge/duplicates.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "labelforge/text.hpp"

namespace labelforge {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pending: return "PENDING";
    case Verdict::Duplicate: return "DUPLICATE";
    case Verdict::NearDuplicateRejected: return "NEAR_DUPLICATE_REJECTED";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "PENDING") return Verdict::Pending;
  if (text == "DUPLICATE") return Verdict::Duplicate;
  if (text == "NEAR_DUPLICATE_REJECTED" || text == "NEAR_DUPLICATE") {
    return Verdict::NearDuplicateRejected;
  }
  return std::nullopt;
}

PairQueue::PairQueue(const std::vector<CandidatePair>& candidates) {
  records_.reserve(candidates.size());
  std::uint64_t next = 1;
  for (const auto& c : candidates) {
    PairRecord r;
    r.pair_id = next++;
    r.pair = c;
    records_.push_back(std::move(r));
  }
}

PairRecord& PairQueue::find(std::uint64_t pair_id) {
  for (auto& r : records_) {
    if (r.pair_id == pair_id) return r;
  }
  throw Error(ErrorCode::UnknownPair, "no pair " + std::to_string(pair_id));
}

const PairRecord& PairQueue::get(std::uint64_t pair_id) const {
  return const_cast<PairQueue*>(this)->find(pair_id);
}

VerdictOutcome PairQueue::record_verdict(std::uint64_t pair_id, Verdict verdict,
                                         std::string_view reviewer, std::string timestamp) {
  if (verdict == Verdict::Pending) {
    throw Error(ErrorCode::Validation, "PENDING is not a verdict");
  }
  PairRecord& r = find(pair_id);
  if (r.in_arbitration) {
    throw Error(ErrorCode::VerdictConflict, "pair " + std::to_string(pair_id) +
                                                " is awaiting arbitration");
  }
  if (r.verdict == Verdict::Pending) {
    r.verdict = verdict;
    r.reviewer = std::string(reviewer);
    r.timestamp = std::move(timestamp);
    return VerdictOutcome::Recorded;
  }
  if (r.verdict == verdict) return VerdictOutcome::Unchanged;
  r.in_arbitration = true;
  r.conflicting_reviewer = std::string(reviewer);
  r.conflicting_verdict = verdict;
  throw Error(ErrorCode::VerdictConflict,
              "pair " + std::to_string(pair_id) + ": " + r.reviewer + " said " +
                  std::string(verdict_name(r.verdict)) + ", " + std::string(reviewer) + " said " +
                  std::string(verdict_name(verdict)));
}

void PairQueue::resolve_arbitration(std::uint64_t pair_id, Verdict verdict,
                                    std::string_view arbiter, std::string timestamp) {
  if (verdict == Verdict::Pending) throw Error(ErrorCode::Validation, "PENDING is not a verdict");
  PairRecord& r = find(pair_id);
  if (!r.in_arbitration) {
    throw Error(ErrorCode::Validation, "pair " + std::to_string(pair_id) + " is not in arbitration");
  }
  r.verdict = verdict;
  r.reviewer = std::string(arbiter);
  r.timestamp = std::move(timestamp);
  r.in_arbitration = false;
  r.conflicting_reviewer.clear();
  r.conflicting_verdict = Verdict::Pending;
}

std::vector<const PairRecord*> PairQueue::pending() const {
  std::vector<const PairRecord*> out;
  for (const auto& r : records_) {
    if (r.verdict == Verdict::Pending) out.push_back(&r);
  }
  return out;
}

std::vector<const PairRecord*> PairQueue::arbitration_queue() const {
  std::vector<const PairRecord*> out;
  for (const auto& r : records_) {
    if (r.in_arbitration) out.push_back(&r);
  }
  return out;
}

void PairQueue::write_tsv(std::ostream& out) const {
  out << "pair_id\timage_a\timage_b\tsimilarity\tverdict\treviewer\ttimestamp\n";
  for (const auto& r : records_) {
    out << r.pair_id << '\t' << r.pair.image_a << '\t' << r.pair.image_b << '\t'
        << format_double(r.pair.similarity) << '\t';
    if (r.in_arbitration) {
      out << "ARBITRATION\t" << r.reviewer << ':' << verdict_name(r.verdict) << '|'
          << r.conflicting_reviewer << ':' << verdict_name(r.conflicting_verdict);
    } else {
      out << verdict_name(r.verdict) << '\t' << r.reviewer;
    }
    out << '\t' << r.timestamp << '\n';
  }
}

PairQueue PairQueue::read_tsv(std::istream& in, std::string_view source) {
  const std::string where(source);
  PairQueue q;
  std::set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("pair_id")) continue;
    const auto f = split_char(line, '\t');
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::Malformed, where + ":" + std::to_string(line_no) + ": " + what);
    };
    if (f.size() < 5 || f.size() > 7) throw fail("expected 5 to 7 tab-separated columns");
    PairRecord r;
    if (!parse_number(f[0], r.pair_id)) throw fail("bad pair id");
    r.pair.image_a = f[1];
    r.pair.image_b = f[2];
    if (!parse_number(f[3], r.pair.similarity)) throw fail("bad similarity");
    const std::string reviewer = f.size() > 5 ? f[5] : "";
    if (f.size() > 6) r.timestamp = f[6];
    if (f[4] == "ARBITRATION") {
      const auto parts = split_char(reviewer, '|');
      if (parts.size() != 2) throw fail("arbitration reviewer column");
      auto split_rv = [&](const std::string& s, std::string& name, Verdict& v) {
        const auto colon = s.rfind(':');
        auto parsed = colon == std::string::npos ? std::nullopt
                                                 : parse_verdict(std::string_view(s).substr(colon + 1));
        if (!parsed) throw fail("arbitration entry '" + s + "'");
        name = s.substr(0, colon);
        v = *parsed;
      };
      split_rv(parts[0], r.reviewer, r.verdict);
      split_rv(parts[1], r.conflicting_reviewer, r.conflicting_verdict);
      r.in_arbitration = true;
    } else {
      auto v = parse_verdict(f[4]);
      if (!v) throw fail("unknown verdict '" + f[4] + "'");
      r.verdict = *v;
      r.reviewer = reviewer;
    }
    if (!seen.insert(r.pair_id).second) throw fail("duplicate pair id");
    q.records_.push_back(std::move(r));
  }
  return q;
}

void PairQueue::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  write_tsv(out);
}

PairQueue PairQueue::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  return read_tsv(in, path.string());
}

std::vector<ConflictCounts> attribute_conflicts(std::span<const PairRecord> pairs,
                                                const AnnotationMatrix& matrix) {
  const std::size_t width = matrix.attribute_count();
  std::vector<ConflictCounts> counts(width);
  for (std::size_t a = 0; a < width; ++a) counts[a].attribute = matrix.attributes()[a];

  for (const auto& record : pairs) {
    if (!record.confirmed()) continue;
    const std::size_t ia = matrix.image_index(record.pair.image_a);
    const std::size_t ib = matrix.image_index(record.pair.image_b);
    if (matrix.image(ia).unusable || matrix.image(ib).unusable) continue;
    for (std::size_t a = 0; a < width; ++a) {
      const LabelValue va = matrix.at(ia, a);
      const LabelValue vb = matrix.at(ib, a);
      if (!is_binary(va) || !is_binary(vb)) continue;
      auto& c = counts[a];
      ++c.n_total;
      c.n_differ += va != vb;
      c.n_p += (va == LabelValue::True) + (vb == LabelValue::True);
      c.n_n += (va == LabelValue::False) + (vb == LabelValue::False);
    }
  }
  return counts;
}

}  // namespace labelforge
