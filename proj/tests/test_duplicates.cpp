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


#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "labelforge/duplicates.hpp"
#include "labelforge/error.hpp"
#include "labelforge/rng.hpp"

using namespace labelforge;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a labelforge::Error");
  return ErrorCode::Validation;
}

EmbeddingStore store2(std::initializer_list<std::tuple<const char*, const char*, double, double>> rows) {
  EmbeddingStore s(2);
  for (const auto& [id, identity, x, y] : rows) s.add(id, identity, Eigen::Vector2d(x, y));
  return s;
}

using PairKey = std::pair<std::string, std::string>;

std::set<PairKey> keys(const std::vector<CandidatePair>& pairs) {
  std::set<PairKey> out;
  for (const auto& p : pairs) out.emplace(p.image_a, p.image_b);
  return out;
}

}  // namespace

TEST_CASE("candidate pairs from hand-computed cosines") {
  SUBCASE("identical vectors in one identity give one pair at similarity 1") {
    const auto pairs = find_candidate_pairs(store2({{"b.jpg", "7", 1, 2}, {"a.jpg", "7", 1, 2}}));
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].image_a == "a.jpg");
    CHECK(pairs[0].image_b == "b.jpg");
    CHECK(pairs[0].similarity == doctest::Approx(1.0));
    CHECK(pairs[0].identity == "7");
  }
  SUBCASE("cosine 0.8 is below the default threshold") {
    const auto s = store2({{"a", "1", 1, 0}, {"b", "1", 0.8, 0.6}});
    CHECK(find_candidate_pairs(s).empty());
    const auto low = find_candidate_pairs(s, 0.8 - 1e-12);
    REQUIRE(low.size() == 1);
    CHECK(low[0].similarity == doctest::Approx(0.8));
  }
  SUBCASE("identical vectors under different identities are never paired") {
    CHECK(find_candidate_pairs(store2({{"a", "1", 1, 1}, {"b", "2", 1, 1}})).empty());
  }
  SUBCASE("threshold must lie in (-1, 1]") {
    const auto s = store2({{"a", "1", 1, 1}});
    CHECK(code_of([&] { find_candidate_pairs(s, -1.0); }) == ErrorCode::BadThreshold);
    CHECK(code_of([&] { find_candidate_pairs(s, 1.01); }) == ErrorCode::BadThreshold);
    CHECK_NOTHROW(find_candidate_pairs(s, 1.0));
  }
}

TEST_CASE("embedding store validation") {
  EmbeddingStore s(2);
  CHECK(code_of([&] { s.add("a", "1", Eigen::Vector3d(1, 2, 3)); }) == ErrorCode::DimMismatch);
  CHECK(code_of([&] { s.add("a", "1", Eigen::Vector2d(0, 0)); }) == ErrorCode::ZeroNormVector);
  CHECK(code_of([&] { s.add("a", "1", Eigen::Vector2d(NAN, 0)); }) == ErrorCode::BadValue);
  s.add("a", "1", Eigen::Vector2d(1, 0));
  CHECK(code_of([&] { s.add("a", "1", Eigen::Vector2d(1, 0)); }) == ErrorCode::DuplicateId);
}

TEST_CASE("embedding file round trip") {
  std::istringstream in("dim=3\nx.jpg 5 0.1 0.2 0.3\ny.jpg 5 -1 2.5e-3 4\n");
  const EmbeddingStore s = read_embeddings(in);
  CHECK(s.size() == 2);
  CHECK(s.dim() == 3);
  CHECK(s.identity(1) == "5");
  std::ostringstream out;
  write_embeddings(out, s);
  std::istringstream again(out.str());
  const EmbeddingStore t = read_embeddings(again);
  CHECK(t.matrix() == s.matrix());
  std::istringstream bad("dim=2\nx.jpg 5 0.1\n");
  CHECK(code_of([&] { read_embeddings(bad); }) == ErrorCode::DimMismatch);
}

TEST_CASE("threshold monotonicity, identity gating, symmetry and order independence") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng.below(6));
    const std::size_t n = 2 + rng.below(24);
    const std::size_t identities = 1 + rng.below(4);
    std::vector<std::tuple<std::string, std::string, Eigen::VectorXd>> rows;
    Eigen::VectorXd anchor(dim);
    for (Eigen::Index j = 0; j < dim; ++j) anchor(j) = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd v(dim);
      // Near copies of one anchor so that high similarities actually occur.
      const double noise = rng.uniform();
      for (Eigen::Index j = 0; j < dim; ++j) v(j) = anchor(j) + noise * rng.normal();
      if (v.squaredNorm() == 0.0) v(0) = 1.0;
      rows.emplace_back("img" + std::to_string(i), std::to_string(rng.below(identities)), v);
    }
    EmbeddingStore forward(dim), backward(dim);
    for (const auto& [id, ident, v] : rows) forward.add(id, ident, v);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      backward.add(std::get<0>(*it), std::get<1>(*it), std::get<2>(*it));
    }
    double t1 = 2.0 * rng.uniform() - 0.999;
    double t2 = 2.0 * rng.uniform() - 0.999;
    if (t1 > t2) std::swap(t1, t2);
    t2 = std::min(t2, 1.0);

    const auto lo = find_candidate_pairs(forward, t1);
    const auto hi = find_candidate_pairs(forward, t2);
    const auto lo_keys = keys(lo), hi_keys = keys(hi);
    CHECK(std::includes(lo_keys.begin(), lo_keys.end(), hi_keys.begin(), hi_keys.end()));
    CHECK(keys(find_candidate_pairs(backward, t1)) == lo_keys);

    for (const auto& p : lo) {
      const std::size_t a = *forward.find(p.image_a);
      const std::size_t b = *forward.find(p.image_b);
      CHECK(forward.identity(a) == forward.identity(b));
      CHECK(p.image_a < p.image_b);
      CHECK(p.similarity >= t1);
      const double ab = cosine_similarity(forward.row(a), forward.row(b));
      const double ba = cosine_similarity(forward.row(b), forward.row(a));
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    }
    // Every same-identity pair at or above the threshold is found.
    std::size_t expected = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (forward.identity(i) == forward.identity(j) &&
            cosine_similarity(forward.row(i), forward.row(j)) >= t1 + 1e-12) {
          ++expected;
        }
      }
    }
    CHECK(lo.size() >= expected);
  }
}

TEST_CASE("float and double stores agree on pairs") {
  BasicEmbeddingStore<float> f(3);
  EmbeddingStore d(3);
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    f.add("i" + std::to_string(i), "0", v.cast<float>());
    d.add("i" + std::to_string(i), "0", v);
  }
  CHECK(keys(find_candidate_pairs(f, 0.5)).size() > 0);
  CHECK(keys(find_candidate_pairs(f, 0.5)) == keys(find_candidate_pairs(d, 0.5)));
}

TEST_CASE("verdict recording") {
  PairQueue q({{"a", "b", 0.95, "1"}, {"c", "d", 0.97, "2"}});
  const auto id = q.records()[0].pair_id;
  const auto other = q.records()[1].pair_id;

  SUBCASE("first verdict sticks, identical resubmission is a no-op") {
    CHECK(q.record_verdict(id, Verdict::Duplicate, "r1") == VerdictOutcome::Recorded);
    CHECK(q.record_verdict(id, Verdict::Duplicate, "r2") == VerdictOutcome::Unchanged);
    CHECK(q.get(id).reviewer == "r1");
    CHECK(q.get(id).confirmed());
  }
  SUBCASE("opposite verdict goes to arbitration without overwriting") {
    q.record_verdict(id, Verdict::Duplicate, "r1");
    CHECK(code_of([&] { q.record_verdict(id, Verdict::NearDuplicateRejected, "r2"); }) ==
          ErrorCode::VerdictConflict);
    CHECK(q.get(id).verdict == Verdict::Duplicate);
    CHECK(q.get(id).in_arbitration);
    CHECK_FALSE(q.get(id).confirmed());
    REQUIRE(q.arbitration_queue().size() == 1);
    q.resolve_arbitration(id, Verdict::NearDuplicateRejected, "lead");
    CHECK_FALSE(q.get(id).in_arbitration);
    CHECK(q.get(id).verdict == Verdict::NearDuplicateRejected);
    CHECK(q.arbitration_queue().empty());
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { q.record_verdict(9999, Verdict::Duplicate, "r"); }) == ErrorCode::UnknownPair);
    CHECK(code_of([&] { q.record_verdict(id, Verdict::Pending, "r"); }) == ErrorCode::Validation);
    CHECK(code_of([&] { q.resolve_arbitration(id, Verdict::Duplicate, "r"); }) ==
          ErrorCode::Validation);
  }
  SUBCASE("pending list shrinks as verdicts arrive") {
    CHECK(q.pending().size() == 2);
    q.record_verdict(other, Verdict::NearDuplicateRejected, "r");
    CHECK(q.pending().size() == 1);
  }
}

TEST_CASE("pair queue TSV round trip, including arbitration") {
  PairQueue q({{"a", "b", 0.95, "1"}, {"c", "d", 0.97, "2"}, {"e", "f", 0.91, "3"}});
  q.record_verdict(q.records()[0].pair_id, Verdict::Duplicate, "r1", "2026-01-01T00:00:00Z");
  q.record_verdict(q.records()[1].pair_id, Verdict::Duplicate, "r1", "2026-01-01T00:00:00Z");
  try {
    q.record_verdict(q.records()[1].pair_id, Verdict::NearDuplicateRejected, "r2");
  } catch (const Error&) {
  }
  std::ostringstream out;
  q.write_tsv(out);
  std::istringstream in(out.str());
  const PairQueue back = PairQueue::read_tsv(in);
  REQUIRE(back.records().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& x = q.records()[i];
    const auto& y = back.records()[i];
    CHECK(x.pair_id == y.pair_id);
    CHECK(x.pair.image_a == y.pair.image_a);
    CHECK(x.verdict == y.verdict);
    CHECK(x.reviewer == y.reviewer);
    CHECK(x.in_arbitration == y.in_arbitration);
    CHECK(x.conflicting_reviewer == y.conflicting_reviewer);
    CHECK(x.pair.similarity == y.pair.similarity);
  }
  std::istringstream six("1\ta\tb\t0.95\tDUPLICATE\tr1\n");
  CHECK(PairQueue::read_tsv(six).records()[0].confirmed());
  std::istringstream dup("1\ta\tb\t0.95\tDUPLICATE\tr1\n1\tc\td\t0.9\tPENDING\t\n");
  CHECK(code_of([&] { PairQueue::read_tsv(dup); }) == ErrorCode::Malformed);
}

TEST_CASE("attribute_conflicts") {
  AnnotationMatrix m({"MSO", "Male"});
  auto add = [&](const char* id, LabelValue mso, LabelValue male) {
    const LabelValue row[] = {mso, male};
    m.add_image({id, std::nullopt, false}, row);
  };
  const auto T = LabelValue::True, F = LabelValue::False, I = LabelValue::InfoNotVisible;
  add("a1", T, T);
  add("a2", T, T);
  add("b1", F, T);
  add("b2", T, T);
  add("c1", F, F);
  add("c2", F, F);
  add("d1", T, I);
  add("d2", T, T);
  add("e1", T, T);
  add("e2", F, F);

  PairQueue q({{"a1", "a2", 0.99, "1"},
               {"b1", "b2", 0.99, "2"},
               {"c1", "c2", 0.99, "3"},
               {"d1", "d2", 0.99, "4"},
               {"e1", "e2", 0.99, "5"}});
  const auto ids = [&](std::size_t i) { return q.records()[i].pair_id; };
  for (std::size_t i = 0; i < 4; ++i) q.record_verdict(ids(i), Verdict::Duplicate, "r");
  q.record_verdict(ids(4), Verdict::NearDuplicateRejected, "r");

  SUBCASE("three crafted pairs, one MSO conflict") {
    PairQueue three({{"a1", "a2", 0.99, "1"}, {"b1", "b2", 0.99, "2"}, {"c1", "c2", 0.99, "3"}});
    for (const auto& r : std::vector<PairRecord>(three.records())) {
      three.record_verdict(r.pair_id, Verdict::Duplicate, "r");
    }
    const auto c = attribute_conflicts(three.records(), m);
    CHECK(c[0].attribute == "MSO");
    CHECK(c[0].n_differ == 1);
    CHECK(c[0].n_total == 3);
    CHECK(c[0].n_p == 3);
    CHECK(c[0].n_n == 3);
  }
  SUBCASE("rejected pairs never count; info_not_visible drops the pair for that attribute") {
    const auto c = attribute_conflicts(q.records(), m);
    CHECK(c[0].n_total == 4);
    CHECK(c[1].n_total == 3);
    CHECK(c[1].n_differ == 0);
  }
  SUBCASE("pending pairs never count") {
    PairQueue pending({{"b1", "b2", 0.99, "2"}});
    const auto c = attribute_conflicts(pending.records(), m);
    CHECK(c[0].n_total == 0);
  }
  SUBCASE("equal values everywhere give zero differences") {
    PairQueue one({{"a1", "a2", 0.99, "1"}});
    one.record_verdict(one.records()[0].pair_id, Verdict::Duplicate, "r");
    for (const auto& c : attribute_conflicts(one.records(), m)) CHECK(c.n_differ == 0);
  }
  SUBCASE("unknown members") {
    PairQueue ghost({{"a1", "zz", 0.99, "1"}});
    ghost.record_verdict(ghost.records()[0].pair_id, Verdict::Duplicate, "r");
    CHECK(code_of([&] { attribute_conflicts(ghost.records(), m); }) == ErrorCode::UnknownImage);
  }
}

TEST_CASE("Male column counts of the published duplicate set") {
  // 5068 confirmed pairs: 12 conflicting, 2238 both TRUE, 2818 both FALSE.
  AnnotationMatrix m({"Male"});
  std::vector<CandidatePair> cands;
  auto add_pair = [&](std::size_t k, LabelValue a, LabelValue b) {
    const std::string ia = "p" + std::to_string(k) + "a", ib = "p" + std::to_string(k) + "b";
    m.add_image({ia, std::nullopt, false}, std::span<const LabelValue>(&a, 1));
    m.add_image({ib, std::nullopt, false}, std::span<const LabelValue>(&b, 1));
    cands.push_back({ia, ib, 0.95, std::to_string(k)});
  };
  std::size_t k = 0;
  for (int i = 0; i < 12; ++i) add_pair(k++, LabelValue::True, LabelValue::False);
  for (int i = 0; i < 2238; ++i) add_pair(k++, LabelValue::True, LabelValue::True);
  for (int i = 0; i < 2818; ++i) add_pair(k++, LabelValue::False, LabelValue::False);
  PairQueue q(cands);
  for (const auto& r : std::vector<PairRecord>(q.records())) {
    q.record_verdict(r.pair_id, Verdict::Duplicate, "r");
  }
  const auto c = attribute_conflicts(q.records(), m);
  CHECK(c[0].n_differ == 12);
  CHECK(c[0].n_p == 4488);
  CHECK(c[0].n_n == 5648);
  CHECK(c[0].n_total == 5068);
}
