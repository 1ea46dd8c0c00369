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

#include <sstream>

#include "labelforge/annotation.hpp"
#include "labelforge/error.hpp"
#include "labelforge/rng.hpp"
#include "support/tempdir.hpp"

using namespace labelforge;
using labelforge::testing::TempDir;
using labelforge::testing::slurp;

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

AnnotationMatrix parse(const std::string& text, AttributeFormat f = AttributeFormat::CelebaOriginal) {
  std::istringstream in(text);
  return parse_attribute_list(in, f);
}

const char* kSmall =
    "3\n"
    "Male Smiling\n"
    "000001.jpg  1 -1\n"
    "000002.jpg -1 -1   \n"
    "000003.jpg  1  1\n";

}  // namespace

TEST_CASE("label values serialize bijectively to 1, -1, 0") {
  for (LabelValue v : {LabelValue::True, LabelValue::False, LabelValue::InfoNotVisible}) {
    CHECK(label_from_int(to_int(v)) == v);
    CHECK(parse_label(label_name(v)) == v);
    CHECK(parse_label(std::to_string(to_int(v))) == v);
  }
  CHECK_FALSE(label_from_int(2).has_value());
  CHECK_FALSE(parse_label("maybe").has_value());
}

TEST_CASE("minimal well-formed file parses to 3x2 with no unusable rows") {
  const AnnotationMatrix m = parse(kSmall);
  CHECK(m.image_count() == 3);
  CHECK(m.attribute_count() == 2);
  CHECK(m.unusable_count() == 0);
  CHECK(m.at("000001.jpg", "Male") == LabelValue::True);
  CHECK(m.at("000002.jpg", "Smiling") == LabelValue::False);
  CHECK(m.attributes() == std::vector<std::string>{"Male", "Smiling"});
}

TEST_CASE("ingest rejects malformed files with the documented codes") {
  SUBCASE("out-of-alphabet token names row and column") {
    try {
      parse("2\nA B\nx.jpg 1 -1\ny.jpg 2 1\n");
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadValue);
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("column 1 (A)") != std::string::npos);
    }
  }
  SUBCASE("zero is only valid in the extended format") {
    CHECK(code_of([] { parse("1\nA\nx.jpg 0\n"); }) == ErrorCode::BadValue);
    CHECK(parse("1\nA\nx.jpg 0\n", AttributeFormat::Extended).at("x.jpg", "A") ==
          LabelValue::InfoNotVisible);
  }
  SUBCASE("declared count must match") {
    CHECK(code_of([] { parse("3\nA\nx.jpg 1\ny.jpg 1\n"); }) == ErrorCode::CountMismatch);
    CHECK(code_of([] { parse("1\nA\nx.jpg 1\ny.jpg 1\n"); }) == ErrorCode::CountMismatch);
  }
  SUBCASE("row width must match the header") {
    CHECK(code_of([] { parse("1\nA B\nx.jpg 1\n"); }) == ErrorCode::Malformed);
  }
  SUBCASE("duplicate image ids") {
    CHECK(code_of([] { parse("2\nA\nx.jpg 1\nx.jpg 1\n"); }) == ErrorCode::DuplicateId);
  }
  SUBCASE("duplicate attribute names") {
    CHECK(code_of([] { parse("1\nA A\nx.jpg 1 1\n"); }) == ErrorCode::DuplicateId);
  }
  SUBCASE("missing header") {
    CHECK(code_of([] { parse(""); }) == ErrorCode::Malformed);
    CHECK(code_of([] { parse("abc\nA\n"); }) == ErrorCode::Malformed);
  }
}

TEST_CASE("full-size CelebA layout: 202599 rows x 40 attributes") {
  std::ostringstream text;
  text << "202599\n";
  for (int a = 0; a < 40; ++a) text << "attr" << a << ' ';
  text << '\n';
  Rng rng(7);
  for (int i = 1; i <= 202599; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%06d.jpg", i);
    text << id;
    for (int a = 0; a < 40; ++a) text << (rng.bernoulli(0.3) ? "  1" : " -1");
    text << '\n';
  }
  const AnnotationMatrix m = parse(text.str());
  CHECK(m.image_count() == 202599);
  CHECK(m.attribute_count() == 40);
}

TEST_CASE("unusable images are never handed out") {
  AnnotationMatrix m = parse(kSmall);
  m.set_unusable(1, true);
  CHECK(code_of([&] { (void)m.at(1, 0); }) == ErrorCode::ImageUnusable);
  CHECK(m.usable_images() == std::vector<std::size_t>{0, 2});
  CHECK(m.unusable_count() == 1);
  CHECK(code_of([&] { (void)m.at("nope.jpg", "Male"); }) == ErrorCode::UnknownImage);
  CHECK(code_of([&] { (void)m.at("000001.jpg", "Bald"); }) == ErrorCode::UnknownAttribute);
}

TEST_CASE("apply_label logs edits in order and the last write wins") {
  AnnotationMatrix m = parse(kSmall);
  ProvenanceLog log;
  apply_label(m, log, "000001.jpg", "Male", LabelValue::False, "alice", "2026-01-01T00:00:00Z");
  CHECK(log.size() == 1);
  CHECK(log.entries()[0].old_value == LabelValue::True);
  CHECK(log.entries()[0].new_value == LabelValue::False);
  apply_label(m, log, "000001.jpg", "Male", LabelValue::InfoNotVisible, "bob",
              "2026-01-01T00:00:01Z");
  CHECK(log.size() == 2);
  CHECK(log.entries()[1].source == "bob");
  CHECK(m.at("000001.jpg", "Male") == LabelValue::InfoNotVisible);

  mark_unusable(m, log, "000002.jpg", true, "carol");
  CHECK(code_of([&] { apply_label(m, log, "000002.jpg", "Male", LabelValue::True, "x"); }) ==
        ErrorCode::ImageUnusable);
  CHECK(log.size() == 3);
  CHECK(code_of([&] { apply_label(m, log, "000001.jpg", "Bald", LabelValue::True, "x"); }) ==
        ErrorCode::UnknownAttribute);
  CHECK(code_of([&] { apply_label(m, log, "nope", "Male", LabelValue::True, "x"); }) ==
        ErrorCode::UnknownImage);
}

TEST_CASE("provenance lines have six tab-separated fields and round-trip") {
  ProvenanceEntry e;
  e.timestamp = "2026-02-03T04:05:06Z";
  e.image_id = "img_7.jpg";
  e.attribute = "MSO";
  e.old_value = LabelValue::True;
  e.new_value = LabelValue::False;
  e.source = "annotator-1";
  const std::string line = ProvenanceLog::format_line(e);
  CHECK(std::count(line.begin(), line.end(), '\t') == 5);
  const ProvenanceEntry back = ProvenanceLog::parse_line(line);
  CHECK(back.image_id == e.image_id);
  CHECK(back.attribute == e.attribute);
  CHECK(back.old_value == e.old_value);
  CHECK(back.new_value == e.new_value);
  CHECK(back.source == e.source);
  CHECK(code_of([] { ProvenanceLog::parse_line("a\tb\tc"); }) == ErrorCode::Malformed);
}

TEST_CASE("replaying the log over the snapshot reproduces the matrix") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::ostringstream text;
    const int n = 20, width = 5;
    text << n << "\nA B C D E\n";
    for (int i = 0; i < n; ++i) {
      text << "img" << i;
      for (int a = 0; a < width; ++a) text << (rng.bernoulli(0.5) ? " 1" : " -1");
      text << '\n';
    }
    const AnnotationMatrix snapshot = parse(text.str());
    AnnotationMatrix current = snapshot;
    ProvenanceLog log;
    for (int step = 0; step < 60; ++step) {
      const auto i = static_cast<std::size_t>(rng.below(n));
      const std::string id = current.image(i).image_id;
      if (rng.bernoulli(0.1)) {
        mark_unusable(current, log, id, !current.image(i).unusable, "u");
      } else if (!current.image(i).unusable) {
        const auto a = static_cast<std::size_t>(rng.below(width));
        const auto v = label_from_int(static_cast<int>(rng.below(3)) - 1).value();
        apply_label(current, log, id, current.attributes()[a], v, "e");
      }
    }
    // Through text, as the project stores it.
    std::ostringstream saved;
    log.write(saved);
    std::istringstream reread(saved.str());
    CHECK(replay(snapshot, ProvenanceLog::read(reread)) == current);
  }
}

TEST_CASE("export writes the extended format and a sidecar, and round-trips") {
  TempDir dir;
  AnnotationMatrix m = parse(kSmall, AttributeFormat::Extended);
  ProvenanceLog log;
  apply_label(m, log, "000003.jpg", "Smiling", LabelValue::InfoNotVisible, "t");
  mark_unusable(m, log, "000002.jpg", true, "t");

  const auto path = dir / "clean.txt";
  const ExportSummary s = export_cleaned(m, path);
  CHECK(s.rows == 2);
  CHECK(s.unusable_images == 1);
  CHECK(s.info_not_visible_cells == 1);
  REQUIRE(s.sidecar.has_value());
  CHECK(*s.sidecar == dir / "clean.unusable.txt");
  CHECK(slurp(*s.sidecar) == "000002.jpg\n");
  CHECK(slurp(path).find("000002.jpg") == std::string::npos);

  const AnnotationMatrix back = ingest_attribute_file(path, AttributeFormat::Extended);
  CHECK(back == m);

  SUBCASE("no unusable images means no sidecar, and a stale one is removed") {
    mark_unusable(m, log, "000002.jpg", false, "t");
    const ExportSummary again = export_cleaned(m, path);
    CHECK_FALSE(again.sidecar.has_value());
    CHECK_FALSE(std::filesystem::exists(dir / "clean.unusable.txt"));
  }
}

TEST_CASE("export counts match a cleaned-dataset shape of 166 unusable and 797 blanks") {
  TempDir dir;
  std::vector<std::string> attrs;
  for (int a = 0; a < 40; ++a) attrs.push_back("a" + std::to_string(a));
  AnnotationMatrix m(attrs);
  std::vector<LabelValue> row(40, LabelValue::False);
  for (int i = 0; i < 2000; ++i) m.add_image({"img" + std::to_string(i), std::nullopt, false}, row);
  Rng rng(3);
  std::size_t blanks = 0;
  for (std::size_t i = 166; blanks < 797; ++i) {
    m.set(i % 2000, i % 40, LabelValue::InfoNotVisible);
    ++blanks;
  }
  for (std::size_t i = 0; i < 166; ++i) m.set_unusable(1000 + i, true);
  const ExportSummary s = export_cleaned(m, dir / "out.txt");
  CHECK(s.unusable_images == 166);
  CHECK(s.info_not_visible_cells == 797);
  const AnnotationMatrix back = ingest_attribute_file(dir / "out.txt", AttributeFormat::Extended);
  CHECK(back.unusable_count() == 166);
  CHECK(back == m);
}

TEST_CASE("partition and identity side files") {
  TempDir dir;
  AnnotationMatrix m = parse(kSmall);
  dir.write("part.txt", "000001.jpg 0\n000002.jpg 1\n000003.jpg 2\nother.jpg 0\n");
  dir.write("ids.txt", "000001.jpg 17\n000003.jpg 17\n");
  CHECK(load_partition(m, dir / "part.txt") == 3);
  CHECK(m.split(0) == Split::Train);
  CHECK(m.split(1) == Split::Val);
  CHECK(m.split(2) == Split::Test);
  CHECK(load_identities(m, dir / "ids.txt") == 2);
  CHECK(m.image(2).identity_id == std::optional<std::string>("17"));
  dir.write("bad.txt", "000001.jpg 5\n");
  CHECK(code_of([&] { load_partition(m, dir / "bad.txt"); }) == ErrorCode::BadValue);
}
