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

#include "labelforge/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "labelforge/error.hpp"
#include "labelforge/text.hpp"

namespace labelforge {

std::optional<LabelValue> label_from_int(int code) {
  switch (code) {
    case 1: return LabelValue::True;
    case -1: return LabelValue::False;
    case 0: return LabelValue::InfoNotVisible;
    default: return std::nullopt;
  }
}

std::string_view label_name(LabelValue v) {
  switch (v) {
    case LabelValue::True: return "TRUE";
    case LabelValue::False: return "FALSE";
    case LabelValue::InfoNotVisible: return "INFO_NOT_VISIBLE";
  }
  return "?";
}

std::optional<LabelValue> parse_label(std::string_view text) {
  if (text == "1" || text == "TRUE" || text == "true") return LabelValue::True;
  if (text == "-1" || text == "FALSE" || text == "false") return LabelValue::False;
  if (text == "0" || text == "INFO_NOT_VISIBLE" || text == "info_not_visible") {
    return LabelValue::InfoNotVisible;
  }
  return std::nullopt;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

// ---------------------------------------------------------------------------

AnnotationMatrix::AnnotationMatrix(std::vector<std::string> attributes)
    : attributes_(std::move(attributes)) {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (!attribute_lookup_.emplace(attributes_[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "attribute '" + attributes_[i] + "' declared twice");
    }
  }
}

std::size_t AnnotationMatrix::add_image(ImageRecord record, std::span<const LabelValue> row) {
  if (image_lookup_.contains(record.image_id)) {
    throw Error(ErrorCode::DuplicateId, "image '" + record.image_id + "' appears twice");
  }
  if (row.size() != attributes_.size() && !(record.unusable && row.empty())) {
    throw Error(ErrorCode::Malformed, "image '" + record.image_id + "' has " +
                                          std::to_string(row.size()) + " values, expected " +
                                          std::to_string(attributes_.size()));
  }
  const std::size_t index = images_.size();
  image_lookup_.emplace(record.image_id, index);
  images_.push_back(std::move(record));
  splits_.emplace_back();
  if (row.empty()) {
    values_.insert(values_.end(), attributes_.size(), LabelValue::InfoNotVisible);
  } else {
    values_.insert(values_.end(), row.begin(), row.end());
  }
  return index;
}

std::optional<std::size_t> AnnotationMatrix::find_image(std::string_view id) const {
  auto it = image_lookup_.find(id);
  if (it == image_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> AnnotationMatrix::find_attribute(std::string_view name) const {
  auto it = attribute_lookup_.find(name);
  if (it == attribute_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t AnnotationMatrix::image_index(std::string_view id) const {
  if (auto i = find_image(id)) return *i;
  throw Error(ErrorCode::UnknownImage, "no image '" + std::string(id) + "'");
}

std::size_t AnnotationMatrix::attribute_index(std::string_view name) const {
  if (auto i = find_attribute(name)) return *i;
  throw Error(ErrorCode::UnknownAttribute, "no attribute '" + std::string(name) + "'");
}

void AnnotationMatrix::check_cell(std::size_t image, std::size_t attribute) const {
  if (image >= images_.size()) throw Error(ErrorCode::UnknownImage, "image index out of range");
  if (attribute >= attributes_.size()) {
    throw Error(ErrorCode::UnknownAttribute, "attribute index out of range");
  }
  if (images_[image].unusable) {
    throw Error(ErrorCode::ImageUnusable, "image '" + images_[image].image_id + "' is unusable");
  }
}

LabelValue AnnotationMatrix::at(std::size_t image, std::size_t attribute) const {
  check_cell(image, attribute);
  return values_[image * attributes_.size() + attribute];
}

LabelValue AnnotationMatrix::at(std::string_view image, std::string_view attribute) const {
  return at(image_index(image), attribute_index(attribute));
}

void AnnotationMatrix::set(std::size_t image, std::size_t attribute, LabelValue value) {
  check_cell(image, attribute);
  values_[image * attributes_.size() + attribute] = value;
}

void AnnotationMatrix::set_unusable(std::size_t image, bool unusable) {
  images_.at(image).unusable = unusable;
}

void AnnotationMatrix::set_identity(std::size_t image, std::string identity) {
  images_.at(image).identity_id = std::move(identity);
}

void AnnotationMatrix::set_split(std::size_t image, Split split) { splits_.at(image) = split; }

std::vector<std::size_t> AnnotationMatrix::usable_images() const {
  std::vector<std::size_t> out;
  out.reserve(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (!images_[i].unusable) out.push_back(i);
  }
  return out;
}

std::size_t AnnotationMatrix::unusable_count() const {
  return static_cast<std::size_t>(
      std::count_if(images_.begin(), images_.end(), [](const auto& r) { return r.unusable; }));
}

std::size_t AnnotationMatrix::count_value(LabelValue value) const {
  std::size_t n = 0;
  for (std::size_t i : usable_images()) {
    for (std::size_t a = 0; a < attributes_.size(); ++a) {
      n += values_[i * attributes_.size() + a] == value;
    }
  }
  return n;
}

bool operator==(const AnnotationMatrix& a, const AnnotationMatrix& b) {
  if (a.attributes_ != b.attributes_) return false;
  const auto ua = a.usable_images();
  const auto ub = b.usable_images();
  if (ua.size() != ub.size()) return false;
  const std::size_t width = a.attributes_.size();
  for (std::size_t k = 0; k < ua.size(); ++k) {
    if (a.images_[ua[k]].image_id != b.images_[ub[k]].image_id) return false;
    if (!std::equal(a.values_.begin() + ua[k] * width, a.values_.begin() + (ua[k] + 1) * width,
                    b.values_.begin() + ub[k] * width)) {
      return false;
    }
  }
  std::set<std::string_view> da, db;
  for (const auto& r : a.images_) if (r.unusable) da.insert(r.image_id);
  for (const auto& r : b.images_) if (r.unusable) db.insert(r.image_id);
  return da == db;
}

// ---------------------------------------------------------------------------
// Attribute list IO
// ---------------------------------------------------------------------------

AnnotationMatrix parse_attribute_list(std::istream& in, AttributeFormat format,
                                      std::string_view source) {
  const std::string where(source);
  std::string line;
  std::size_t line_no = 0;

  auto next_nonblank = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!split_ws(out).empty()) return true;
    }
    return false;
  };

  if (!next_nonblank(line)) throw Error(ErrorCode::Malformed, where + ": empty file");
  const auto count_tokens = split_ws(line);
  std::size_t declared = 0;
  if (count_tokens.size() != 1 || !parse_number(count_tokens[0], declared)) {
    throw Error(ErrorCode::Malformed, where + ":" + std::to_string(line_no) +
                                          ": expected image count, got '" + line + "'");
  }
  if (!next_nonblank(line)) {
    throw Error(ErrorCode::Malformed, where + ": missing attribute header line");
  }
  std::vector<std::string> names;
  for (auto tok : split_ws(line)) names.emplace_back(tok);
  AnnotationMatrix matrix(names);

  std::vector<LabelValue> row(names.size());
  std::size_t rows = 0;
  while (next_nonblank(line)) {
    const auto tokens = split_ws(line);
    ++rows;
    if (tokens.size() != names.size() + 1) {
      throw Error(ErrorCode::Malformed,
                  where + ":" + std::to_string(line_no) + ": row has " +
                      std::to_string(tokens.size() - 1) + " values, expected " +
                      std::to_string(names.size()));
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      const std::string_view tok = tokens[c + 1];
      std::optional<LabelValue> v;
      if (tok == "1") v = LabelValue::True;
      else if (tok == "-1") v = LabelValue::False;
      else if (tok == "0" && format == AttributeFormat::Extended) v = LabelValue::InfoNotVisible;
      if (!v) {
        throw Error(ErrorCode::BadValue, where + ":" + std::to_string(line_no) + ": row " +
                                             std::to_string(rows) + " column " +
                                             std::to_string(c + 1) + " (" + names[c] +
                                             "): token '" + std::string(tok) + "'");
      }
      row[c] = *v;
    }
    matrix.add_image(ImageRecord{std::string(tokens[0]), std::nullopt, false}, row);
  }
  if (rows != declared) {
    throw Error(ErrorCode::CountMismatch, where + ": header declares " + std::to_string(declared) +
                                              " rows, found " + std::to_string(rows));
  }
  return matrix;
}

std::filesystem::path sidecar_path(const std::filesystem::path& attribute_file) {
  auto p = attribute_file;
  p.replace_filename(attribute_file.stem().string() + ".unusable.txt");
  return p;
}

AnnotationMatrix ingest_attribute_file(const std::filesystem::path& path, AttributeFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  AnnotationMatrix matrix = parse_attribute_list(in, format, path.string());
  if (format == AttributeFormat::Extended) {
    const auto side = sidecar_path(path);
    std::ifstream sin(side);
    if (sin) {
      std::string line;
      while (std::getline(sin, line)) {
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        const std::string id(tokens[0]);
        if (auto i = matrix.find_image(id)) {
          matrix.set_unusable(*i, true);
        } else {
          matrix.add_image(ImageRecord{id, std::nullopt, true}, {});
        }
      }
    }
  }
  return matrix;
}

void write_attribute_list(std::ostream& out, const AnnotationMatrix& matrix) {
  const auto usable = matrix.usable_images();
  out << usable.size() << '\n';
  const auto& names = matrix.attributes();
  for (std::size_t a = 0; a < names.size(); ++a) out << (a ? " " : "") << names[a];
  out << '\n';
  for (std::size_t i : usable) {
    out << matrix.image(i).image_id;
    for (std::size_t a = 0; a < names.size(); ++a) out << ' ' << to_int(matrix.at(i, a));
    out << '\n';
  }
}

ExportSummary export_cleaned(const AnnotationMatrix& matrix, const std::filesystem::path& path) {
  ExportSummary summary;
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
    write_attribute_list(out, matrix);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
  }
  summary.rows = matrix.usable_images().size();
  summary.info_not_visible_cells = matrix.count_value(LabelValue::InfoNotVisible);
  summary.unusable_images = matrix.unusable_count();

  const auto side = sidecar_path(path);
  std::error_code ec;
  if (summary.unusable_images == 0) {
    std::filesystem::remove(side, ec);
    return summary;
  }
  std::ofstream out(side, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + side.string() + "'");
  for (std::size_t i = 0; i < matrix.image_count(); ++i) {
    if (matrix.image(i).unusable) out << matrix.image(i).image_id << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + side.string() + "'");
  summary.sidecar = side;
  return summary;
}

namespace {

template <typename Apply>
std::size_t read_pairs_file(const std::filesystem::path& path, Apply apply) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t applied = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw Error(ErrorCode::Malformed,
                  path.string() + ":" + std::to_string(line_no) + ": expected two columns");
    }
    applied += apply(tokens[0], tokens[1], line_no);
  }
  return applied;
}

}  // namespace

std::size_t load_partition(AnnotationMatrix& matrix, const std::filesystem::path& path) {
  return read_pairs_file(path, [&](std::string_view id, std::string_view tag, std::size_t line_no) {
    Split s;
    if (tag == "0") s = Split::Train;
    else if (tag == "1") s = Split::Val;
    else if (tag == "2") s = Split::Test;
    else {
      throw Error(ErrorCode::BadValue, path.string() + ":" + std::to_string(line_no) +
                                           ": partition tag '" + std::string(tag) + "'");
    }
    auto i = matrix.find_image(id);
    if (!i) return 0;
    matrix.set_split(*i, s);
    return 1;
  });
}

std::size_t load_identities(AnnotationMatrix& matrix, const std::filesystem::path& path) {
  return read_pairs_file(path, [&](std::string_view id, std::string_view identity, std::size_t) {
    auto i = matrix.find_image(id);
    if (!i) return 0;
    matrix.set_identity(*i, std::string(identity));
    return 1;
  });
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

const ProvenanceEntry& ProvenanceLog::append(ProvenanceEntry entry) {
  entries_.push_back(std::move(entry));
  return entries_.back();
}

std::string ProvenanceLog::format_line(const ProvenanceEntry& e) {
  std::string old_text, new_text;
  if (e.is_usability_edit()) {
    old_text = e.old_unusable ? "unusable" : "usable";
    new_text = e.new_unusable ? "unusable" : "usable";
  } else {
    old_text = std::to_string(to_int(e.old_value));
    new_text = std::to_string(to_int(e.new_value));
  }
  return e.timestamp + '\t' + e.image_id + '\t' + e.attribute + '\t' + old_text + '\t' +
         new_text + '\t' + e.source;
}

ProvenanceEntry ProvenanceLog::parse_line(std::string_view line) {
  const auto fields = split_char(line, '\t');
  if (fields.size() != 6) {
    throw Error(ErrorCode::Malformed, "provenance record needs 6 tab-separated fields: '" +
                                          std::string(line) + "'");
  }
  ProvenanceEntry e;
  e.timestamp = fields[0];
  e.image_id = fields[1];
  e.attribute = fields[2];
  e.source = fields[5];
  if (e.is_usability_edit()) {
    auto parse_usability = [&](std::string_view t) {
      if (t == "usable") return false;
      if (t == "unusable") return true;
      throw Error(ErrorCode::BadValue, "usability value '" + std::string(t) + "'");
    };
    e.old_unusable = parse_usability(fields[3]);
    e.new_unusable = parse_usability(fields[4]);
  } else {
    auto old_v = parse_label(fields[3]);
    auto new_v = parse_label(fields[4]);
    if (!old_v || !new_v) {
      throw Error(ErrorCode::BadValue, "provenance label in '" + std::string(line) + "'");
    }
    e.old_value = *old_v;
    e.new_value = *new_v;
  }
  return e;
}

void ProvenanceLog::write(std::ostream& out) const {
  for (const auto& e : entries_) out << format_line(e) << '\n';
}

ProvenanceLog ProvenanceLog::read(std::istream& in) {
  ProvenanceLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    log.append(parse_line(line));
  }
  return log;
}

ProvenanceLog ProvenanceLog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  return read(in);
}

void ProvenanceLog::append_to_file(const std::filesystem::path& path, const ProvenanceEntry& entry) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot append to '" + path.string() + "'");
  out << format_line(entry) << '\n';
}

std::string iso8601_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const std::time_t t = system_clock::to_time_t(now);
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

const ProvenanceEntry& apply_label(AnnotationMatrix& matrix, ProvenanceLog& log,
                                   std::string_view image_id, std::string_view attribute,
                                   LabelValue value, std::string_view source,
                                   std::string timestamp) {
  const std::size_t i = matrix.image_index(image_id);
  const std::size_t a = matrix.attribute_index(attribute);
  const LabelValue old = matrix.at(i, a);  // throws IMAGE_UNUSABLE
  matrix.set(i, a, value);
  ProvenanceEntry e;
  e.timestamp = std::move(timestamp);
  e.image_id = std::string(image_id);
  e.attribute = std::string(attribute);
  e.old_value = old;
  e.new_value = value;
  e.source = std::string(source);
  return log.append(std::move(e));
}

const ProvenanceEntry& mark_unusable(AnnotationMatrix& matrix, ProvenanceLog& log,
                                     std::string_view image_id, bool unusable,
                                     std::string_view source, std::string timestamp) {
  const std::size_t i = matrix.image_index(image_id);
  ProvenanceEntry e;
  e.timestamp = std::move(timestamp);
  e.image_id = std::string(image_id);
  e.attribute = std::string(kUnusableAttribute);
  e.old_unusable = matrix.image(i).unusable;
  e.new_unusable = unusable;
  e.source = std::string(source);
  matrix.set_unusable(i, unusable);
  return log.append(std::move(e));
}

AnnotationMatrix replay(AnnotationMatrix snapshot, const ProvenanceLog& log) {
  for (const auto& e : log.entries()) {
    const std::size_t i = snapshot.image_index(e.image_id);
    if (e.is_usability_edit()) {
      snapshot.set_unusable(i, e.new_unusable);
    } else {
      snapshot.set(i, snapshot.attribute_index(e.attribute), e.new_value);
    }
  }
  return snapshot;
}

}  // namespace labelforge
