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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace labelforge {

/// Three-state attribute value. The underlying integer is the on-disk
/// encoding: 1 = true, -1 = false, 0 = information not visible.
enum class LabelValue : std::int8_t { False = -1, InfoNotVisible = 0, True = 1 };

constexpr int to_int(LabelValue v) { return static_cast<int>(v); }
std::optional<LabelValue> label_from_int(int code);
std::string_view label_name(LabelValue v);  // "TRUE" / "FALSE" / "INFO_NOT_VISIBLE"
std::optional<LabelValue> parse_label(std::string_view text);  // names or 1/-1/0
constexpr bool is_binary(LabelValue v) { return v != LabelValue::InfoNotVisible; }
constexpr LabelValue from_bool(bool b) { return b ? LabelValue::True : LabelValue::False; }

enum class Split { Train, Val, Test };
std::string_view split_name(Split s);

struct ImageRecord {
  std::string image_id;
  std::optional<std::string> identity_id;
  bool unusable = false;
};

enum class AttributeFormat { CelebaOriginal, Extended };

/// Dense image x attribute label grid. Cells of unusable images are never
/// handed out: every accessor that reads a cell rejects them.
class AnnotationMatrix {
public:
  AnnotationMatrix() = default;
  explicit AnnotationMatrix(std::vector<std::string> attributes);

  /// Appends an image. `row` must have one value per attribute unless the
  /// record is unusable, in which case it may be empty.
  std::size_t add_image(ImageRecord record, std::span<const LabelValue> row);

  const std::vector<std::string>& attributes() const { return attributes_; }
  std::size_t attribute_count() const { return attributes_.size(); }
  std::size_t image_count() const { return images_.size(); }
  const ImageRecord& image(std::size_t index) const { return images_.at(index); }

  std::optional<std::size_t> find_image(std::string_view id) const;
  std::optional<std::size_t> find_attribute(std::string_view name) const;
  std::size_t image_index(std::string_view id) const;
  std::size_t attribute_index(std::string_view name) const;

  LabelValue at(std::size_t image, std::size_t attribute) const;
  LabelValue at(std::string_view image, std::string_view attribute) const;
  /// Raw write, no provenance. Prefer apply_label() for anything user-facing.
  void set(std::size_t image, std::size_t attribute, LabelValue value);

  void set_unusable(std::size_t image, bool unusable);
  void set_identity(std::size_t image, std::string identity);
  void set_split(std::size_t image, Split split);
  std::optional<Split> split(std::size_t image) const { return splits_.at(image); }

  /// Indices of images that metrics may read, in matrix order.
  std::vector<std::size_t> usable_images() const;
  std::size_t unusable_count() const;
  std::size_t count_value(LabelValue value) const;

  /// Equality on what an export preserves: attribute order, the ordered
  /// usable rows and their values, and the unusable id set.
  friend bool operator==(const AnnotationMatrix& a, const AnnotationMatrix& b);

private:
  void check_cell(std::size_t image, std::size_t attribute) const;

  std::vector<ImageRecord> images_;
  std::vector<std::string> attributes_;
  std::vector<LabelValue> values_;  // row-major, images_ x attributes_
  std::vector<std::optional<Split>> splits_;
  std::map<std::string, std::size_t, std::less<>> image_lookup_;
  std::map<std::string, std::size_t, std::less<>> attribute_lookup_;
};

/// Parses the CelebA attribute list layout: image count, attribute names,
/// then "filename v1 ... vN" rows. `source` names the input in messages.
AnnotationMatrix parse_attribute_list(std::istream& in, AttributeFormat format,
                                      std::string_view source = "<stream>");

/// Reads an attribute file. For the extended format a sidecar
/// "<stem>.unusable.txt" next to the file is consumed if present.
AnnotationMatrix ingest_attribute_file(const std::filesystem::path& path, AttributeFormat format);

std::filesystem::path sidecar_path(const std::filesystem::path& attribute_file);

struct ExportSummary {
  std::size_t rows = 0;
  std::size_t info_not_visible_cells = 0;
  std::size_t unusable_images = 0;
  std::optional<std::filesystem::path> sidecar;
};

/// Writes the extended format. Unusable images go to the sidecar only; a
/// stale sidecar is removed when there are none.
ExportSummary export_cleaned(const AnnotationMatrix& matrix, const std::filesystem::path& path);
void write_attribute_list(std::ostream& out, const AnnotationMatrix& matrix);

/// CelebA list_eval_partition layout: "filename 0|1|2" (train/val/test).
/// Ids not in the matrix are ignored; returns the number applied.
std::size_t load_partition(AnnotationMatrix& matrix, const std::filesystem::path& path);
/// CelebA identity layout: "filename identity". Returns the number applied.
std::size_t load_identities(AnnotationMatrix& matrix, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

/// Attribute column value used for whole-image usability changes.
inline constexpr std::string_view kUnusableAttribute = "@unusable";

struct ProvenanceEntry {
  std::string timestamp;  // ISO 8601, UTC
  std::string image_id;
  std::string attribute;  // kUnusableAttribute for usability edits
  LabelValue old_value = LabelValue::InfoNotVisible;
  LabelValue new_value = LabelValue::InfoNotVisible;
  bool old_unusable = false;
  bool new_unusable = false;
  std::string source;

  bool is_usability_edit() const { return attribute == kUnusableAttribute; }
};

/// Append-only edit history. One tab-separated line per entry:
/// timestamp, image, attribute, old, new, source.
class ProvenanceLog {
public:
  const ProvenanceEntry& append(ProvenanceEntry entry);
  const std::vector<ProvenanceEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  static std::string format_line(const ProvenanceEntry& entry);
  static ProvenanceEntry parse_line(std::string_view line);

  void write(std::ostream& out) const;
  static ProvenanceLog read(std::istream& in);
  static ProvenanceLog load(const std::filesystem::path& path);  // missing file -> empty log
  /// Appends a single entry to a log file.
  static void append_to_file(const std::filesystem::path& path, const ProvenanceEntry& entry);

private:
  std::vector<ProvenanceEntry> entries_;
};

std::string iso8601_now();

/// Sets one cell and records the edit. Last writer wins.
const ProvenanceEntry& apply_label(AnnotationMatrix& matrix, ProvenanceLog& log,
                                   std::string_view image_id, std::string_view attribute,
                                   LabelValue value, std::string_view source,
                                   std::string timestamp = iso8601_now());

const ProvenanceEntry& mark_unusable(AnnotationMatrix& matrix, ProvenanceLog& log,
                                     std::string_view image_id, bool unusable,
                                     std::string_view source,
                                     std::string timestamp = iso8601_now());

/// Re-applies every entry of `log` on top of `snapshot`.
AnnotationMatrix replay(AnnotationMatrix snapshot, const ProvenanceLog& log);

}  // namespace labelforge
