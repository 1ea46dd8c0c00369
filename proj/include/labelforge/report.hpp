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

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>

#include "labelforge/audit.hpp"
#include "labelforge/consistency.hpp"
#include "labelforge/duplicates.hpp"
#include "labelforge/workflow.hpp"

namespace labelforge {

/// Tables are tab-separated with a header row; json-lines emit one object
/// per row with the same field names.
enum class OutputFormat { Table, JsonLines };
std::optional<OutputFormat> parse_output_format(std::string_view text);

void write_disagreement_report(std::ostream& out, std::span<const DisagreementReport> rows,
                               OutputFormat format);
/// Columns: attribute, n_differ, n_n, n_p, p_in (three decimals).
void write_pin_report(std::ostream& out, std::span<const PinRow> rows, OutputFormat format);
/// Columns: attribute, N_n, N_p, Err_n, Err_p (percent, two decimals), the
/// Wilson bounds of each, and the info-not-visible counts.
void write_error_rate_report(std::ostream& out, std::span<const ErrorRateReport> rows,
                             OutputFormat format);
/// Columns: round, votes, size, decision, audited_error.
void write_round_summary(std::ostream& out, const RoundSummary& summary, OutputFormat format);
void write_pairs(std::ostream& out, std::span<const PairRecord> pairs, OutputFormat format);

}  // namespace labelforge
