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

#include "labelforge/report.hpp"

#include <ostream>

#include "json.hpp"
#include "labelforge/text.hpp"

namespace labelforge {

using nlohmann::json;

std::optional<OutputFormat> parse_output_format(std::string_view text) {
  if (text == "table") return OutputFormat::Table;
  if (text == "json-lines" || text == "jsonl") return OutputFormat::JsonLines;
  return std::nullopt;
}

void write_disagreement_report(std::ostream& out, std::span<const DisagreementReport> rows,
                               OutputFormat format) {
  if (format == OutputFormat::Table) out << "attribute\tn_d\tn_images\tconsistency\ttier\n";
  for (const auto& r : rows) {
    if (format == OutputFormat::Table) {
      out << r.attribute << '\t' << r.n_d << '\t' << r.n_images << '\t'
          << format_fixed(100.0 * r.consistency(), 1) << "%\t" << tier_name(r.tier) << '\n';
    } else {
      out << json{{"attribute", r.attribute}, {"n_d", r.n_d}, {"n_images", r.n_images},
                  {"consistency", r.consistency()}, {"tier", tier_name(r.tier)}}
                 .dump()
          << '\n';
    }
  }
}

void write_pin_report(std::ostream& out, std::span<const PinRow> rows, OutputFormat format) {
  if (format == OutputFormat::Table) out << "attribute\tn_differ\tn_n\tn_p\tp_in\n";
  for (const auto& r : rows) {
    const auto& c = r.counts;
    if (format == OutputFormat::Table) {
      out << c.attribute << '\t' << c.n_differ << '\t' << c.n_n << '\t' << c.n_p << '\t'
          << (r.p_in ? format_fixed(*r.p_in, 3) : "n/a") << '\n';
    } else {
      out << json{{"attribute", c.attribute}, {"n_differ", c.n_differ}, {"n_n", c.n_n},
                  {"n_p", c.n_p}, {"n_total", c.n_total},
                  {"p_in", r.p_in ? json(*r.p_in) : json(nullptr)}}
                 .dump()
          << '\n';
    }
  }
}

namespace {

std::string pct(const std::optional<StratumError>& s, double StratumError::*field) {
  return s ? format_fixed(100.0 * ((*s).*field), 2) + "%" : "-";
}

json stratum_json(const std::optional<StratumError>& s) {
  if (!s) return nullptr;
  return {{"n", s->n},
          {"mismatches", s->mismatches},
          {"info_not_visible", s->info_not_visible},
          {"error", s->rate},
          {"ci", {s->ci.lo, s->ci.hi}}};
}

}  // namespace

void write_error_rate_report(std::ostream& out, std::span<const ErrorRateReport> rows,
                             OutputFormat format) {
  if (format == OutputFormat::Table) {
    out << "attribute\tN_n\tN_p\tErr_n\tErr_p\tErr_n_ci\tErr_p_ci\tInv_n\tInv_p\n";
  }
  for (const auto& r : rows) {
    if (format == OutputFormat::JsonLines) {
      out << json{{"attribute", r.attribute},
                  {"negative", stratum_json(r.negative)},
                  {"positive", stratum_json(r.positive)}}
                 .dump()
          << '\n';
      continue;
    }
    auto n = [](const std::optional<StratumError>& s) {
      return s ? std::to_string(s->n) : std::string("-");
    };
    auto ci = [](const std::optional<StratumError>& s) {
      return s ? "[" + format_fixed(100.0 * s->ci.lo, 2) + ", " + format_fixed(100.0 * s->ci.hi, 2) +
                     "]"
               : std::string("-");
    };
    auto inv = [](const std::optional<StratumError>& s) {
      return s ? std::to_string(s->info_not_visible) : std::string("-");
    };
    out << r.attribute << '\t' << n(r.negative) << '\t' << n(r.positive) << '\t'
        << pct(r.negative, &StratumError::rate) << '\t' << pct(r.positive, &StratumError::rate)
        << '\t' << ci(r.negative) << '\t' << ci(r.positive) << '\t' << inv(r.negative) << '\t'
        << inv(r.positive) << '\n';
  }
}

void write_round_summary(std::ostream& out, const RoundSummary& summary, OutputFormat format) {
  if (format == OutputFormat::Table) out << "round\tvotes\tsize\tdecision\taudited_error\n";
  for (const auto& b : summary.bins) {
    if (format == OutputFormat::Table) {
      out << summary.round << '\t' << b.votes << '\t' << b.size << '\t'
          << bin_decision_name(b.decision) << '\t'
          << (b.audited_error ? format_fixed(100.0 * *b.audited_error, 2) + "%" : "-") << '\n';
    } else {
      out << json{{"round", summary.round}, {"votes", b.votes}, {"size", b.size},
                  {"decision", bin_decision_name(b.decision)},
                  {"audited_error", b.audited_error ? json(*b.audited_error) : json(nullptr)}}
                 .dump()
          << '\n';
    }
  }
}

void write_pairs(std::ostream& out, std::span<const PairRecord> pairs, OutputFormat format) {
  if (format == OutputFormat::Table) out << "pair_id\timage_a\timage_b\tsimilarity\tverdict\treviewer\n";
  for (const auto& p : pairs) {
    const std::string verdict =
        p.in_arbitration ? "ARBITRATION" : std::string(verdict_name(p.verdict));
    if (format == OutputFormat::Table) {
      out << p.pair_id << '\t' << p.pair.image_a << '\t' << p.pair.image_b << '\t'
          << format_fixed(p.pair.similarity, 4) << '\t' << verdict << '\t' << p.reviewer << '\n';
    } else {
      out << json{{"pair_id", p.pair_id}, {"image_a", p.pair.image_a},
                  {"image_b", p.pair.image_b}, {"similarity", p.pair.similarity},
                  {"verdict", verdict}, {"reviewer", p.reviewer}}
                 .dump()
          << '\n';
    }
  }
}

}  // namespace labelforge
